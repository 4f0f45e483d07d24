#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vda/rng.hpp"

namespace vda {

// Special token ids occupy the first five slots of every vocabulary.
enum SpecialToken : int { kPad = 0, kUnk = 1, kCls = 2, kSep = 3, kMask = 4 };
inline constexpr int kNumSpecials = 5;

// Immutable after build; safely shared across threads.
class Vocab {
public:
    Vocab() = default;
    explicit Vocab(std::vector<std::string> tokens);  // includes the specials

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(int id) const;
    int id(const std::string& token) const;  // kUnk for unknown words
    bool contains(const std::string& token) const;
    bool is_special(int id) const { return id < kNumSpecials; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    // FNV-1a over the token list; checkpoints carry this to detect
    // vocabulary drift between runs.
    uint64_t hash() const;

    void save(const std::string& path) const;  // one token per line, line = id
    static Vocab load(const std::string& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct EncodedExample {
    std::vector<int> ids;                 // [CLS] a... ([SEP] b...)
    std::optional<int> segment_b_start;   // index of first token of sentence b
    int label = 0;
    // Attackable word positions: non-special tokens; for pairs, only the
    // second sentence.
    std::vector<int> attackable;
};

// Lowercases and splits on anything that is not [a-z0-9']; punctuation is
// dropped.
std::vector<std::string> tokenize(const std::string& text);

// Frequency-sorted vocabulary with lexicographic tie-break; words below
// min_freq are dropped. max_size caps the total size including specials.
Vocab build_vocab(const std::vector<std::string>& corpus, int max_size, int min_freq);

EncodedExample encode(const Vocab& vocab, const std::string& text_a,
                      const std::optional<std::string>& text_b, int label, int max_len);

std::string decode(const Vocab& vocab, const std::vector<int>& ids);

struct RawExample {
    std::string text_a;
    std::optional<std::string> text_b;
    int label = 0;
};

// JSONL ingestion; keys are exactly "text"/"label" or
// "text_a"/"text_b"/"label". Malformed lines raise DataError naming the line.
std::vector<RawExample> load_jsonl_raw(const std::string& path);
std::vector<EncodedExample> load_jsonl(const std::string& path, const Vocab& vocab, int max_len);

void save_jsonl(const std::string& path, const std::vector<RawExample>& examples);

// ----------------------------------------------------------------- synthetic

struct CorpusSpec {
    int train_size = 8000;
    int dev_size = 1000;
    int test_size = 1000;
};

// Word lists behind the generator; exposed so tests and the attack demo can
// reason about which words carry the label signal.
struct SyntheticLexicon {
    std::vector<std::vector<std::string>> positive_clusters;  // synonym groups
    std::vector<std::vector<std::string>> negative_clusters;
    std::vector<std::string> nouns;
    std::vector<std::string> adverbs;
    std::vector<std::string> fillers;
    std::vector<std::string> positive_verbs;
    std::vector<std::string> negative_verbs;

    bool is_positive_word(const std::string& w) const;
    bool is_negative_word(const std::string& w) const;
    bool is_indicative(const std::string& w) const { return is_positive_word(w) || is_negative_word(w); }
};

const SyntheticLexicon& synthetic_lexicon();

// Templated sentiment-style corpus with a known word->label signal and
// synonym clusters; exactly balanced labels; deterministic under seed.
// Writes train.jsonl / dev.jsonl / test.jsonl into out_dir.
void generate_synthetic_corpus(uint64_t seed, const CorpusSpec& spec, const std::string& out_dir);

// In-memory variant used by tests.
std::vector<RawExample> generate_synthetic_examples(uint64_t seed, int count);

}  // namespace vda
