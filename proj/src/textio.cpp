#include "vda/textio.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vda/errors.hpp"

namespace vda {

namespace {

const std::vector<std::string> kSpecialTokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

}  // namespace

// ------------------------------------------------------------------- Vocab

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < static_cast<std::size_t>(kNumSpecials) + 1)
        throw ArgumentError("Vocab: need at least the five specials plus one token");
    for (int i = 0; i < kNumSpecials; ++i)
        if (tokens_[i] != kSpecialTokens[i])
            throw ArgumentError("Vocab: token " + std::to_string(i) + " must be " + kSpecialTokens[i]);
    for (int i = 0; i < size(); ++i) {
        auto [it, inserted] = index_.emplace(tokens_[i], i);
        if (!inserted) throw ArgumentError("Vocab: duplicate token " + tokens_[i]);
    }
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw ArgumentError("Vocab::token: id out of range");
    return tokens_[id];
}

int Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const {
    return index_.count(token) > 0;
}

uint64_t Vocab::hash() const {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& t : tokens_) {
        for (char c : t) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ULL;
        }
        h ^= 0xFF;
        h *= 0x100000001B3ULL;
    }
    return h;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("Vocab::save: cannot open " + path);
    for (const auto& t : tokens_) out << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("Vocab::load: cannot open " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return Vocab(std::move(tokens));
}

// --------------------------------------------------------------- tokenizer

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocab build_vocab(const std::vector<std::string>& corpus, int max_size, int min_freq) {
    std::map<std::string, long> freq;
    for (const auto& text : corpus)
        for (auto& w : tokenize(text)) ++freq[w];
    if (freq.empty()) throw DataError("build_vocab: empty corpus");

    std::vector<std::pair<std::string, long>> words(freq.begin(), freq.end());
    std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> tokens = kSpecialTokens;
    for (const auto& [w, f] : words) {
        if (f < min_freq) continue;
        if (static_cast<int>(tokens.size()) >= max_size) break;
        tokens.push_back(w);
    }
    return Vocab(std::move(tokens));
}

// ------------------------------------------------------------------ encode

EncodedExample encode(const Vocab& vocab, const std::string& text_a,
                      const std::optional<std::string>& text_b, int label, int max_len) {
    if (max_len < 3) throw ArgumentError("encode: max_len must be at least 3");
    EncodedExample ex;
    ex.label = label;
    ex.ids.push_back(kCls);
    for (const auto& w : tokenize(text_a)) {
        if (static_cast<int>(ex.ids.size()) >= max_len) break;
        ex.ids.push_back(vocab.id(w));
    }
    if (text_b) {
        if (static_cast<int>(ex.ids.size()) < max_len) ex.ids.push_back(kSep);
        ex.segment_b_start = static_cast<int>(ex.ids.size());
        for (const auto& w : tokenize(*text_b)) {
            if (static_cast<int>(ex.ids.size()) >= max_len) break;
            ex.ids.push_back(vocab.id(w));
        }
    }
    const int attack_from = text_b ? *ex.segment_b_start : 1;
    for (int i = attack_from; i < static_cast<int>(ex.ids.size()); ++i)
        if (ex.ids[i] >= kNumSpecials) ex.attackable.push_back(i);
    return ex;
}

std::string decode(const Vocab& vocab, const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (id < kNumSpecials && id != kUnk) continue;
        if (!out.empty()) out.push_back(' ');
        out += vocab.token(id);
    }
    return out;
}

// ------------------------------------------------------------------- JSONL

std::vector<RawExample> load_jsonl_raw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_jsonl: cannot open " + path);
    std::vector<RawExample> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where + ": invalid JSON: " + e.what());
        }
        if (!j.is_object()) throw DataError(where + ": expected an object");
        if (!j.contains("label") || !j["label"].is_number_integer())
            throw DataError(where + ": missing integer \"label\"");
        RawExample ex;
        ex.label = j["label"].get<int>();
        if (ex.label < 0) throw DataError(where + ": label must be non-negative");
        const bool single = j.contains("text");
        const bool pair = j.contains("text_a") || j.contains("text_b");
        if (single == pair)
            throw DataError(where + ": need either \"text\" or \"text_a\"/\"text_b\"");
        if (single) {
            if (!j["text"].is_string()) throw DataError(where + ": \"text\" must be a string");
            if (j.size() != 2) throw DataError(where + ": unexpected extra keys");
            ex.text_a = j["text"].get<std::string>();
        } else {
            if (!j.contains("text_a") || !j.contains("text_b") || !j["text_a"].is_string() ||
                !j["text_b"].is_string())
                throw DataError(where + ": pair lines need string \"text_a\" and \"text_b\"");
            if (j.size() != 3) throw DataError(where + ": unexpected extra keys");
            ex.text_a = j["text_a"].get<std::string>();
            ex.text_b = j["text_b"].get<std::string>();
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<EncodedExample> load_jsonl(const std::string& path, const Vocab& vocab, int max_len) {
    std::vector<EncodedExample> out;
    for (const auto& raw : load_jsonl_raw(path))
        out.push_back(encode(vocab, raw.text_a, raw.text_b, raw.label, max_len));
    return out;
}

void save_jsonl(const std::string& path, const std::vector<RawExample>& examples) {
    std::ofstream out(path);
    if (!out) throw IoError("save_jsonl: cannot open " + path);
    for (const auto& ex : examples) {
        nlohmann::json j;
        if (ex.text_b) {
            j["text_a"] = ex.text_a;
            j["text_b"] = *ex.text_b;
        } else {
            j["text"] = ex.text_a;
        }
        j["label"] = ex.label;
        out << j.dump() << "\n";
    }
}

// --------------------------------------------------------------- synthetic

namespace {

SyntheticLexicon make_lexicon() {
    SyntheticLexicon lex;
    lex.positive_clusters = {
        {"good", "great", "fine", "solid"},
        {"excellent", "wonderful", "fantastic", "terrific"},
        {"amazing", "stunning", "marvelous", "superb"},
        {"enjoyable", "pleasant", "delightful", "charming"},
        {"brilliant", "clever", "sharp", "smart"},
        {"moving", "touching", "powerful", "stirring"},
        {"funny", "hilarious", "witty", "amusing"},
        {"fresh", "original", "inventive", "creative"},
        {"gripping", "thrilling", "riveting", "engrossing"},
        {"beautiful", "gorgeous", "elegant", "graceful"},
    };
    lex.negative_clusters = {
        {"bad", "poor", "weak", "shoddy"},
        {"terrible", "horrible", "awful", "dreadful"},
        {"boring", "dull", "tedious", "bland"},
        {"annoying", "irritating", "grating", "tiresome"},
        {"messy", "sloppy", "clumsy", "muddled"},
        {"shallow", "hollow", "empty", "pointless"},
        {"predictable", "stale", "derivative", "unoriginal"},
        {"confusing", "incoherent", "disjointed", "jumbled"},
        {"lifeless", "flat", "wooden", "stiff"},
        {"ugly", "crude", "cheap", "tacky"},
    };
    lex.nouns = {
        "movie",    "film",     "picture",  "flick",      "plot",     "story",
        "script",   "narrative","acting",   "cast",       "performance", "ensemble",
        "direction","directing","pacing",   "editing",    "soundtrack", "score",
        "music",    "sound",    "ending",   "finale",     "climax",   "conclusion",
        "dialogue", "writing",  "humor",    "tone",       "scene",    "sequence",
        "cinematography", "visuals", "premise", "concept", "style",   "atmosphere",
        "mood",     "character","lead",     "villain",    "hero",     "romance",
        "drama",    "comedy",   "thriller", "mystery",    "adventure","documentary",
    };
    lex.adverbs = {"truly",     "really",  "quite",     "very",     "rather",    "extremely",
                   "genuinely", "utterly", "thoroughly","remarkably","decidedly", "notably"};
    lex.fillers = {"the", "was", "and", "i",  "it",   "this",    "overall", "honestly",
                   "a",   "felt","seemed", "but", "from", "start", "to", "finish"};
    lex.positive_verbs = {"loved", "enjoyed", "admired", "adored", "savored", "treasured"};
    lex.negative_verbs = {"hated", "disliked", "loathed", "despised", "regretted", "resented"};
    return lex;
}

bool in_clusters(const std::vector<std::vector<std::string>>& cs, const std::string& w) {
    for (const auto& c : cs)
        for (const auto& x : c)
            if (x == w) return true;
    return false;
}

}  // namespace

bool SyntheticLexicon::is_positive_word(const std::string& w) const {
    if (in_clusters(positive_clusters, w)) return true;
    return std::find(positive_verbs.begin(), positive_verbs.end(), w) != positive_verbs.end();
}

bool SyntheticLexicon::is_negative_word(const std::string& w) const {
    if (in_clusters(negative_clusters, w)) return true;
    return std::find(negative_verbs.begin(), negative_verbs.end(), w) != negative_verbs.end();
}

const SyntheticLexicon& synthetic_lexicon() {
    static const SyntheticLexicon lex = make_lexicon();
    return lex;
}

namespace {

const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
    return v[rng.below(v.size())];
}

std::string pick_adjective(Rng& rng, const SyntheticLexicon& lex, bool positive) {
    const auto& clusters = positive ? lex.positive_clusters : lex.negative_clusters;
    const auto& cluster = clusters[rng.below(clusters.size())];
    return cluster[rng.below(cluster.size())];
}

std::string make_sentence(Rng& rng, const SyntheticLexicon& lex, bool positive) {
    const auto& noun = pick(rng, lex.nouns);
    const auto adj = pick_adjective(rng, lex, positive);
    switch (rng.below(8)) {
        case 0:
            return "the " + noun + " was " + pick(rng, lex.adverbs) + " " + adj;
        case 1:
            return "the " + noun + " was " + adj;
        case 2:
            return "i " + pick(rng, positive ? lex.positive_verbs : lex.negative_verbs) +
                   " the " + noun;
        case 3:
            return "the " + noun + " was " + adj + " and the " + pick(rng, lex.nouns) + " was " +
                   pick_adjective(rng, lex, positive);
        case 4:
            return pick(rng, lex.adverbs) + " " + adj + " " + noun;
        case 5:
            return "i felt the " + noun + " seemed " + adj;
        case 6:
            return "this " + noun + " was " + adj + " overall";
        default:
            return "honestly the " + noun + " was " + adj + " but the " + pick(rng, lex.nouns) +
                   " was " + pick_adjective(rng, lex, positive);
    }
}

}  // namespace

std::vector<RawExample> generate_synthetic_examples(uint64_t seed, int count) {
    if (count < 1) throw ArgumentError("generate_synthetic_examples: count must be positive");
    Rng rng(seed);
    const auto& lex = synthetic_lexicon();
    std::vector<RawExample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const bool positive = (i % 2) == 1;
        RawExample ex;
        ex.text_a = make_sentence(rng, lex, positive);
        ex.label = positive ? 1 : 0;
        out.push_back(std::move(ex));
    }
    // Labels alternate during generation; shuffle so batches are mixed.
    rng.shuffle(out);
    return out;
}

void generate_synthetic_corpus(uint64_t seed, const CorpusSpec& spec, const std::string& out_dir) {
    if (spec.train_size < 1 || spec.dev_size < 1 || spec.test_size < 1)
        throw ArgumentError("generate_synthetic_corpus: sizes must be positive");
    std::filesystem::create_directories(out_dir);
    Rng seeder(seed);
    const uint64_t s_train = seeder.next_u64();
    const uint64_t s_dev = seeder.next_u64();
    const uint64_t s_test = seeder.next_u64();
    save_jsonl(out_dir + "/train.jsonl", generate_synthetic_examples(s_train, spec.train_size));
    save_jsonl(out_dir + "/dev.jsonl", generate_synthetic_examples(s_dev, spec.dev_size));
    save_jsonl(out_dir + "/test.jsonl", generate_synthetic_examples(s_test, spec.test_size));
}

}  // namespace vda
