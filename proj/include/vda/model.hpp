#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vda/rng.hpp"
#include "vda/tensor.hpp"
#include "vda/textio.hpp"

namespace vda {

struct ModelConfig {
    int layers = 2;
    int hidden_dim = 64;
    int heads = 2;
    int ffn_dim = 128;
    int max_len = 32;
    int num_classes = 2;
    int vocab_size = 0;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Tiny post-norm transformer encoder with two heads: a tied-embedding MLM
// head and a [CLS] classification head. Single storage for the token
// embedding matrix, so MLM logits and input embeddings move together.
class Model {
public:
    Model() = default;
    Model(const ModelConfig& cfg, uint64_t vocab_hash, Rng& rng);

    const ModelConfig& config() const { return cfg_; }
    uint64_t vocab_hash() const { return vocab_hash_; }

    Tensor& token_embeddings() { return tok_emb_; }
    const Tensor& token_embeddings() const { return tok_emb_; }
    const Tensor& positional_embeddings() const { return pos_emb_; }

    // Token + positional embeddings, pre-transformer. This is the injection
    // point the augmenter replaces.
    Tensor forward_embeddings(const std::vector<int>& ids) const;

    // Per-position vocabulary logits from one pass over the unmasked input.
    Tensor mlm_logits(const std::vector<int>& ids) const;

    // Class logits from the [CLS] output position. logical_len limits
    // attention to the first logical_len rows (0 = all rows); identical path
    // for real and virtual embeddings.
    Tensor classify_from_embeddings(const Tensor& embeddings, std::size_t logical_len = 0) const;
    Tensor classify(const std::vector<int>& ids) const;

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;

    // Flat snapshot of every parameter, in checkpoint order.
    std::vector<double> parameter_snapshot() const;
    void restore_snapshot(const std::vector<double>& snapshot);

    // Total forward passes served; the attack harness reads this as its
    // query counter.
    long forward_count() const { return forward_count_; }

    long step_counter = 0;  // persisted in checkpoints

private:
    Tensor encode(const Tensor& embeddings, std::size_t logical_len) const;
    std::size_t strip_trailing_pads(const std::vector<int>& ids) const;

    struct Block {
        Tensor wq, bq, wk, bk, wv, bv, wo, bo;
        Tensor ln1_gain, ln1_bias;
        Tensor w1, b1, w2, b2;
        Tensor ln2_gain, ln2_bias;
    };

    ModelConfig cfg_;
    uint64_t vocab_hash_ = 0;
    Tensor tok_emb_;   // V x d, tied to the MLM output projection
    Tensor pos_emb_;   // max_len x d
    std::vector<Block> blocks_;
    Tensor mlm_bias_;  // V
    Tensor cls_w_, cls_b_;
    mutable long forward_count_ = 0;

    friend void save_checkpoint(const std::string&, const Model&);
    friend Model load_checkpoint(const std::string&, uint64_t);
};

// Masked-token pretraining: mask_prob of non-special positions per sentence,
// 80% [MASK] / 10% random token / 10% kept; cross-entropy at masked
// positions. Returns the final dev loss.
struct PretrainOptions {
    long steps = 2000;
    int batch_size = 8;
    double mask_prob = 0.15;
    double lr = 1e-3;
    double warmup_frac = 0.05;
};

double dev_mlm_loss(const Model& model, const std::vector<EncodedExample>& dev,
                    double mask_prob, Rng rng);

void pretrain_mlm(Model& model, const std::vector<EncodedExample>& train,
                  const PretrainOptions& opts, Rng& rng);

// Versioned binary checkpoint: "VDA1" magic, text header (config, vocab
// hash, step counter), then all parameters as little-endian doubles in a
// fixed order. Round-trips bitwise.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path, uint64_t expected_vocab_hash);

}  // namespace vda
