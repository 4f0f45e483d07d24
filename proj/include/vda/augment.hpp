#pragma once

#include <vector>

#include "vda/model.hpp"
#include "vda/rng.hpp"
#include "vda/tensor.hpp"

namespace vda {

enum class AugmentMode { kMixture, kArgmax, kSample };
enum class MixtureMatrix { kClassifier, kFrozenMlm };

struct AugmentConfig {
    double sigma = 1e-2;
    int k = 1;
    AugmentMode mode = AugmentMode::kMixture;
    bool protect_specials = true;
    MixtureMatrix mixture_matrix = MixtureMatrix::kClassifier;
    // Temperature dividing the softmax argument when noising; 1.0 is the
    // faithful setting, anything else is an explicit deviation knob.
    double temperature = 1.0;

    void validate() const;
};

// Per-position probability rows over the vocabulary.
struct SubstitutionDistribution {
    enum class Source { kClean, kNoised };
    Tensor probs;  // L x V, row-stochastic
    Source source = Source::kClean;
    double sigma = 0.0;
    int draw_index = -1;
};

// Mixed input embeddings standing in for a concrete sentence.
struct VirtualBatch {
    Tensor embeddings;  // L x d, positional term included
    long origin = -1;
    int k_index = 0;
    AugmentMode mode = AugmentMode::kMixture;
};

// Row-wise softmax of the frozen MLM's logits over the unmasked input; one
// forward pass total.
SubstitutionDistribution substitution_distribution(const Model& f_mlm, const std::vector<int>& ids);

// softmax((probs + eps) / temperature) per row, eps ~ N(0, sigma^2 I) drawn
// i.i.d. per entry. Rng consumption order is position-major.
SubstitutionDistribution inject_noise(const SubstitutionDistribution& clean, double sigma,
                                      Rng& rng, double temperature = 1.0);

// E-hat = P * M_E (+ positional embeddings), with mode-dependent row
// treatment and special-token rows pinned to their original one-hots when
// protect_specials is set. Gradients flow into token_table when it is a
// tracked parameter; the probability rows are constants.
VirtualBatch virtual_embeddings(const SubstitutionDistribution& noised, const Tensor& token_table,
                                const Tensor& positional_table, const std::vector<int>& ids,
                                AugmentMode mode, bool protect_specials, Rng& rng);

// Full augmentation for one example: clean distribution once, k independent
// noise draws, k virtual batches. mixture_model supplies the embedding
// matrix for the mixture (classifier by default so gradients reach it).
std::vector<VirtualBatch> augment(const Model& f_mlm, const Model& mixture_model,
                                  const std::vector<int>& ids, const AugmentConfig& cfg, Rng& rng);

}  // namespace vda
