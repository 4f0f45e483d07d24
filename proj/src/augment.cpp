#include "vda/augment.hpp"

#include <cmath>

#include "vda/errors.hpp"

namespace vda {

void AugmentConfig::validate() const {
    if (sigma < 0) throw ArgumentError("AugmentConfig: sigma must be non-negative");
    if (k < 1) throw ArgumentError("AugmentConfig: k must be >= 1");
    if (temperature <= 0) throw ArgumentError("AugmentConfig: temperature must be positive");
}

SubstitutionDistribution substitution_distribution(const Model& f_mlm,
                                                   const std::vector<int>& ids) {
    NoGrad ng;
    SubstitutionDistribution dist;
    dist.probs = softmax(f_mlm.mlm_logits(ids));
    dist.source = SubstitutionDistribution::Source::kClean;
    dist.sigma = 0.0;
    return dist;
}

SubstitutionDistribution inject_noise(const SubstitutionDistribution& clean, double sigma,
                                      Rng& rng, double temperature) {
    if (sigma < 0) throw ArgumentError("inject_noise: sigma must be non-negative");
    if (temperature <= 0) throw ArgumentError("inject_noise: temperature must be positive");
    const std::size_t L = clean.probs.rows(), V = clean.probs.cols();
    Tensor arg(L, V);
    // Position-major draw order pins the stream layout.
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < V; ++j)
            arg.at(i, j) = (clean.probs.at(i, j) + rng.gaussian(sigma)) / temperature;
    NoGrad ng;
    SubstitutionDistribution out;
    out.probs = softmax(arg);
    out.source = SubstitutionDistribution::Source::kNoised;
    out.sigma = sigma;
    return out;
}

VirtualBatch virtual_embeddings(const SubstitutionDistribution& noised, const Tensor& token_table,
                                const Tensor& positional_table, const std::vector<int>& ids,
                                AugmentMode mode, bool protect_specials, Rng& rng) {
    const std::size_t L = noised.probs.rows(), V = noised.probs.cols();
    if (V != token_table.rows())
        throw ArgumentError("virtual_embeddings: vocab dimension mismatch");
    if (ids.size() != L)
        throw ArgumentError("virtual_embeddings: ids length does not match distribution");

    // Build the mixing matrix as a constant; gradients reach only the
    // embedding tables.
    Tensor mix(L, V);
    for (std::size_t i = 0; i < L; ++i) {
        if (protect_specials && ids[i] < kNumSpecials) {
            mix.at(i, static_cast<std::size_t>(ids[i])) = 1.0;
            continue;
        }
        switch (mode) {
            case AugmentMode::kMixture:
                for (std::size_t j = 0; j < V; ++j) mix.at(i, j) = noised.probs.at(i, j);
                break;
            case AugmentMode::kArgmax: {
                std::size_t best = 0;
                for (std::size_t j = 1; j < V; ++j)
                    if (noised.probs.at(i, j) > noised.probs.at(i, best)) best = j;
                mix.at(i, best) = 1.0;
                break;
            }
            case AugmentMode::kSample: {
                const double u = rng.uniform();
                double acc = 0;
                std::size_t chosen = V - 1;
                for (std::size_t j = 0; j < V; ++j) {
                    acc += noised.probs.at(i, j);
                    if (u < acc) {
                        chosen = j;
                        break;
                    }
                }
                mix.at(i, chosen) = 1.0;
                break;
            }
        }
    }

    std::vector<int> positions(L);
    for (std::size_t i = 0; i < L; ++i) positions[i] = static_cast<int>(i);

    VirtualBatch vb;
    vb.embeddings = add(matmul(mix, token_table), embedding_lookup(positional_table, positions));
    vb.mode = mode;
    return vb;
}

std::vector<VirtualBatch> augment(const Model& f_mlm, const Model& mixture_model,
                                  const std::vector<int>& ids, const AugmentConfig& cfg,
                                  Rng& rng) {
    cfg.validate();
    const SubstitutionDistribution clean = substitution_distribution(f_mlm, ids);
    const Tensor token_table = cfg.mixture_matrix == MixtureMatrix::kClassifier
                                   ? mixture_model.token_embeddings()
                                   : f_mlm.token_embeddings().detached();
    std::vector<VirtualBatch> out;
    out.reserve(cfg.k);
    for (int j = 0; j < cfg.k; ++j) {
        SubstitutionDistribution noised = inject_noise(clean, cfg.sigma, rng, cfg.temperature);
        noised.draw_index = j;
        VirtualBatch vb = virtual_embeddings(noised, token_table,
                                             mixture_model.positional_embeddings(), ids, cfg.mode,
                                             cfg.protect_specials, rng);
        vb.k_index = j;
        out.push_back(std::move(vb));
    }
    return out;
}

}  // namespace vda
