#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vda/augment.hpp"
#include "vda/model.hpp"
#include "vda/textio.hpp"

namespace vda {

enum class RegLoss { kSymKl, kCeOnLabel };

struct TrainConfig {
    double lambda = 1.0;
    double lr = 1e-4;  // toy-scale default; BERT-scale 1e-5 available by flag
    int epochs = 3;
    int batch_size = 16;
    double warmup_frac = 0.05;
    RegLoss reg_loss = RegLoss::kSymKl;
    AugmentConfig augment;
    uint64_t seed = 42;
    // When set, runs one optimizer step per virtual draw instead of one
    // combined step per minibatch (identical at k=1).
    bool per_draw_steps = false;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0;
    double classification_loss = 0;
    double regularization_loss = 0;
    double dev_accuracy = 0;
    std::optional<double> dev_attack_accuracy;
};

struct StepLoss {
    double total = 0;
    double classification = 0;
    double regularization = 0;
};

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    std::vector<StepLoss> step_losses;
    int best_epoch = 0;
    double best_dev_accuracy = 0;
};

// Mean cross-entropy over a batch of per-example logit vectors.
Tensor classification_loss(const std::vector<Tensor>& logits_batch,
                           const std::vector<int>& labels);

// (1/k) sum_j D_sKL(orig, virtual_j) for one example.
Tensor regularization_loss(const Tensor& orig_logits, const std::vector<Tensor>& virtual_logits);

double evaluate(const Model& model, const std::vector<EncodedExample>& dataset);

// Fine-tunes f in place with the combined objective L_c + lambda * L_reg
// over minibatches; f_mlm stays frozen and supplies substitution
// distributions. Restores the best-dev-accuracy parameters before
// returning. epoch_hook (optional) runs after each epoch's metrics are
// collected and may fill dev_attack_accuracy.
TrainResult train(Model& f, const Model& f_mlm, const std::vector<EncodedExample>& train_set,
                  const std::vector<EncodedExample>& dev_set, const TrainConfig& cfg,
                  const std::function<void(Model&, EpochMetrics&)>& epoch_hook = nullptr);

}  // namespace vda
