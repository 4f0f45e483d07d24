#include "vda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vda/adam.hpp"
#include "vda/errors.hpp"

namespace vda {

void TrainConfig::validate() const {
    if (lambda < 0) throw ArgumentError("TrainConfig: lambda must be non-negative");
    if (lr <= 0) throw ArgumentError("TrainConfig: lr must be positive");
    if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("TrainConfig: batch_size must be >= 1");
    if (warmup_frac < 0 || warmup_frac > 1)
        throw ArgumentError("TrainConfig: warmup_frac must be in [0, 1]");
    augment.validate();
}

Tensor classification_loss(const std::vector<Tensor>& logits_batch,
                           const std::vector<int>& labels) {
    if (logits_batch.empty()) throw ArgumentError("classification_loss: empty batch");
    if (logits_batch.size() != labels.size())
        throw ArgumentError("classification_loss: batch/label size mismatch");
    Tensor total = cross_entropy(logits_batch[0], static_cast<std::size_t>(labels[0]));
    for (std::size_t i = 1; i < logits_batch.size(); ++i)
        total = add(total, cross_entropy(logits_batch[i], static_cast<std::size_t>(labels[i])));
    return scale(total, 1.0 / static_cast<double>(logits_batch.size()));
}

Tensor regularization_loss(const Tensor& orig_logits, const std::vector<Tensor>& virtual_logits) {
    if (virtual_logits.empty()) throw ArgumentError("regularization_loss: k must be >= 1");
    Tensor total = sym_kl(orig_logits, virtual_logits[0]);
    for (std::size_t j = 1; j < virtual_logits.size(); ++j)
        total = add(total, sym_kl(orig_logits, virtual_logits[j]));
    return scale(total, 1.0 / static_cast<double>(virtual_logits.size()));
}

double evaluate(const Model& model, const std::vector<EncodedExample>& dataset) {
    if (dataset.empty()) throw DataError("evaluate: empty dataset");
    NoGrad ng;
    long correct = 0;
    for (const auto& ex : dataset) {
        Tensor logits = model.classify(ex.ids);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits[j] > logits[best]) best = j;
        if (static_cast<int>(best) == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

namespace {

std::size_t logical_length(const std::vector<int>& ids) {
    std::size_t len = ids.size();
    while (len > 0 && ids[len - 1] == kPad) --len;
    return len;
}

// One combined loss over a minibatch; returns (total, lc, lreg) values and
// runs backward.
struct StepOutcome {
    double total, lc, lreg;
};

StepOutcome run_step(Model& f, const Model& f_mlm, const std::vector<EncodedExample>& data,
                     const std::vector<std::size_t>& batch, const TrainConfig& cfg, Rng& rng,
                     long step_index) {
    Tape tape;
    std::vector<Tensor> logits_batch;
    std::vector<int> labels;
    std::vector<Tensor> reg_terms;
    for (std::size_t idx : batch) {
        const auto& ex = data[idx];
        const std::size_t len = logical_length(ex.ids);
        Tensor emb = f.forward_embeddings(ex.ids);
        Tensor logits = f.classify_from_embeddings(emb, len);
        logits_batch.push_back(logits);
        labels.push_back(ex.label);
        if (cfg.lambda > 0) {
            auto virtuals = augment(f_mlm, f, ex.ids, cfg.augment, rng);
            std::vector<Tensor> vlogits;
            vlogits.reserve(virtuals.size());
            for (const auto& vb : virtuals)
                vlogits.push_back(f.classify_from_embeddings(vb.embeddings, len));
            if (cfg.reg_loss == RegLoss::kSymKl) {
                reg_terms.push_back(regularization_loss(logits, vlogits));
            } else {
                // CEVDA: cross-entropy between virtual predictions and the
                // gold label, averaged over draws.
                Tensor t = cross_entropy(vlogits[0], static_cast<std::size_t>(ex.label));
                for (std::size_t j = 1; j < vlogits.size(); ++j)
                    t = add(t, cross_entropy(vlogits[j], static_cast<std::size_t>(ex.label)));
                reg_terms.push_back(scale(t, 1.0 / static_cast<double>(vlogits.size())));
            }
        }
    }
    Tensor lc = classification_loss(logits_batch, labels);
    StepOutcome out{0, lc.item(), 0};
    Tensor total = lc;
    if (!reg_terms.empty()) {
        Tensor lreg = reg_terms[0];
        for (std::size_t i = 1; i < reg_terms.size(); ++i) lreg = add(lreg, reg_terms[i]);
        lreg = scale(lreg, 1.0 / static_cast<double>(reg_terms.size()));
        out.lreg = lreg.item();
        total = add(lc, scale(lreg, cfg.lambda));
    }
    out.total = total.item();
    if (!std::isfinite(out.total))
        throw NumericError("train: non-finite loss at step " + std::to_string(step_index) +
                           " (L_c=" + std::to_string(out.lc) +
                           ", L_reg=" + std::to_string(out.lreg) + ")");
    backward(total);
    return out;
}

}  // namespace

TrainResult train(Model& f, const Model& f_mlm, const std::vector<EncodedExample>& train_set,
                  const std::vector<EncodedExample>& dev_set, const TrainConfig& cfg,
                  const std::function<void(Model&, EpochMetrics&)>& epoch_hook) {
    cfg.validate();
    if (train_set.empty() || dev_set.empty()) throw DataError("train: empty dataset");

    auto params = f.parameters();
    const std::size_t steps_per_epoch =
        (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
    std::size_t total_steps = steps_per_epoch * cfg.epochs;
    if (cfg.per_draw_steps && cfg.lambda > 0) total_steps *= cfg.augment.k;
    const auto warmup = static_cast<std::size_t>(
        std::ceil(cfg.warmup_frac * static_cast<double>(total_steps)));
    Adam opt(params, cfg.lr, warmup);
    Rng rng(cfg.seed);

    TrainResult result;
    result.best_dev_accuracy = -1;
    std::vector<double> best_params;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    long step_index = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double sum_total = 0, sum_lc = 0, sum_lreg = 0;
        long steps = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            const int repeats = (cfg.per_draw_steps && cfg.lambda > 0) ? cfg.augment.k : 1;
            TrainConfig step_cfg = cfg;
            if (repeats > 1) step_cfg.augment.k = 1;
            for (int r = 0; r < repeats; ++r) {
                StepOutcome so = run_step(f, f_mlm, train_set, batch, step_cfg, rng, step_index);
                opt.step();
                ++f.step_counter;
                ++step_index;
                sum_total += so.total;
                sum_lc += so.lc;
                sum_lreg += so.lreg;
                result.step_losses.push_back({so.total, so.lc, so.lreg});
                ++steps;
            }
        }
        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = sum_total / static_cast<double>(steps);
        em.classification_loss = sum_lc / static_cast<double>(steps);
        em.regularization_loss = sum_lreg / static_cast<double>(steps);
        em.dev_accuracy = evaluate(f, dev_set);
        if (epoch_hook) epoch_hook(f, em);
        result.metrics.push_back(em);
        if (em.dev_accuracy > result.best_dev_accuracy) {
            result.best_dev_accuracy = em.dev_accuracy;
            result.best_epoch = epoch;
            best_params = f.parameter_snapshot();
        }
    }
    if (!best_params.empty()) f.restore_snapshot(best_params);
    return result;
}

}  // namespace vda
