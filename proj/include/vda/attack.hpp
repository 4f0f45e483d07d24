#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vda/model.hpp"
#include "vda/rng.hpp"
#include "vda/textio.hpp"

namespace vda {

struct AttackConfig {
    int top_k_candidates = 8;        // MLM candidates tried per position
    double max_perturb_frac = 0.4;   // budget as a fraction of attackable words
    int sample_size = 1000;
    uint64_t seed = 42;

    void validate() const;
};

// Read-only victim wrapper; every forward pass on behalf of the attacker
// goes through predict() and is counted.
class Victim {
public:
    explicit Victim(const Model& model) : model_(&model) {}

    // Softmax class probabilities for the given token ids.
    std::vector<double> predict(const std::vector<int>& ids) const;
    long queries() const { return queries_; }
    void reset_queries() { queries_ = 0; }
    const Model& model() const { return *model_; }

private:
    const Model* model_;
    mutable long queries_ = 0;
};

struct AttackResult {
    long example_id = -1;
    bool originally_correct = false;
    bool success = false;
    long queries = 0;
    std::vector<int> perturbed_positions;
    double perturbed_pct = 0;  // percent of attackable words changed
    std::vector<int> final_ids;
};

struct RobustnessReport {
    double ori_acc = 0;
    double att_acc = 0;
    double avg_queries = 0;      // over all attacked examples
    double avg_perturb_pct = 0;  // over successful attacks only
    long sample_size = 0;
};

// [UNK]-ablation importance: one victim query per attackable position,
// importance = drop in gold-class probability relative to the caller's
// baseline (from the initial correctness query); ties broken by earlier
// position.
std::vector<std::pair<int, double>> word_importance(const Victim& victim,
                                                    const EncodedExample& example,
                                                    double baseline_gold_prob);

// Greedy two-phase substitution attack: rank positions by importance, then
// try the frozen MLM's top-k candidates per position in rank order, keeping
// the substitution that most reduces gold probability. MLM queries are
// attacker-side and not counted against the victim.
AttackResult greedy_attack(const Victim& victim, const Model& f_mlm, const EncodedExample& example,
                           const AttackConfig& cfg);

RobustnessReport evaluate_robustness(const Victim& victim, const Model& f_mlm,
                                     const std::vector<EncodedExample>& test_set,
                                     const AttackConfig& cfg,
                                     std::vector<AttackResult>* per_example = nullptr,
                                     std::vector<std::size_t>* sampled_indices = nullptr);

// Writes successful adversarial texts in the dataset JSONL schema with the
// original gold labels.
void export_adversarial(const std::vector<AttackResult>& results,
                        const std::vector<EncodedExample>& attacked_examples, const Vocab& vocab,
                        const std::string& path);

}  // namespace vda
