#include "vda/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vda/errors.hpp"

namespace vda {

void AttackConfig::validate() const {
    if (top_k_candidates < 1) throw ArgumentError("AttackConfig: top_k_candidates must be >= 1");
    if (max_perturb_frac <= 0 || max_perturb_frac > 1)
        throw ArgumentError("AttackConfig: max_perturb_frac must be in (0, 1]");
    if (sample_size < 1) throw ArgumentError("AttackConfig: sample_size must be >= 1");
}

std::vector<double> Victim::predict(const std::vector<int>& ids) const {
    ++queries_;
    NoGrad ng;
    Tensor probs = softmax(model_->classify(ids));
    return probs.values();
}

std::vector<std::pair<int, double>> word_importance(const Victim& victim,
                                                    const EncodedExample& example,
                                                    double baseline_gold_prob) {
    const double baseline = baseline_gold_prob;
    std::vector<std::pair<int, double>> out;
    out.reserve(example.attackable.size());
    for (int pos : example.attackable) {
        std::vector<int> trial = example.ids;
        trial[pos] = kUnk;
        const double gold = victim.predict(trial)[example.label];
        out.emplace_back(pos, baseline - gold);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

namespace {

// Top-k MLM candidates per position, excluding specials and the original
// token. Attacker-side resource; not counted as victim queries.
std::vector<std::vector<int>> mlm_candidates(const Model& f_mlm, const std::vector<int>& ids,
                                             int top_k) {
    NoGrad ng;
    Tensor logits = f_mlm.mlm_logits(ids);
    const std::size_t v = logits.cols();
    std::vector<std::vector<int>> out(ids.size());
    std::vector<int> order(v);
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(),
                          order.begin() + std::min<std::size_t>(v, top_k + kNumSpecials + 1),
                          order.end(), [&](int a, int b) {
                              return logits.at(pos, a) > logits.at(pos, b);
                          });
        for (int tok : order) {
            if (tok < kNumSpecials || tok == ids[pos]) continue;
            out[pos].push_back(tok);
            if (static_cast<int>(out[pos].size()) >= top_k) break;
        }
    }
    return out;
}

}  // namespace

AttackResult greedy_attack(const Victim& victim, const Model& f_mlm, const EncodedExample& example,
                           const AttackConfig& cfg) {
    cfg.validate();
    AttackResult res;
    const long q0 = victim.queries();

    std::vector<double> probs = victim.predict(example.ids);
    const auto pred = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (pred != example.label) {
        res.originally_correct = false;
        res.success = false;
        res.final_ids = example.ids;
        res.queries = victim.queries() - q0;
        return res;
    }
    res.originally_correct = true;
    res.final_ids = example.ids;

    const auto attackable_count = static_cast<long>(example.attackable.size());
    if (attackable_count == 0) {
        res.queries = victim.queries() - q0;
        return res;
    }

    const auto ranked = word_importance(victim, example, probs[example.label]);
    const auto candidates = mlm_candidates(f_mlm, example.ids, cfg.top_k_candidates);
    const long budget = std::max<long>(
        1, static_cast<long>(std::floor(cfg.max_perturb_frac * static_cast<double>(attackable_count))));

    std::vector<int> current = example.ids;
    double gold_prob = probs[example.label];
    for (const auto& [pos, importance] : ranked) {
        if (static_cast<long>(res.perturbed_positions.size()) >= budget) break;
        int best_tok = -1, best_pred = example.label;
        double best_prob = gold_prob;
        for (int cand : candidates[pos]) {
            std::vector<int> trial = current;
            trial[pos] = cand;
            const std::vector<double> p = victim.predict(trial);
            if (p[example.label] < best_prob) {
                best_prob = p[example.label];
                best_tok = cand;
                best_pred = static_cast<int>(
                    std::max_element(p.begin(), p.end()) - p.begin());
            }
        }
        if (best_tok >= 0) {
            current[pos] = best_tok;
            gold_prob = best_prob;
            res.perturbed_positions.push_back(pos);
            if (best_pred != example.label) {
                res.success = true;
                break;
            }
        }
    }
    res.final_ids = current;
    res.perturbed_pct = 100.0 * static_cast<double>(res.perturbed_positions.size()) /
                        static_cast<double>(attackable_count);
    res.queries = victim.queries() - q0;
    return res;
}

RobustnessReport evaluate_robustness(const Victim& victim, const Model& f_mlm,
                                     const std::vector<EncodedExample>& test_set,
                                     const AttackConfig& cfg,
                                     std::vector<AttackResult>* per_example,
                                     std::vector<std::size_t>* sampled_indices) {
    cfg.validate();
    if (test_set.empty()) throw ArgumentError("evaluate_robustness: empty test set");
    if (static_cast<std::size_t>(cfg.sample_size) > test_set.size())
        throw ArgumentError("evaluate_robustness: sample_size exceeds test set size");

    std::vector<std::size_t> indices(test_set.size());
    std::iota(indices.begin(), indices.end(), 0);
    Rng rng(cfg.seed);
    rng.shuffle(indices);
    indices.resize(cfg.sample_size);
    if (sampled_indices) *sampled_indices = indices;

    RobustnessReport report;
    report.sample_size = cfg.sample_size;
    long correct = 0, surviving = 0, successes = 0;
    double total_queries = 0, total_perturb = 0;
    for (std::size_t idx : indices) {
        AttackResult res = greedy_attack(victim, f_mlm, test_set[idx], cfg);
        res.example_id = static_cast<long>(idx);
        if (res.originally_correct) ++correct;
        if (res.originally_correct && !res.success) ++surviving;
        if (res.success) {
            ++successes;
            total_perturb += res.perturbed_pct;
        }
        total_queries += static_cast<double>(res.queries);
        if (per_example) per_example->push_back(std::move(res));
    }
    const auto n = static_cast<double>(cfg.sample_size);
    report.ori_acc = static_cast<double>(correct) / n;
    report.att_acc = static_cast<double>(surviving) / n;
    report.avg_queries = total_queries / n;
    report.avg_perturb_pct = successes == 0 ? 0.0 : total_perturb / static_cast<double>(successes);
    return report;
}

void export_adversarial(const std::vector<AttackResult>& results,
                        const std::vector<EncodedExample>& attacked_examples, const Vocab& vocab,
                        const std::string& path) {
    std::vector<RawExample> out;
    for (const auto& res : results) {
        if (!res.success) continue;
        const auto& ex = attacked_examples.at(static_cast<std::size_t>(res.example_id));
        RawExample raw;
        raw.label = ex.label;
        if (ex.segment_b_start) {
            const auto split = static_cast<std::size_t>(*ex.segment_b_start);
            raw.text_a = decode(vocab, {res.final_ids.begin(), res.final_ids.begin() + split});
            raw.text_b = decode(vocab, {res.final_ids.begin() + split, res.final_ids.end()});
        } else {
            raw.text_a = decode(vocab, res.final_ids);
        }
        out.push_back(std::move(raw));
    }
    save_jsonl(path, out);
}

}  // namespace vda
