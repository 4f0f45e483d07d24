#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vda/attack.hpp"
#include "vda/errors.hpp"
#include "vda/trainer.hpp"

using namespace vda;

namespace {

// Small trained victim on the synthetic task so attacks have real structure.
struct Arena {
    Vocab vocab;
    std::vector<EncodedExample> train, test;
    ModelConfig cfg;
    Model mlm;
    Model victim_model;

    Arena() {
        auto raw = generate_synthetic_examples(61, 120);
        std::vector<std::string> texts;
        for (const auto& ex : raw) texts.push_back(ex.text_a);
        vocab = build_vocab(texts, 512, 1);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            auto ex = encode(vocab, raw[i].text_a, std::nullopt, raw[i].label, 16);
            (i < 80 ? train : test).push_back(ex);
        }
        cfg.layers = 1;
        cfg.hidden_dim = 16;
        cfg.heads = 2;
        cfg.ffn_dim = 32;
        cfg.max_len = 16;
        cfg.vocab_size = vocab.size();
        Rng r1(5);
        mlm = Model(cfg, vocab.hash(), r1);
        Rng r2(6);
        victim_model = Model(cfg, vocab.hash(), r2);
        TrainConfig tc;
        tc.lambda = 0;
        tc.epochs = 2;
        tc.batch_size = 8;
        tc.lr = 2e-3;
        train_victim(tc);
    }

    void train_victim(const TrainConfig& tc) {
        vda::train(victim_model, mlm, train, test, tc);
    }
};

const Arena& arena() {
    static Arena a;
    return a;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("attack config validation") {
    AttackConfig bad;
    bad.top_k_candidates = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = AttackConfig{};
    bad.max_perturb_frac = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = AttackConfig{};
    bad.max_perturb_frac = 1.5;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    CHECK_NOTHROW(AttackConfig{}.validate());
}

TEST_CASE("victim counts every prediction and returns a distribution") {
    const Arena& a = arena();
    Victim victim(a.victim_model);
    CHECK(victim.queries() == 0);
    auto p = victim.predict(a.test[0].ids);
    CHECK(victim.queries() == 1);
    REQUIRE(p.size() == 2);
    CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-12);
    victim.predict(a.test[0].ids);
    CHECK(victim.queries() == 2);
    victim.reset_queries();
    CHECK(victim.queries() == 0);
}

TEST_CASE("word_importance spends one query per attackable position") {
    const Arena& a = arena();
    Victim victim(a.victim_model);
    const auto& ex = a.test[0];
    const double baseline = victim.predict(ex.ids)[ex.label];
    victim.reset_queries();
    auto ranked = word_importance(victim, ex, baseline);
    CHECK(victim.queries() == static_cast<long>(ex.attackable.size()));
    REQUIRE(ranked.size() == ex.attackable.size());
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        CHECK(ranked[i - 1].second >= ranked[i].second);
        if (ranked[i - 1].second == ranked[i].second)
            CHECK(ranked[i - 1].first < ranked[i].first);
    }
    // Each importance is exactly baseline minus the [UNK]-ablated gold prob.
    for (const auto& [pos, imp] : ranked) {
        std::vector<int> trial = ex.ids;
        trial[pos] = kUnk;
        CHECK(imp == doctest::Approx(baseline - victim.predict(trial)[ex.label]).epsilon(1e-15));
    }
}

TEST_CASE("initially misclassified examples cost exactly one query") {
    const Arena& a = arena();
    Victim victim(a.victim_model);
    AttackConfig cfg;
    cfg.sample_size = 1;
    bool found = false;
    for (const auto& ex : a.test) {
        auto p = victim.predict(ex.ids);
        const int pred = p[1] > p[0] ? 1 : 0;
        if (pred == ex.label) continue;
        victim.reset_queries();
        AttackResult res = greedy_attack(victim, a.mlm, ex, cfg);
        CHECK(res.queries == 1);
        CHECK_FALSE(res.originally_correct);
        CHECK_FALSE(res.success);
        CHECK(res.final_ids == ex.ids);
        found = true;
        break;
    }
    // The 2-epoch victim still errs somewhere; if not, the case is vacuous.
    WARN(found);
}

TEST_CASE("attack respects the perturbation budget and query bounds") {
    const Arena& a = arena();
    Victim victim(a.victim_model);
    AttackConfig cfg;
    cfg.max_perturb_frac = 0.4;
    cfg.top_k_candidates = 4;
    for (const auto& ex : a.test) {
        victim.reset_queries();
        AttackResult res = greedy_attack(victim, a.mlm, ex, cfg);
        const long attackable = static_cast<long>(ex.attackable.size());
        if (!res.originally_correct) continue;
        const long budget = std::max<long>(1, static_cast<long>(std::floor(0.4 * attackable)));
        CHECK(static_cast<long>(res.perturbed_positions.size()) <= budget);
        CHECK(res.perturbed_pct ==
              doctest::Approx(100.0 * res.perturbed_positions.size() / attackable)
                  .epsilon(1e-15));
        // 1 correctness query + 1 per attackable + at most top_k per position.
        CHECK(res.queries >= 1 + attackable);
        CHECK(res.queries <= 1 + attackable + attackable * cfg.top_k_candidates);
        CHECK(res.queries == victim.queries());
        // Substituted tokens are ordinary vocabulary words, never specials.
        for (int pos : res.perturbed_positions) {
            CHECK(res.final_ids[pos] >= kNumSpecials);
            CHECK(res.final_ids[pos] != ex.ids[pos]);
        }
    }
}

TEST_CASE("examples with no attackable words survive with one query") {
    const Arena& a = arena();
    EncodedExample ex = encode(a.vocab, "zzzz qqqq", std::nullopt, 0, 16);
    REQUIRE(ex.attackable.empty());
    Victim victim(a.victim_model);
    AttackResult res = greedy_attack(victim, a.mlm, ex, AttackConfig{});
    CHECK(res.queries == 1);
    CHECK_FALSE(res.success);
}

TEST_CASE("robustness evaluation is deterministic and internally consistent") {
    const Arena& a = arena();
    Victim victim(a.victim_model);
    AttackConfig cfg;
    cfg.sample_size = 20;
    cfg.seed = 3;

    std::vector<AttackResult> per_a, per_b;
    std::vector<std::size_t> idx_a, idx_b;
    RobustnessReport ra = evaluate_robustness(victim, a.mlm, a.test, cfg, &per_a, &idx_a);
    RobustnessReport rb = evaluate_robustness(victim, a.mlm, a.test, cfg, &per_b, &idx_b);

    CHECK(idx_a == idx_b);
    CHECK(ra.ori_acc == rb.ori_acc);
    CHECK(ra.att_acc == rb.att_acc);
    CHECK(ra.avg_queries == rb.avg_queries);
    CHECK(ra.avg_perturb_pct == rb.avg_perturb_pct);

    CHECK(ra.sample_size == 20);
    REQUIRE(per_a.size() == 20);
    CHECK(ra.att_acc <= ra.ori_acc);
    CHECK(ra.ori_acc >= 0);
    CHECK(ra.ori_acc <= 1);

    // Aggregates recompute exactly from the per-example results.
    long correct = 0, surviving = 0, successes = 0;
    double queries = 0, perturb = 0;
    for (const auto& res : per_a) {
        correct += res.originally_correct;
        surviving += res.originally_correct && !res.success;
        if (res.success) {
            ++successes;
            perturb += res.perturbed_pct;
        }
        queries += static_cast<double>(res.queries);
    }
    CHECK(ra.ori_acc == doctest::Approx(correct / 20.0).epsilon(1e-15));
    CHECK(ra.att_acc == doctest::Approx(surviving / 20.0).epsilon(1e-15));
    CHECK(ra.avg_queries == doctest::Approx(queries / 20.0).epsilon(1e-15));
    if (successes > 0)
        CHECK(ra.avg_perturb_pct == doctest::Approx(perturb / successes).epsilon(1e-15));

    cfg.sample_size = static_cast<int>(a.test.size()) + 1;
    CHECK_THROWS_AS(evaluate_robustness(victim, a.mlm, a.test, cfg), ArgumentError);
}

TEST_CASE("adversarial export round-trips through the dataset schema") {
    const Arena& a = arena();
    Victim victim(a.victim_model);
    AttackConfig cfg;
    cfg.sample_size = static_cast<int>(a.test.size());
    std::vector<AttackResult> per_example;
    evaluate_robustness(victim, a.mlm, a.test, cfg, &per_example);

    long successes = 0;
    for (const auto& res : per_example) successes += res.success;

    const std::string path = temp_path("vda_attack_export.jsonl");
    export_adversarial(per_example, a.test, a.vocab, path);
    auto reloaded = load_jsonl_raw(path);
    REQUIRE(static_cast<long>(reloaded.size()) == successes);

    std::size_t j = 0;
    for (const auto& res : per_example) {
        if (!res.success) continue;
        const auto& orig = a.test.at(static_cast<std::size_t>(res.example_id));
        CHECK(reloaded[j].label == orig.label);
        // Re-encoding the exported text reproduces the perturbed ids.
        EncodedExample re = encode(a.vocab, reloaded[j].text_a, std::nullopt, orig.label, 16);
        CHECK(re.ids == res.final_ids);
        ++j;
    }
    std::remove(path.c_str());
}
