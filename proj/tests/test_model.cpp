#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "testutil.hpp"
#include "vda/errors.hpp"
#include "vda/model.hpp"

using namespace vda;

namespace {

struct Fixture {
    Vocab vocab;
    ModelConfig cfg;
    Model model;

    Fixture()
        : vocab(build_vocab({"the movie was good bad fine plot dull great story"}, 64, 1)) {
        cfg.layers = 1;
        cfg.hidden_dim = 8;
        cfg.heads = 2;
        cfg.ffn_dim = 16;
        cfg.max_len = 8;
        cfg.num_classes = 2;
        cfg.vocab_size = vocab.size();
        Rng rng(21);
        model = Model(cfg, vocab.hash(), rng);
    }
};

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig bad;
    bad.vocab_size = 10;
    bad.hidden_dim = 10;
    bad.heads = 3;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("forward_embeddings is token plus positional embedding") {
    Fixture f;
    Tensor e = f.model.forward_embeddings({kCls});
    REQUIRE(e.rows() == 1);
    REQUIRE(e.cols() == 8);
    const Tensor& tok = f.model.token_embeddings();
    const Tensor& pos = f.model.positional_embeddings();
    for (int j = 0; j < 8; ++j) CHECK(e.at(0, j) == tok.at(kCls, j) + pos.at(0, j));
}

TEST_CASE("forward_embeddings is position sensitive") {
    Fixture f;
    const int a = f.vocab.id("good"), b = f.vocab.id("bad");
    Tensor e1 = f.model.forward_embeddings({kCls, a, b});
    Tensor e2 = f.model.forward_embeddings({kCls, b, a});
    bool differs = false;
    for (std::size_t i = 0; i < e1.size(); ++i) differs = differs || e1[i] != e2[i];
    CHECK(differs);
    CHECK_THROWS_AS(f.model.forward_embeddings({f.vocab.size()}), ArgumentError);
    CHECK_THROWS_AS(f.model.forward_embeddings(std::vector<int>(9, kCls)), ArgumentError);
}

TEST_CASE("mlm_logits shape and row-stochastic softmax") {
    Fixture f;
    std::vector<int> ids{kCls, f.vocab.id("good"), f.vocab.id("movie")};
    Tensor logits = f.model.mlm_logits(ids);
    REQUIRE(logits.rows() == ids.size());
    REQUIRE(logits.cols() == static_cast<std::size_t>(f.vocab.size()));
    Tensor p = softmax(logits);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double total = 0;
        for (std::size_t c = 0; c < p.cols(); ++c) total += p.at(r, c);
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("classify paths coincide exactly") {
    Fixture f;
    std::vector<int> ids{kCls, f.vocab.id("good"), f.vocab.id("plot")};
    Tensor direct = f.model.classify(ids);
    Tensor via = f.model.classify_from_embeddings(f.model.forward_embeddings(ids), ids.size());
    REQUIRE(direct.cols() == 2);
    for (std::size_t i = 0; i < direct.size(); ++i) CHECK(direct[i] == via[i]);
}

TEST_CASE("trailing pads do not affect CLS logits") {
    Fixture f;
    std::vector<int> ids{kCls, f.vocab.id("good"), f.vocab.id("story")};
    std::vector<int> padded = ids;
    padded.push_back(kPad);
    padded.push_back(kPad);
    Tensor a = f.model.classify(ids);
    Tensor b = f.model.classify(padded);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("embedding matrix is shared between input and MLM projection") {
    Fixture f;
    std::vector<int> ids{kCls, f.vocab.id("plot")};
    const Tensor before = f.model.mlm_logits(ids);
    f.model.token_embeddings().at(f.vocab.id("plot"), 3) += 0.5;
    const Tensor after = f.model.mlm_logits(ids);
    bool differs = false;
    for (std::size_t i = 0; i < before.size(); ++i) differs = differs || before[i] != after[i];
    CHECK(differs);
}

TEST_CASE("full model gradients match finite differences") {
    Fixture f;
    std::vector<int> ids{kCls, f.vocab.id("good"), f.vocab.id("movie"), f.vocab.id("plot")};
    auto params = f.model.parameters();
    auto loss_fn = [&] { return cross_entropy(f.model.classify(ids), 1); };
    CHECK(testutil::grad_check(params, loss_fn) < 1e-4);
}

TEST_CASE("mlm head gradients match finite differences") {
    Fixture f;
    std::vector<int> ids{kCls, f.vocab.id("dull"), f.vocab.id("story")};
    auto params = f.model.parameters();
    auto loss_fn = [&] {
        Tensor logits = f.model.mlm_logits(ids);
        return cross_entropy(row(logits, 1), static_cast<std::size_t>(ids[1]));
    };
    CHECK(testutil::grad_check(params, loss_fn) < 1e-4);
}

TEST_CASE("pretrain_mlm reduces dev loss and is deterministic") {
    std::vector<std::string> texts;
    for (const auto& ex : generate_synthetic_examples(17, 400)) texts.push_back(ex.text_a);
    Vocab vocab = build_vocab(texts, 512, 1);
    std::vector<EncodedExample> train, dev;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto ex = encode(vocab, texts[i], std::nullopt, 0, 16);
        (i < 320 ? train : dev).push_back(ex);
    }
    ModelConfig cfg;
    cfg.layers = 1;
    cfg.hidden_dim = 16;
    cfg.heads = 2;
    cfg.ffn_dim = 32;
    cfg.max_len = 16;
    cfg.vocab_size = vocab.size();

    PretrainOptions opts;
    opts.steps = 150;
    opts.batch_size = 4;
    opts.lr = 2e-3;

    auto run = [&](uint64_t seed) {
        Rng rng(seed);
        Model m(cfg, vocab.hash(), rng);
        const double before = dev_mlm_loss(m, dev, 0.15, Rng(99));
        Rng train_rng(seed + 1);
        pretrain_mlm(m, train, opts, train_rng);
        const double after = dev_mlm_loss(m, dev, 0.15, Rng(99));
        CHECK(after < before);
        return m.parameter_snapshot();
    };
    auto snap_a = run(5);
    auto snap_b = run(5);
    CHECK(snap_a == snap_b);  // bitwise reproducibility

    // steps = 0 leaves parameters untouched
    Rng rng(5);
    Model m(cfg, vocab.hash(), rng);
    auto before = m.parameter_snapshot();
    PretrainOptions zero;
    zero.steps = 0;
    Rng r2(1);
    pretrain_mlm(m, train, zero, r2);
    CHECK(m.parameter_snapshot() == before);
}

TEST_CASE("checkpoint round-trip is bitwise") {
    Fixture f;
    const std::string path = temp_path("vda_ckpt_test.bin");
    f.model.step_counter = 42;
    save_checkpoint(path, f.model);
    Model loaded = load_checkpoint(path, f.vocab.hash());
    CHECK(loaded.step_counter == 42);
    CHECK(loaded.config() == f.model.config());
    CHECK(loaded.parameter_snapshot() == f.model.parameter_snapshot());

    std::vector<int> ids{kCls, f.vocab.id("fine")};
    Tensor a = f.model.classify(ids);
    Tensor b = loaded.classify(ids);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint load errors are distinct") {
    Fixture f;
    const std::string path = temp_path("vda_ckpt_err.bin");
    save_checkpoint(path, f.model);

    SUBCASE("bad magic") {
        std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
        io.write("XXXX", 4);
        io.close();
        try {
            load_checkpoint(path, f.vocab.hash());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
        }
    }
    SUBCASE("vocab hash mismatch names both hashes") {
        try {
            load_checkpoint(path, f.vocab.hash() + 1);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("vocab hash mismatch") != std::string::npos);
            CHECK(msg.find(std::to_string(f.vocab.hash())) != std::string::npos);
            CHECK(msg.find(std::to_string(f.vocab.hash() + 1)) != std::string::npos);
        }
    }
    SUBCASE("truncated payload") {
        const auto full = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, full - 64);
        try {
            load_checkpoint(path, f.vocab.hash());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
    std::remove(path.c_str());
}
