#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vda/errors.hpp"
#include "vda/textio.hpp"

using namespace vda;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("build_vocab orders by frequency then lexicographically") {
    Vocab v = build_vocab({"a a b"}, 10, 1);
    CHECK(v.size() == 7);
    CHECK(v.token(kNumSpecials) == "a");
    CHECK(v.token(kNumSpecials + 1) == "b");
    CHECK(v.id("a") == kNumSpecials);
}

TEST_CASE("build_vocab drops words below min_freq") {
    Vocab v = build_vocab({"a a b"}, 10, 2);
    CHECK(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
    CHECK(v.id("b") == kUnk);
}

TEST_CASE("build_vocab is deterministic and rejects empty corpora") {
    Vocab a = build_vocab({"x y z z"}, 100, 1);
    Vocab b = build_vocab({"x y z z"}, 100, 1);
    CHECK(a.tokens() == b.tokens());
    CHECK(a.hash() == b.hash());
    CHECK_THROWS_AS(build_vocab({}, 10, 1), DataError);
    CHECK_THROWS_AS(build_vocab({"   "}, 10, 1), DataError);
}

TEST_CASE("encode single sentence") {
    Vocab v = build_vocab({"good movie"}, 10, 1);
    EncodedExample ex = encode(v, "Good movie!", std::nullopt, 1, 16);
    CHECK(ex.ids == std::vector<int>{kCls, v.id("good"), v.id("movie")});
    CHECK(ex.label == 1);
    CHECK_FALSE(ex.segment_b_start.has_value());
    CHECK(ex.attackable == std::vector<int>{1, 2});
}

TEST_CASE("encode pair restricts attackable range to the second sentence") {
    Vocab v = build_vocab({"q s t"}, 10, 1);
    EncodedExample ex = encode(v, "q", std::string("s t"), 0, 16);
    REQUIRE(ex.segment_b_start.has_value());
    CHECK(ex.ids[*ex.segment_b_start - 1] == kSep);
    for (int pos : ex.attackable) CHECK(pos >= *ex.segment_b_start);
    CHECK(ex.attackable.size() == 2);
}

TEST_CASE("encode truncates to max_len") {
    Vocab v = build_vocab({"a b c d e f g h"}, 20, 1);
    EncodedExample ex = encode(v, "a b c d e f g h", std::nullopt, 0, 4);
    CHECK(ex.ids.size() == 4);
    CHECK_THROWS_AS(encode(v, "a", std::nullopt, 0, 2), ArgumentError);
}

TEST_CASE("out-of-vocab words map to [UNK]") {
    Vocab v = build_vocab({"known"}, 10, 1);
    EncodedExample ex = encode(v, "known unknown", std::nullopt, 0, 8);
    CHECK(ex.ids[1] == v.id("known"));
    CHECK(ex.ids[2] == kUnk);
}

TEST_CASE("decode round-trips in-vocab text up to whitespace") {
    Vocab v = build_vocab({"the movie was great"}, 10, 1);
    EncodedExample ex = encode(v, "  The movie   was GREAT ", std::nullopt, 1, 16);
    CHECK(decode(v, ex.ids) == "the movie was great");
}

TEST_CASE("jsonl ingestion preserves order and reports bad lines") {
    const std::string path = temp_path("vda_textio_test.jsonl");
    {
        std::ofstream out(path);
        out << R"({"text":"ok","label":1})" << "\n";
        out << R"({"text_a":"p","text_b":"q","label":0})" << "\n";
    }
    auto raw = load_jsonl_raw(path);
    REQUIRE(raw.size() == 2);
    CHECK(raw[0].text_a == "ok");
    CHECK(raw[0].label == 1);
    CHECK_FALSE(raw[0].text_b.has_value());
    CHECK(raw[1].text_b == "q");

    {
        std::ofstream out(path);
        out << R"({"text":"ok","label":1})" << "\n";
        out << R"({"text":"missing label"})" << "\n";
    }
    try {
        load_jsonl_raw(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_jsonl_raw(temp_path("no_such_file.jsonl")), IoError);
    std::remove(path.c_str());
}

TEST_CASE("jsonl ingestion yields N examples for N lines") {
    const std::string path = temp_path("vda_textio_bulk.jsonl");
    std::vector<RawExample> examples;
    for (int i = 0; i < 50; ++i)
        examples.push_back({"sentence number " + std::to_string(i), std::nullopt, i % 2});
    save_jsonl(path, examples);
    auto loaded = load_jsonl_raw(path);
    REQUIRE(loaded.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(loaded[i].text_a == examples[i].text_a);
    std::remove(path.c_str());
}

TEST_CASE("vocab persists as one token per line") {
    Vocab v = build_vocab({"alpha beta"}, 10, 1);
    const std::string path = temp_path("vda_vocab_test.txt");
    v.save(path);
    Vocab loaded = Vocab::load(path);
    CHECK(loaded.tokens() == v.tokens());
    CHECK(loaded.hash() == v.hash());
    std::remove(path.c_str());
}

TEST_CASE("synthetic corpus is deterministic and balanced") {
    auto a = generate_synthetic_examples(123, 10000);
    auto b = generate_synthetic_examples(123, 10000);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].text_a == b[i].text_a);
        CHECK(a[i].label == b[i].label);
    }
    long positives = 0;
    for (const auto& ex : a) positives += ex.label == 1;
    CHECK(std::abs(positives - 5000L) <= 100);  // within 1% of 50/50
}

TEST_CASE("every synthetic sentence contains a class-indicative word") {
    const auto& lex = synthetic_lexicon();
    for (const auto& ex : generate_synthetic_examples(7, 2000)) {
        bool has_pos = false, has_neg = false;
        for (const auto& w : tokenize(ex.text_a)) {
            has_pos = has_pos || lex.is_positive_word(w);
            has_neg = has_neg || lex.is_negative_word(w);
        }
        CHECK((has_pos || has_neg));
        // The signal is consistent: indicative words match the label.
        if (ex.label == 1) CHECK_FALSE(has_neg);
        else CHECK_FALSE(has_pos);
    }
}

TEST_CASE("generator rejects non-positive sizes") {
    CHECK_THROWS_AS(generate_synthetic_examples(1, 0), ArgumentError);
}
