#include "fecsynth/metrics.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

using namespace fecsynth;
using nlohmann::json;

namespace {

json load_cases() {
    std::ifstream in(FECSYNTH_TEST_DATA_DIR "/sari_cases.json");
    REQUIRE(in.good());
    json cases;
    in >> cases;
    return cases;
}

std::string random_sentence(std::mt19937& rng, int min_len, int max_len) {
    static const std::vector<std::string> vocab = {
        "alpha", "bravo", "charlie", "delta", "echo",  "foxtrot",
        "golf",  "hotel", "india",   "juliet", "kilo", "lima"};
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<size_t> word(0, vocab.size() - 1);
    int n = len(rng);
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (!s.empty()) s += ' ';
        s += vocab[word(rng)];
    }
    return s;
}

// O(n*m) greedy occurrence matching; no hashing or sorted containers involved.
double brute_force_rouge2(std::string_view prediction, std::string_view reference) {
    auto p = text::metric_tokens(prediction);
    auto r = text::metric_tokens(reference);
    if (p.size() < 2 || r.size() < 2) return 0.0;
    auto bigrams = [](const std::vector<std::string>& t) {
        std::vector<std::pair<std::string, std::string>> out;
        for (size_t i = 0; i + 1 < t.size(); ++i) out.emplace_back(t[i], t[i + 1]);
        return out;
    };
    auto pb = bigrams(p);
    auto rb = bigrams(r);
    std::vector<bool> used(rb.size(), false);
    long overlap = 0;
    for (const auto& gram : pb) {
        for (size_t j = 0; j < rb.size(); ++j) {
            if (!used[j] && rb[j] == gram) {
                used[j] = true;
                ++overlap;
                break;
            }
        }
    }
    double recall = static_cast<double>(overlap) / static_cast<double>(rb.size());
    double precision = static_cast<double>(overlap) / static_cast<double>(pb.size());
    if (precision > 0.0 || recall > 0.0) {
        return 2.0 * precision * recall / (precision + recall);
    }
    return 0.0;
}

} // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("frozen reference cases agree within 1e-6") {
    json cases = load_cases();
    REQUIRE(cases.size() >= 20);
    size_t multi_reference = 0;
    size_t identity_edit = 0;
    for (const auto& c : cases) {
        std::vector<std::string> refs = c.at("references").get<std::vector<std::string>>();
        if (refs.size() > 1) ++multi_reference;
        std::string source = c.at("source").get<std::string>();
        std::string prediction = c.at("prediction").get<std::string>();
        if (source == prediction) ++identity_edit;
        auto got = metrics::sari(source, prediction, refs);
        const auto& want = c.at("expected");
        CAPTURE(source);
        CAPTURE(prediction);
        CHECK(std::fabs(got.keep - want.at("keep").get<double>()) < 1e-6);
        CHECK(std::fabs(got.add - want.at("add").get<double>()) < 1e-6);
        CHECK(std::fabs(got.del - want.at("delete").get<double>()) < 1e-6);
        CHECK(std::fabs(got.final - want.at("final").get<double>()) < 1e-6);
    }
    CHECK(multi_reference >= 3);
    CHECK(identity_edit >= 1);
}

TEST_CASE("published do-nothing rows reproduce from their components") {
    CHECK(std::fabs((84.62 + 4.22 + 100.0) / 3.0 - 62.95) < 0.005);
    CHECK(std::fabs((88.17 + 3.61 + 100.0) / 3.0 - 63.93) < 0.005);
}

TEST_CASE("final is always the component mean") {
    std::mt19937 rng(7);
    for (int i = 0; i < 100; ++i) {
        auto s = metrics::sari(random_sentence(rng, 0, 10), random_sentence(rng, 0, 10),
                               {random_sentence(rng, 1, 10)});
        CHECK(s.final == doctest::Approx((s.keep + s.add + s.del) / 3.0).epsilon(1e-12));
        CHECK(s.keep >= 0.0);
        CHECK(s.keep <= 100.0);
        CHECK(s.add >= 0.0);
        CHECK(s.add <= 100.0);
        CHECK(s.del >= 0.0);
        CHECK(s.del <= 100.0);
    }
}

TEST_CASE("do-nothing predictions always score delete = 100 exactly") {
    std::mt19937 rng(20240817);
    for (int i = 0; i < 50; ++i) {
        std::string source = random_sentence(rng, 1, 14);
        std::vector<std::string> refs;
        std::uniform_int_distribution<int> nref(1, 3);
        int k = nref(rng);
        for (int j = 0; j < k; ++j) refs.push_back(random_sentence(rng, 1, 14));
        auto s = metrics::sari(source, source, refs);
        CHECK(s.del == 100.0);
    }
}

TEST_CASE("empty reference list throws") {
    CHECK_THROWS_AS(metrics::sari("a", "b", {}), EmptyReferenceList);
}

TEST_CASE("rouge2 matches brute force on 200 random pairs exactly") {
    std::mt19937 rng(20240817);
    for (int i = 0; i < 200; ++i) {
        std::string a = random_sentence(rng, 0, 30);
        std::string b = random_sentence(rng, 0, 30);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(metrics::rouge2_f1(a, b) == brute_force_rouge2(a, b));
    }
}

TEST_CASE("rouge2 conventions") {
    CHECK(metrics::rouge2_f1("one two three", "one two three") == 1.0);
    CHECK(metrics::rouge2_f1("single", "single") == 0.0); // below bigram order
    CHECK(metrics::rouge2_f1("", "one two") == 0.0);
    CHECK(metrics::rouge2_f1("one two", "") == 0.0);
    // recall ignores prediction length
    CHECK(metrics::rouge2_recall("one two three four", "one two") == 1.0);
    CHECK(metrics::rouge2_f1("one two three four", "one two") ==
          doctest::Approx(2.0 * (1.0 / 3.0) * 1.0 / (1.0 / 3.0 + 1.0)));
}

TEST_CASE("lcs similarity") {
    CHECK(metrics::lcs_similarity("same text", "same text") == 1.0);
    CHECK(metrics::lcs_similarity("", "") == 1.0);
    CHECK(metrics::lcs_similarity("a", "") == 0.0);
    CHECK(metrics::lcs_similarity("Case Differs", "case differs") == 1.0); // metric tokens
    CHECK(metrics::lcs_similarity("a b c d", "a x c y") == doctest::Approx(0.5));
}

TEST_SUITE_END();
