#include "fecsynth/filter_chain.hpp"

#include "fecsynth/errors.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

using namespace fecsynth;
using testutil::TempDir;

namespace {

dataset::ClaimRecord source_record(std::string claim, std::vector<std::string> evidence) {
    dataset::ClaimRecord rec;
    rec.id = "src";
    rec.claim = std::move(claim);
    rec.evidence = std::move(evidence);
    rec.label = dataset::Label::SUPPORTS;
    return rec;
}

injector::CorruptionCandidate candidate_of(const dataset::ClaimRecord& src, std::string text,
                                           int ordinal = 0) {
    injector::CorruptionCandidate cand;
    cand.source_claim_id = src.id;
    cand.corrupted_text = std::move(text);
    cand.ordinal = ordinal;
    cand.evidence = src.evidence;
    return cand;
}

filter::Verdict verdict_of(const filter::FilterReport& report, std::string_view name) {
    auto it = report.verdicts.find(std::string(name));
    REQUIRE(it != report.verdicts.end());
    return it->second;
}

} // namespace

TEST_SUITE_BEGIN("filter");

TEST_CASE("hop replies parse as a bare count with an optional Answer prefix") {
    CHECK(filter::parse_hop_reply("2").value() == 2);
    CHECK(filter::parse_hop_reply("Answer: 3").value() == 3);
    CHECK(filter::parse_hop_reply(" Answer:4 ").value() == 4);
    CHECK(filter::parse_hop_reply("007").value() == 7);
    CHECK(filter::parse_hop_reply("123456789").value() == 123456789);
    CHECK_FALSE(filter::parse_hop_reply("two").has_value());
    CHECK_FALSE(filter::parse_hop_reply("3 hops").has_value());
    CHECK_FALSE(filter::parse_hop_reply("-1").has_value());
    CHECK_FALSE(filter::parse_hop_reply("Answer:").has_value());
    CHECK_FALSE(filter::parse_hop_reply("1234567890").has_value());
    CHECK_FALSE(filter::parse_hop_reply("").has_value());
}

TEST_CASE("entailment replies parse case-insensitively") {
    CHECK(filter::parse_entailment_reply("REFUTES") == filter::Entailment::Refutes);
    CHECK(filter::parse_entailment_reply(" Supports \n") == filter::Entailment::Supports);
    CHECK(filter::parse_entailment_reply("not enough info") ==
          filter::Entailment::NotEnoughInfo);
    CHECK_FALSE(filter::parse_entailment_reply("maybe").has_value());
    CHECK_FALSE(filter::parse_entailment_reply("REFUTES!").has_value());
}

TEST_CASE("length criterion bounds tokens and the candidate/source ratio") {
    filter::FilterConfig cfg;
    std::string source = "one two three four five six seven";
    CHECK(filter::check_length("a b c d e f", source, cfg) == filter::Verdict::Pass);
    CHECK(filter::check_length("a b c", source, cfg) == filter::Verdict::Fail);
    CHECK(filter::check_length("a b c d", "solo", cfg) == filter::Verdict::Fail); // ratio 4.0
    CHECK(filter::check_length("a b c d", "a b c d e f g h i", cfg) ==
          filter::Verdict::Fail); // ratio 0.44
    CHECK(filter::check_length("a b c d", "", cfg) == filter::Verdict::Fail);
    cfg.min_tokens = 1;
    cfg.min_ratio = 0.1;
    CHECK(filter::check_length("a", source, cfg) == filter::Verdict::Pass);
}

TEST_CASE("identity criterion fails only texts equal under normalization") {
    CHECK(filter::check_identity("Paris is nice.", "paris   is nice") == filter::Verdict::Fail);
    CHECK(filter::check_identity("Paris is nice.", "Lyon is nice.") == filter::Verdict::Pass);
    CHECK(filter::check_identity("Caf\xc3\xa9 open!", "Cafe\xcc\x81 open") ==
          filter::Verdict::Fail);
}

TEST_CASE("llm-backed criteria map scripted replies to verdicts") {
    TempDir fixtures{"flt-llm"};
    auto rig = testutil::mock_gateway(fixtures.path);
    filter::FilterConfig cfg;
    const auto& set = testutil::prompt_set();

    testutil::fixture_text(fixtures.path, testutil::hop_request("hops two", cfg), "Answer: 2");
    testutil::fixture_text(fixtures.path, testutil::hop_request("hops one", cfg), "1");
    testutil::fixture_text(fixtures.path, testutil::hop_request("hops mush", cfg), "many");
    auto [v2, e2] = filter::check_multihop("hops two", *rig.gateway, set, cfg);
    CHECK(v2 == filter::Verdict::Pass);
    CHECK(e2.value() == 2);
    auto [v1, e1] = filter::check_multihop("hops one", *rig.gateway, set, cfg);
    CHECK(v1 == filter::Verdict::Fail);
    CHECK(e1.value() == 1);
    auto [vm, em] = filter::check_multihop("hops mush", *rig.gateway, set, cfg);
    CHECK(vm == filter::Verdict::Fail);
    CHECK_FALSE(em.has_value());

    testutil::fixture_text(fixtures.path, testutil::quality_request("fluent", cfg), " YES \n");
    testutil::fixture_text(fixtures.path, testutil::quality_request("clunky", cfg), "yes.");
    CHECK(filter::check_quality("fluent", *rig.gateway, set, cfg) == filter::Verdict::Pass);
    CHECK(filter::check_quality("clunky", *rig.gateway, set, cfg) == filter::Verdict::Fail);

    std::vector<std::string> ev{"E1.", "E2."};
    testutil::fixture_text(fixtures.path, testutil::entailment_request("contra", ev, cfg),
                           "REFUTES");
    testutil::fixture_text(fixtures.path, testutil::entailment_request("agree", ev, cfg),
                           "SUPPORTS");
    testutil::fixture_text(fixtures.path, testutil::entailment_request("vague", ev, cfg),
                           "NOT ENOUGH INFO");
    auto [cv, ce] = filter::check_contradiction("contra", ev, *rig.gateway, set, cfg);
    CHECK(cv == filter::Verdict::Pass);
    CHECK(ce.value() == filter::Entailment::Refutes);
    auto [sv, se] = filter::check_contradiction("agree", ev, *rig.gateway, set, cfg);
    CHECK(sv == filter::Verdict::Fail);
    CHECK(se.value() == filter::Entailment::Supports);
    auto [nv, ne] = filter::check_contradiction("vague", ev, *rig.gateway, set, cfg);
    CHECK(nv == filter::Verdict::Fail);
    CHECK(ne.value() == filter::Entailment::NotEnoughInfo);

    CHECK_THROWS_AS(filter::check_contradiction("x", {}, *rig.gateway, set, cfg),
                    ValidationError);
}

TEST_CASE("a candidate passing every criterion is accepted") {
    TempDir fixtures{"flt-pass"};
    auto rig = testutil::mock_gateway(fixtures.path);
    filter::FilterConfig cfg;
    auto src = source_record("The Eiffel Tower is located in Paris.",
                             {"The Eiffel Tower is in Paris."});
    auto cand = candidate_of(src, "The Eiffel Tower is located in Berlin.", 2);

    testutil::fixture_text(fixtures.path, testutil::hop_request(cand.corrupted_text, cfg), "2");
    testutil::fixture_text(fixtures.path, testutil::quality_request(cand.corrupted_text, cfg),
                           "Yes");
    testutil::fixture_text(fixtures.path,
                           testutil::entailment_request(cand.corrupted_text, cand.evidence, cfg),
                           "REFUTES");

    auto report = filter::apply_filters(cand, src, *rig.gateway, testutil::prompt_set(), cfg);
    CHECK(report.candidate_id == "src#2");
    CHECK(report.passed);
    for (auto name : filter::kCriteria) {
        CHECK(verdict_of(report, name) == filter::Verdict::Pass);
    }
    CHECK(report.hop_estimate.value() == 2);
    CHECK(report.contradiction_verdict.value() == filter::Entailment::Refutes);
    CHECK(report.notes.empty());
    CHECK(rig.backend->calls() == 3);
}

TEST_CASE("short circuit skips the llm criteria after a local fail") {
    TempDir fixtures{"flt-short"};
    auto rig = testutil::mock_gateway(fixtures.path);
    filter::FilterConfig cfg;
    auto src = source_record("The Eiffel Tower is located in Paris.",
                             {"The Eiffel Tower is in Paris."});
    auto cand = candidate_of(src, "the eiffel tower is located in paris"); // identity fail

    auto report = filter::apply_filters(cand, src, *rig.gateway, testutil::prompt_set(), cfg);
    CHECK_FALSE(report.passed);
    CHECK(verdict_of(report, "length") == filter::Verdict::Pass);
    CHECK(verdict_of(report, "identity") == filter::Verdict::Fail);
    CHECK(verdict_of(report, "multihop") == filter::Verdict::Skipped);
    CHECK(verdict_of(report, "quality") == filter::Verdict::Skipped);
    CHECK(verdict_of(report, "contradiction") == filter::Verdict::Skipped);
    CHECK(rig.backend->calls() == 0);
}

TEST_CASE("without short circuit every criterion is evaluated") {
    TempDir fixtures{"flt-full"};
    auto rig = testutil::mock_gateway(fixtures.path);
    filter::FilterConfig cfg;
    cfg.short_circuit = false;
    auto src = source_record("The Eiffel Tower is located in Paris.",
                             {"The Eiffel Tower is in Paris."});
    auto cand = candidate_of(src, "Too short"); // length fail

    testutil::fixture_text(fixtures.path, testutil::hop_request(cand.corrupted_text, cfg), "3");
    testutil::fixture_text(fixtures.path, testutil::quality_request(cand.corrupted_text, cfg),
                           "Yes");
    testutil::fixture_text(fixtures.path,
                           testutil::entailment_request(cand.corrupted_text, cand.evidence, cfg),
                           "REFUTES");

    auto report = filter::apply_filters(cand, src, *rig.gateway, testutil::prompt_set(), cfg);
    CHECK_FALSE(report.passed);
    CHECK(verdict_of(report, "length") == filter::Verdict::Fail);
    CHECK(verdict_of(report, "identity") == filter::Verdict::Pass);
    CHECK(verdict_of(report, "multihop") == filter::Verdict::Pass);
    CHECK(verdict_of(report, "quality") == filter::Verdict::Pass);
    CHECK(verdict_of(report, "contradiction") == filter::Verdict::Pass);
    CHECK(rig.backend->calls() == 3);
}

TEST_CASE("gateway failures become criterion fails with a note") {
    TempDir fixtures{"flt-gwerr"};
    auto rig = testutil::mock_gateway(fixtures.path); // no fixtures at all
    filter::FilterConfig cfg;
    auto src = source_record("The Eiffel Tower is located in Paris.",
                             {"The Eiffel Tower is in Paris."});
    auto cand = candidate_of(src, "The Eiffel Tower is located in Berlin.");

    auto report = filter::apply_filters(cand, src, *rig.gateway, testutil::prompt_set(), cfg);
    CHECK_FALSE(report.passed);
    CHECK(verdict_of(report, "multihop") == filter::Verdict::Fail);
    CHECK(verdict_of(report, "quality") == filter::Verdict::Skipped);
    CHECK(verdict_of(report, "contradiction") == filter::Verdict::Skipped);
    REQUIRE(report.notes.size() == 1);
    CHECK(report.notes[0].rfind("multihop:", 0) == 0);
}

TEST_CASE("a candidate without evidence fails contradiction locally") {
    TempDir fixtures{"flt-noev"};
    auto rig = testutil::mock_gateway(fixtures.path);
    filter::FilterConfig cfg;
    auto src = source_record("The Eiffel Tower is located in Paris.", {});
    auto cand = candidate_of(src, "The Eiffel Tower is located in Berlin.");

    testutil::fixture_text(fixtures.path, testutil::hop_request(cand.corrupted_text, cfg), "2");
    testutil::fixture_text(fixtures.path, testutil::quality_request(cand.corrupted_text, cfg),
                           "Yes");

    auto report = filter::apply_filters(cand, src, *rig.gateway, testutil::prompt_set(), cfg);
    CHECK_FALSE(report.passed);
    CHECK(verdict_of(report, "contradiction") == filter::Verdict::Fail);
    REQUIRE(report.notes.size() == 1);
    CHECK(report.notes[0].find("no evidence") != std::string::npos);
    CHECK(rig.backend->calls() == 2);
}

TEST_CASE("chain invariants hold across randomized verdict scripts") {
    std::mt19937 rng(20240817);
    const std::string source_claim = "The reference claim has exactly seven tokens.";
    const std::vector<std::string> hop_replies{"1", "2", "3", "Answer: 4", "many"};
    const std::vector<std::string> quality_replies{"Yes", "yes", "No", "maybe"};
    const std::vector<std::string> ent_replies{"REFUTES", "SUPPORTS", "NOT ENOUGH INFO", "eh"};

    for (int iter = 0; iter < 60; ++iter) {
        TempDir fixtures{"flt-prop"};
        filter::FilterConfig cfg;
        cfg.short_circuit = (rng() & 1) != 0;

        bool identical = iter % 7 == 0;
        bool has_evidence = iter % 11 != 0;
        auto src = source_record(source_claim,
                                 has_evidence ? std::vector<std::string>{"Evidence sentence."}
                                              : std::vector<std::string>{});

        std::string cand_text;
        if (identical) {
            cand_text = source_claim;
        } else {
            int n = 2 + static_cast<int>(rng() % 15);
            cand_text = "v" + std::to_string(iter);
            for (int t = 1; t < n; ++t) cand_text += " tok" + std::to_string(t);
        }
        auto cand = candidate_of(src, cand_text);

        std::string hop_reply = hop_replies[rng() % hop_replies.size()];
        std::string quality_reply = quality_replies[rng() % quality_replies.size()];
        std::string ent_reply = ent_replies[rng() % ent_replies.size()];
        testutil::fixture_text(fixtures.path, testutil::hop_request(cand_text, cfg), hop_reply);
        testutil::fixture_text(fixtures.path, testutil::quality_request(cand_text, cfg),
                               quality_reply);
        if (has_evidence) {
            testutil::fixture_text(fixtures.path,
                                   testutil::entailment_request(cand_text, cand.evidence, cfg),
                                   ent_reply);
        }

        auto rig = testutil::mock_gateway(fixtures.path);
        auto report = filter::apply_filters(cand, src, *rig.gateway, testutil::prompt_set(), cfg);

        // acceptance is exactly "every criterion passed"
        bool all_pass = true;
        for (auto name : filter::kCriteria) {
            if (verdict_of(report, name) != filter::Verdict::Pass) all_pass = false;
        }
        CHECK(report.passed == all_pass);

        // skips only ever trail the first fail, and only when short-circuiting
        size_t first_fail = filter::kCriteria.size();
        for (size_t i = 0; i < filter::kCriteria.size(); ++i) {
            auto v = verdict_of(report, filter::kCriteria[i]);
            if (v == filter::Verdict::Fail && first_fail == filter::kCriteria.size()) {
                first_fail = i;
            }
            if (cfg.short_circuit) {
                if (i > first_fail) {
                    CHECK(v == filter::Verdict::Skipped);
                } else {
                    CHECK(v != filter::Verdict::Skipped);
                }
            } else {
                CHECK(v != filter::Verdict::Skipped);
            }
        }

        // the recorded hop estimate always agrees with the multihop verdict
        if (report.hop_estimate.has_value()) {
            auto want = *report.hop_estimate >= cfg.min_hops ? filter::Verdict::Pass
                                                             : filter::Verdict::Fail;
            CHECK(verdict_of(report, "multihop") == want);
        } else if (verdict_of(report, "multihop") == filter::Verdict::Pass) {
            FAIL("multihop passed without an estimate");
        }
        if (verdict_of(report, "contradiction") == filter::Verdict::Pass) {
            CHECK(report.contradiction_verdict.value() == filter::Entailment::Refutes);
        }
        if (report.passed) {
            CHECK_FALSE(identical);
            CHECK(has_evidence);
        }

        // tightening the hop threshold never rescues a rejected candidate
        filter::FilterConfig tighter = cfg;
        tighter.min_hops = cfg.min_hops + 2;
        auto rig2 = testutil::mock_gateway(fixtures.path);
        auto report2 =
            filter::apply_filters(cand, src, *rig2.gateway, testutil::prompt_set(), tighter);
        if (report2.passed) CHECK(report.passed);
    }
}

TEST_SUITE_END();
