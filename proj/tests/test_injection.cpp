#include "fecsynth/decomposer.hpp"
#include "fecsynth/errors.hpp"
#include "fecsynth/injector.hpp"
#include "fecsynth/judge.hpp"
#include "fecsynth/prompts.hpp"

#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace fecsynth;
using nlohmann::json;
using testutil::TempDir;

namespace {

const char* kTwoVerifyProgram =
    "fact_1 = Verify(\"Howard University Hospital is in Washington.\")\n"
    "fact_2 = Verify(\"Providence Hospital is in Washington.\")\n"
    "label = Predict(fact_1 and fact_2)\n";

const char* kQuestionProgram =
    "answer_1 = Question(\"Which arena did the event take place at?\")\n"
    "fact_1 = Verify(f\"{answer_1} currently goes by the name TD Garden.\")\n"
    "label = Predict(fact_1)\n";

dsl::ReasoningProgram parse_or_die(const char* text) {
    auto r = dsl::parse_program(text);
    REQUIRE(r.ok());
    return *r.program;
}

dataset::ClaimRecord make_record(std::string id, std::string claim,
                                 std::vector<std::string> evidence,
                                 dataset::Label label = dataset::Label::SUPPORTS) {
    dataset::ClaimRecord rec;
    rec.id = std::move(id);
    rec.claim = std::move(claim);
    rec.evidence = std::move(evidence);
    rec.label = label;
    return rec;
}

} // namespace

TEST_SUITE_BEGIN("injection");

TEST_CASE("substitute replaces exactly one slot and never rescans") {
    CHECK(prompts::substitute("Claim: [[claim]]!", "[[claim]]", "X") == "Claim: X!");
    // a value containing the placeholder text stays literal
    CHECK(prompts::substitute("A [[v]] B", "[[v]]", "nested [[v]]") == "A nested [[v]] B");
    CHECK_THROWS_AS(prompts::substitute("no slot here", "[[v]]", "x"), ValidationError);
    CHECK_THROWS_AS(prompts::substitute("[[v]] and [[v]]", "[[v]]", "x"), ValidationError);
}

TEST_CASE("substitute_all locates slots on the pristine template") {
    auto out = prompts::substitute_all("c=[[claim]] e=[[evidence]]",
                                       {{"[[claim]]", "has [[evidence]] inside"},
                                        {"[[evidence]]", "E"}});
    CHECK(out == "c=has [[evidence]] inside e=E");
    CHECK_THROWS_AS(prompts::substitute_all("only [[claim]]",
                                            {{"[[claim]]", "x"}, {"[[evidence]]", "y"}}),
                    ValidationError);
}

TEST_CASE("prompt set loads templates that carry their slots") {
    const auto& set = testutil::prompt_set();
    CHECK(set.decompose.find("[[CLAIM]]") != std::string::npos);
    CHECK(set.inject.find("[[claim]]") != std::string::npos);
    CHECK(set.inject.find("[[prediction]]") != std::string::npos);
    CHECK(set.hop_estimator.find("[[claim]]") != std::string::npos);
    CHECK(set.quality_validator.find("[[claim]]") != std::string::npos);
    CHECK(set.entailment.find("[[claim]]") != std::string::npos);
    CHECK(set.entailment.find("[[evidence]]") != std::string::npos);
    CHECK(set.judge.find("[[mutated]]") != std::string::npos);
    CHECK(set.judge.find("[[evidence]]") != std::string::npos);
    CHECK(set.judge.find("[[output_text]]") != std::string::npos);
    CHECK_THROWS_AS(prompts::PromptSet::load("/nonexistent/prompt/dir"), UnreadableFile);
}

TEST_CASE("decompose parses the planner reply on the first attempt") {
    TempDir fixtures{"dec-ok"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto rec = make_record("c1", "Both hospitals are in Washington.", {"ev"});
    testutil::fixture_text(fixtures.path, testutil::decompose_request(rec.claim),
                           std::string("```\n") + kTwoVerifyProgram + "```\n");

    auto outcome = decomposer::decompose(rec, *rig.gateway, testutil::prompt_set(), {});
    CHECK(outcome.claim_id == "c1");
    CHECK(outcome.attempts == 1);
    REQUIRE(outcome.program.has_value());
    CHECK(outcome.program->steps.size() == 3);
    CHECK_FALSE(outcome.failure.has_value());
    CHECK(rig.backend->calls() == 1);
}

TEST_CASE("decompose re-prompts with the cache bypassed on a parse failure") {
    TempDir fixtures{"dec-retry"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto rec = make_record("c2", "A two-step claim.", {});
    testutil::fixture_json(fixtures.path, testutil::decompose_request(rec.claim),
                           json::array({json{{"text", "Sure! Here is the plan in prose."}},
                                        json{{"text", kTwoVerifyProgram}}}));

    auto outcome = decomposer::decompose(rec, *rig.gateway, testutil::prompt_set(), {});
    CHECK(outcome.attempts == 2);
    REQUIRE(outcome.program.has_value());
    REQUIRE(outcome.raw_outputs.size() == 2);
    CHECK(outcome.raw_outputs[0] == "Sure! Here is the plan in prose.");
    CHECK(rig.backend->calls() == 2);
}

TEST_CASE("decompose records a failure after exhausting reparse attempts") {
    TempDir fixtures{"dec-fail"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto rec = make_record("c3", "Never parses.", {});
    decomposer::DecomposerConfig cfg;
    cfg.max_reparse = 1;
    testutil::fixture_text(fixtures.path, testutil::decompose_request(rec.claim, cfg),
                           "no program at all");

    auto outcome = decomposer::decompose(rec, *rig.gateway, testutil::prompt_set(), cfg);
    CHECK_FALSE(outcome.program.has_value());
    CHECK(outcome.attempts == 2);
    CHECK(outcome.raw_outputs.size() == 2);
    REQUIRE(outcome.failure.has_value());
    CHECK(outcome.failure->find("attempt 1") != std::string::npos);
    CHECK(outcome.failure->find("attempt 2") != std::string::npos);
    CHECK(rig.backend->calls() == 2);
}

TEST_CASE("decompose rejects non-SUPPORTS records before any traffic") {
    TempDir fixtures{"dec-label"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto rec = make_record("c4", "Refuted.", {}, dataset::Label::REFUTES);
    CHECK_THROWS_AS(decomposer::decompose(rec, *rig.gateway, testutil::prompt_set(), {}),
                    ValidationError);
    CHECK(rig.backend->calls() == 0);
}

TEST_CASE("decompose propagates gateway errors") {
    TempDir fixtures{"dec-miss"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto rec = make_record("c5", "No fixture for this.", {});
    CHECK_THROWS_AS(decomposer::decompose(rec, *rig.gateway, testutil::prompt_set(), {}),
                    GatewayError);
}

TEST_CASE("injection prompt embeds the program as an escaped fenced block") {
    auto program = parse_or_die(kTwoVerifyProgram);
    auto prompt = injector::build_injection_prompt(testutil::prompt_set(),
                                                   "Both hospitals are in Washington.", program);
    CHECK(prompt.find("Both hospitals are in Washington.") != std::string::npos);
    CHECK(prompt.find("```python\\ndef program():\\n    fact_1 = "
                      "Verify(\\\"Howard University Hospital") != std::string::npos);
    CHECK(prompt.find("fact_2)\\n```") != std::string::npos);
    // real newlines from the program never leak into the escaped block
    CHECK(prompt.find("Washington.\\\")\n") == std::string::npos);
    CHECK_THROWS_AS(injector::build_injection_prompt(testutil::prompt_set(), "", program),
                    ValidationError);
}

TEST_CASE("injection replies are decoded leniently but typed strictly") {
    CHECK(injector::parse_injection_output(R"(["a", "b"])") ==
          std::vector<std::string>{"a", "b"});
    CHECK(injector::parse_injection_output("```json\n[\" padded \", \"\", \"x\"]\n```") ==
          std::vector<std::string>{"padded", "x"});
    CHECK(injector::parse_injection_output("\n  []  \n") == std::vector<std::string>{});
    CHECK_THROWS_AS(injector::parse_injection_output("not json"), NotAJsonArray);
    CHECK_THROWS_AS(injector::parse_injection_output(R"({"a": 1})"), NotAJsonArray);
    CHECK_THROWS_AS(injector::parse_injection_output(R"(["ok", 3])"), NonStringElement);
}

TEST_CASE("expected hint sequence follows the program shape") {
    using injector::TransformHint;
    auto two_verify = injector::expected_hint_sequence(parse_or_die(kTwoVerifyProgram));
    CHECK(two_verify == std::vector<TransformHint>{
                            TransformHint::PredictEntitySwap, TransformHint::VerifyFactSwap,
                            TransformHint::VerifyNegation, TransformHint::VerifyFactSwap,
                            TransformHint::VerifyNegation});
    auto with_question = injector::expected_hint_sequence(parse_or_die(kQuestionProgram));
    CHECK(with_question == std::vector<TransformHint>{
                               TransformHint::PredictEntitySwap, TransformHint::VerifyFactSwap,
                               TransformHint::VerifyNegation, TransformHint::QuestionAnswerSwap});
}

TEST_CASE("inject assigns hints positionally when the count matches") {
    TempDir fixtures{"inj-ok"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto program = parse_or_die(kQuestionProgram);
    auto rec = make_record("c6", "The event took place at TD Garden.", {"e1", "e2"});
    testutil::fixture_text(fixtures.path, testutil::inject_request(rec.claim, program),
                           R"(["v0", "v1", "v2", "v3"])");

    auto cands = injector::inject(rec, program, *rig.gateway, testutil::prompt_set(), {});
    REQUIRE(cands.size() == 4);
    for (size_t i = 0; i < cands.size(); ++i) {
        CHECK(cands[i].source_claim_id == "c6");
        CHECK(cands[i].ordinal == static_cast<int>(i));
        CHECK(cands[i].corrupted_text == "v" + std::to_string(i));
        CHECK(cands[i].evidence == rec.evidence);
    }
    CHECK(cands[0].transform_hint == injector::TransformHint::PredictEntitySwap);
    CHECK(cands[1].transform_hint == injector::TransformHint::VerifyFactSwap);
    CHECK(cands[2].transform_hint == injector::TransformHint::VerifyNegation);
    CHECK(cands[3].transform_hint == injector::TransformHint::QuestionAnswerSwap);
}

TEST_CASE("inject marks every candidate Unknown on a count mismatch") {
    TempDir fixtures{"inj-mismatch"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto program = parse_or_die(kQuestionProgram);
    auto rec = make_record("c7", "The event took place at TD Garden.", {});
    testutil::fixture_text(fixtures.path, testutil::inject_request(rec.claim, program),
                           R"(["only", "two"])");

    auto cands = injector::inject(rec, program, *rig.gateway, testutil::prompt_set(), {});
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].transform_hint == injector::TransformHint::Unknown);
    CHECK(cands[1].transform_hint == injector::TransformHint::Unknown);
}

TEST_CASE("inject re-prompts once when the reply is not a JSON array") {
    TempDir fixtures{"inj-retry"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto program = parse_or_die(kTwoVerifyProgram);
    auto rec = make_record("c8", "Both hospitals are in Washington.", {});
    testutil::fixture_json(fixtures.path, testutil::inject_request(rec.claim, program),
                           json::array({json{{"text", "I cannot answer as JSON."}},
                                        json{{"text", R"(["bad variant"])"}}}));

    auto cands = injector::inject(rec, program, *rig.gateway, testutil::prompt_set(), {});
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].corrupted_text == "bad variant");
    CHECK(rig.backend->calls() == 2);

    SUBCASE("a second bad reply propagates the parse error") {
        TempDir f2{"inj-retry2"};
        auto rig2 = testutil::mock_gateway(f2.path);
        testutil::fixture_text(f2.path, testutil::inject_request(rec.claim, program),
                               "never json");
        CHECK_THROWS_AS(injector::inject(rec, program, *rig2.gateway, testutil::prompt_set(), {}),
                        InjectionParseError);
        CHECK(rig2.backend->calls() == 2);
    }
}

TEST_CASE("inject rejects an empty candidate list") {
    TempDir fixtures{"inj-empty"};
    auto rig = testutil::mock_gateway(fixtures.path);
    auto program = parse_or_die(kTwoVerifyProgram);
    auto rec = make_record("c9", "Both hospitals are in Washington.", {});
    testutil::fixture_text(fixtures.path, testutil::inject_request(rec.claim, program),
                           R"([" ", ""])");
    CHECK_THROWS_AS(injector::inject(rec, program, *rig.gateway, testutil::prompt_set(), {}),
                    EmptyInjection);
}

TEST_CASE("transform hint names round-trip") {
    using injector::TransformHint;
    for (auto h : {TransformHint::PredictEntitySwap, TransformHint::VerifyFactSwap,
                   TransformHint::VerifyNegation, TransformHint::QuestionAnswerSwap,
                   TransformHint::Unknown}) {
        CHECK(injector::transform_hint_from_string(injector::transform_hint_name(h)) == h);
    }
    CHECK(injector::transform_hint_from_string("anything else") ==
          injector::TransformHint::Unknown);
}

TEST_CASE("judge replies must be a single bare decimal in range") {
    CHECK(judge::parse_judge_reply("0.85").value() == doctest::Approx(0.85));
    CHECK(judge::parse_judge_reply("1").value() == doctest::Approx(1.0));
    CHECK(judge::parse_judge_reply("0").value() == doctest::Approx(0.0));
    CHECK(judge::parse_judge_reply(" 0.5 \n").value() == doctest::Approx(0.5));
    CHECK(judge::parse_judge_reply(".5").value() == doctest::Approx(0.5));
    CHECK(judge::parse_judge_reply("0.").value() == doctest::Approx(0.0));
    CHECK_FALSE(judge::parse_judge_reply("").has_value());
    CHECK_FALSE(judge::parse_judge_reply("Score: 0.8").has_value());
    CHECK_FALSE(judge::parse_judge_reply("0.8 is my score").has_value());
    CHECK_FALSE(judge::parse_judge_reply("-0.1").has_value());
    CHECK_FALSE(judge::parse_judge_reply("1.2").has_value());
    CHECK_FALSE(judge::parse_judge_reply("0..5").has_value());
    CHECK_FALSE(judge::parse_judge_reply("1e-3").has_value());
    CHECK_FALSE(judge::parse_judge_reply(".").has_value());
}

TEST_CASE("judge_score takes the first clean score and re-prompts once otherwise") {
    TempDir fixtures{"judge-ok"};
    auto rig = testutil::mock_gateway(fixtures.path);
    testutil::fixture_text(fixtures.path, testutil::judge_request("bad claim", "ev", "fixed"),
                           "0.9");
    CHECK(judge::judge_score("bad claim", "ev", "fixed", *rig.gateway, testutil::prompt_set(),
                             {}) == doctest::Approx(0.9));
    CHECK(rig.backend->calls() == 1);

    SUBCASE("an out-of-range first reply triggers the bypass re-prompt") {
        TempDir f2{"judge-retry"};
        auto rig2 = testutil::mock_gateway(f2.path);
        testutil::fixture_json(f2.path, testutil::judge_request("bad claim", "ev", "fixed"),
                               json::array({json{{"text", "3.5"}}, json{{"text", "0.25"}}}));
        CHECK(judge::judge_score("bad claim", "ev", "fixed", *rig2.gateway,
                                 testutil::prompt_set(), {}) == doctest::Approx(0.25));
        CHECK(rig2.backend->calls() == 2);
    }
    SUBCASE("two unparseable replies raise JudgeUnparseable") {
        TempDir f3{"judge-fail"};
        auto rig3 = testutil::mock_gateway(f3.path);
        testutil::fixture_text(f3.path, testutil::judge_request("bad claim", "ev", "fixed"),
                               "I would rate this highly.");
        CHECK_THROWS_AS(judge::judge_score("bad claim", "ev", "fixed", *rig3.gateway,
                                           testutil::prompt_set(), {}),
                        JudgeUnparseable);
        CHECK(rig3.backend->calls() == 2);
    }
}

TEST_CASE("reward sums correctness, similarity, and fluency") {
    TempDir fixtures{"reward"};
    auto rig = testutil::mock_gateway(fixtures.path);
    std::string ref = "Paris hosts the Eiffel Tower.";
    std::string corrected = "Paris hosts the Eiffel Tower.";
    std::string evidence = "The Eiffel Tower is in Paris.";
    // the reference claim fills the original-sentence slot of the evaluator prompt
    testutil::fixture_text(fixtures.path, testutil::judge_request(ref, evidence, corrected),
                           "0.75");
    testutil::fixture_text(fixtures.path, testutil::fluency_request(corrected), " Yes\n");

    auto r = judge::reward(ref, corrected, evidence, *rig.gateway, testutil::prompt_set(), {});
    CHECK(r.s_correct == doctest::Approx(0.75));
    CHECK(r.s_sim == doctest::Approx(1.0));
    CHECK(r.s_flu == doctest::Approx(1.0));
    CHECK(r.total == doctest::Approx(2.75));

    SUBCASE("a No verdict zeroes the fluency term") {
        TempDir f2{"reward-no"};
        auto rig2 = testutil::mock_gateway(f2.path);
        std::string other = "Paris hosts a tower.";
        testutil::fixture_text(f2.path, testutil::judge_request(ref, evidence, other), "0.5");
        testutil::fixture_text(f2.path, testutil::fluency_request(other), "No");
        auto r2 = judge::reward(ref, other, evidence, *rig2.gateway, testutil::prompt_set(), {});
        CHECK(r2.s_flu == doctest::Approx(0.0));
        CHECK(r2.s_sim > 0.0);
        CHECK(r2.s_sim < 1.0);
        CHECK(r2.total == doctest::Approx(r2.s_correct + r2.s_sim + r2.s_flu));
    }
}

TEST_SUITE_END();
