#pragma once

#include "fecsynth/gateway.hpp"
#include "fecsynth/metrics.hpp"
#include "fecsynth/prompts.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace fecsynth::judge {

struct JudgeConfig {
    std::string model_id = "gpt-4o-mini";
    double temperature = 0.0;
    int max_output_tokens = 16;
};

/// Strict reply contract: one bare decimal number in [0, 1].
std::optional<double> parse_judge_reply(std::string_view reply);

/// Quality score of a correction via the evaluator prompt. Out-of-range or
/// unparseable output triggers one re-prompt (cache bypassed), then
/// JudgeUnparseable.
double judge_score(std::string_view mutated, std::string_view evidence,
                   std::string_view corrected, gw::Gateway& gateway,
                   const prompts::PromptSet& set, const JudgeConfig& cfg);

/// Reward for a corrected claim against the reference claim and evidence:
/// s_correct is the evaluator score of the correction (reference claim in the
/// original-sentence slot), s_sim the deterministic token-level similarity,
/// s_flu the quality-validator verdict (Yes -> 1, No -> 0); total is the
/// unweighted sum.
metrics::RewardBreakdown reward(std::string_view ref_claim, std::string_view corrected,
                                std::string_view evidence, gw::Gateway& gateway,
                                const prompts::PromptSet& set, const JudgeConfig& cfg);

} // namespace fecsynth::judge
