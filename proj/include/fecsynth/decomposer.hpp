#pragma once

#include "fecsynth/dataset.hpp"
#include "fecsynth/gateway.hpp"
#include "fecsynth/program_dsl.hpp"
#include "fecsynth/prompts.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fecsynth::decomposer {

struct DecomposerConfig {
    std::string model_id = "gpt-4o-mini";
    double temperature = 0.0;
    int max_output_tokens = 512;
    /// Additional attempts after the first parse failure.
    int max_reparse = 2;
};

struct DecompositionOutcome {
    std::string claim_id;
    std::optional<dsl::ReasoningProgram> program;
    int attempts = 0;
    std::vector<std::string> raw_outputs;
    std::optional<std::string> failure;
};

/// The planner template with [[CLAIM]] substituted. Throws ValidationError on
/// an empty claim.
std::string build_decomposition_prompt(const prompts::PromptSet& set, std::string_view claim);

/// Ask the planner for a reasoning program; re-prompt with the identical
/// prompt (cache bypassed) on parse failure, up to max_reparse extra attempts.
/// Requires record.label == SUPPORTS. Gateway errors propagate.
DecompositionOutcome decompose(const dataset::ClaimRecord& record, gw::Gateway& gateway,
                               const prompts::PromptSet& set, const DecomposerConfig& cfg);

} // namespace fecsynth::decomposer
