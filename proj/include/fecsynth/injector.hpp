#pragma once

#include "fecsynth/dataset.hpp"
#include "fecsynth/gateway.hpp"
#include "fecsynth/program_dsl.hpp"
#include "fecsynth/prompts.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace fecsynth::injector {

enum class TransformHint {
    PredictEntitySwap,
    VerifyFactSwap,
    VerifyNegation,
    QuestionAnswerSwap,
    Unknown,
};

std::string_view transform_hint_name(TransformHint h);
TransformHint transform_hint_from_string(std::string_view s);

struct CorruptionCandidate {
    std::string source_claim_id;
    std::string corrupted_text;
    int ordinal = 0;
    TransformHint transform_hint = TransformHint::Unknown;
    std::vector<std::string> evidence;
};

struct InjectorConfig {
    std::string model_id = "gpt-4o-mini";
    /// Sampling diversity is wanted for corruption generation.
    double temperature = 0.7;
    int max_output_tokens = 1024;
};

/// The injection template with [[claim]] and [[prediction]] substituted; the
/// program is serialized into a fenced code block with escaped newlines and
/// quotes, matching the template's exemplar encoding. Throws ValidationError
/// on an empty claim.
std::string build_injection_prompt(const prompts::PromptSet& set, std::string_view claim,
                                   const dsl::ReasoningProgram& program);

/// Decode the model's JSON array reply; tolerates surrounding whitespace and
/// code fences; elements are trimmed and empties dropped. Throws NotAJsonArray
/// or NonStringElement.
std::vector<std::string> parse_injection_output(std::string_view raw);

/// The hint sequence the prompt's procedure implies for this program shape:
/// one Predict entity swap, a (fact swap, negation) pair per Verify step, and
/// a final Question answer swap when the program has any Question step.
std::vector<TransformHint> expected_hint_sequence(const dsl::ReasoningProgram& program);

/// One generation call (plus one re-prompt if the reply is not valid JSON).
/// Candidates carry the record's evidence; hints are assigned positionally
/// when the reply length matches the expected sequence, otherwise Unknown.
/// Throws EmptyInjection when the reply decodes to zero candidates.
std::vector<CorruptionCandidate> inject(const dataset::ClaimRecord& record,
                                        const dsl::ReasoningProgram& program,
                                        gw::Gateway& gateway, const prompts::PromptSet& set,
                                        const InjectorConfig& cfg);

} // namespace fecsynth::injector
