#include "fecsynth/decomposer.hpp"

#include "fecsynth/errors.hpp"

namespace fecsynth::decomposer {

std::string build_decomposition_prompt(const prompts::PromptSet& set, std::string_view claim) {
    if (claim.empty()) throw ValidationError("cannot build a decomposition prompt for an empty claim");
    return prompts::substitute(set.decompose, "[[CLAIM]]", claim);
}

DecompositionOutcome decompose(const dataset::ClaimRecord& record, gw::Gateway& gateway,
                               const prompts::PromptSet& set, const DecomposerConfig& cfg) {
    if (record.label != dataset::Label::SUPPORTS) {
        throw ValidationError("only SUPPORTS records are decomposed (record " + record.id + ")");
    }

    DecompositionOutcome outcome;
    outcome.claim_id = record.id;

    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = build_decomposition_prompt(set, record.claim);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;

    int total_attempts = 1 + std::max(0, cfg.max_reparse);
    std::vector<std::string> reasons;
    for (int attempt = 1; attempt <= total_attempts; ++attempt) {
        gw::CallOptions opts;
        opts.bypass_cache = attempt > 1;
        gw::CompletionResponse resp = gateway.complete(req, opts);
        outcome.attempts = attempt;
        outcome.raw_outputs.push_back(resp.text);

        dsl::ParseResult parsed = dsl::parse_program(resp.text);
        if (parsed.ok()) {
            outcome.program = std::move(parsed.program);
            return outcome;
        }
        std::string reason;
        for (const dsl::ParseDiagnostic& d : parsed.diagnostics) {
            if (!reason.empty()) reason += "; ";
            reason += std::string(dsl::diag_kind_name(d.kind)) + ": " + d.message;
        }
        reasons.push_back("attempt " + std::to_string(attempt) + ": " + reason);
    }

    std::string summary = "planner output unparseable after " + std::to_string(total_attempts) +
                          " attempts";
    for (const std::string& r : reasons) summary += " [" + r + "]";
    outcome.failure = std::move(summary);
    return outcome;
}

} // namespace fecsynth::decomposer
