#pragma once

#include "fecsynth/dataset.hpp"
#include "fecsynth/gateway.hpp"
#include "fecsynth/injector.hpp"
#include "fecsynth/prompts.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fecsynth::filter {

enum class Verdict { Pass, Fail, Skipped };

enum class Entailment { Supports, Refutes, NotEnoughInfo };

std::string_view verdict_name(Verdict v);
std::string_view entailment_name(Entailment e);

struct FilterConfig {
    int min_tokens = 4;
    int max_tokens = 128;
    double min_ratio = 0.5;
    double max_ratio = 2.0;
    int min_hops = 2;
    bool short_circuit = true;

    std::string model_id = "gpt-4o-mini";
    double temperature = 0.0;
    int max_output_tokens = 16;
};

/// Canonical criterion order: cheap local checks first, LLM checks last.
inline constexpr std::array<std::string_view, 5> kCriteria = {
    "length", "identity", "multihop", "quality", "contradiction"};

struct FilterReport {
    std::string candidate_id;
    std::map<std::string, Verdict> verdicts;
    bool passed = false;
    std::optional<int> hop_estimate;
    std::optional<Entailment> contradiction_verdict;
    std::vector<std::string> notes;
};

/// Pass iff candidate token count lies in [min_tokens, max_tokens] and the
/// candidate/source token ratio lies in [min_ratio, max_ratio] (whitespace
/// tokens).
Verdict check_length(std::string_view candidate, std::string_view source,
                     const FilterConfig& cfg);

/// Fail iff the two texts are equal after NFC, lowercasing, whitespace
/// collapsing, and trailing-punctuation stripping.
Verdict check_identity(std::string_view candidate, std::string_view source);

/// Hop-estimator prompt; Pass iff the parsed estimate is >= min_hops.
/// Unparseable replies Fail with no estimate.
std::pair<Verdict, std::optional<int>> check_multihop(std::string_view candidate,
                                                      gw::Gateway& gateway,
                                                      const prompts::PromptSet& set,
                                                      const FilterConfig& cfg);

/// Quality-validator prompt; Pass iff the trimmed, case-folded reply is
/// exactly "yes".
Verdict check_quality(std::string_view candidate, gw::Gateway& gateway,
                      const prompts::PromptSet& set, const FilterConfig& cfg);

/// Three-way entailment of candidate against the evidence; Pass iff the
/// verdict is REFUTES. Throws ValidationError on empty evidence.
std::pair<Verdict, std::optional<Entailment>> check_contradiction(
    std::string_view candidate, const std::vector<std::string>& evidence, gw::Gateway& gateway,
    const prompts::PromptSet& set, const FilterConfig& cfg);

/// Evaluate criteria in canonical order. With short_circuit, evaluation stops
/// at the first Fail and later criteria are Skipped. Gateway errors are
/// recorded as a Fail on that criterion with a note.
FilterReport apply_filters(const injector::CorruptionCandidate& candidate,
                           const dataset::ClaimRecord& source, gw::Gateway& gateway,
                           const prompts::PromptSet& set, const FilterConfig& cfg);

/// Reply parsers, exposed for tests.
std::optional<int> parse_hop_reply(std::string_view reply);
std::optional<Entailment> parse_entailment_reply(std::string_view reply);

} // namespace fecsynth::filter
