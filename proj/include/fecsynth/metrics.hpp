#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fecsynth::metrics {

struct SariScores {
    double keep = 0.0;
    double add = 0.0;
    double del = 0.0;
    double final = 0.0; // always (keep + add + del) / 3
};

struct RewardBreakdown {
    double s_correct = 0.0;
    double s_sim = 0.0;
    double s_flu = 0.0;
    double total = 0.0; // always s_correct + s_sim + s_flu
};

/// All scores for one prediction; judge and reward are present only when an
/// evaluator backend produced them.
struct EvalScores {
    SariScores sari;
    double rouge2 = 0.0;
    std::optional<double> judge;
    std::optional<RewardBreakdown> reward;
};

/// Edit-aware score over n-gram orders 1-4: keep and add are F1, delete is
/// precision only, multi-reference counts are fractional (integer counters
/// scaled by the reference count), and a precision/recall term whose target
/// set is empty evaluates to 1. Each component lies in [0, 100]. Throws
/// EmptyReferenceList.
SariScores sari(std::string_view source, std::string_view prediction,
                const std::vector<std::string>& references);

/// F1 over the bigram multiset overlap; either side shorter than two tokens
/// scores 0.
double rouge2_f1(std::string_view prediction, std::string_view reference);

/// Recall variant of the same overlap.
double rouge2_recall(std::string_view prediction, std::string_view reference);

/// Normalized token-level similarity: 2*LCS / (|a|+|b|) over metric tokens;
/// 1.0 iff the token sequences are equal (including both empty).
double lcs_similarity(std::string_view a, std::string_view b);

} // namespace fecsynth::metrics
