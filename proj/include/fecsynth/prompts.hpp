#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fecsynth::prompts {

/// The verbatim prompt templates; each carries `[[...]]` placeholder slots.
struct PromptSet {
    std::string decompose;         // [[CLAIM]]
    std::string inject;            // [[claim]], [[prediction]]
    std::string hop_estimator;     // [[claim]]
    std::string quality_validator; // [[claim]]
    std::string entailment;        // [[claim]], [[evidence]]
    std::string judge;             // [[mutated]], [[evidence]], [[output_text]]

    /// Load all six template files from a directory. Throws UnreadableFile.
    static PromptSet load(const std::filesystem::path& dir);
};

/// Compiled-in default template directory (overridable via config/flag).
std::filesystem::path default_prompt_dir();

/// Replace the single designated occurrence of `placeholder` with `value`.
/// The substituted value is never rescanned, so a value containing the
/// placeholder text stays literal. Throws ValidationError when the template
/// does not contain the placeholder exactly once.
std::string substitute(std::string_view tmpl, std::string_view placeholder,
                       std::string_view value);

/// Substitute several placeholders at once. Slots are located on the pristine
/// template, so no value can introduce or mask a slot. Each placeholder must
/// occur exactly once.
std::string substitute_all(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& subs);

} // namespace fecsynth::prompts
