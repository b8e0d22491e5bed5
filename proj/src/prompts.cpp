#include "fecsynth/prompts.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <algorithm>

#ifndef FECSYNTH_PROMPT_DIR
#define FECSYNTH_PROMPT_DIR "prompts"
#endif

namespace fecsynth::prompts {

PromptSet PromptSet::load(const std::filesystem::path& dir) {
    PromptSet set;
    set.decompose = text::read_file(dir / "decompose.txt");
    set.inject = text::read_file(dir / "inject.txt");
    set.hop_estimator = text::read_file(dir / "hop_estimator.txt");
    set.quality_validator = text::read_file(dir / "quality_validator.txt");
    set.entailment = text::read_file(dir / "entailment.txt");
    set.judge = text::read_file(dir / "judge.txt");
    return set;
}

std::filesystem::path default_prompt_dir() {
    return FECSYNTH_PROMPT_DIR;
}

std::string substitute(std::string_view tmpl, std::string_view placeholder,
                       std::string_view value) {
    return substitute_all(tmpl, {{placeholder, value}});
}

std::string substitute_all(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& subs) {
    struct Slot {
        size_t pos;
        size_t len;
        std::string_view value;
    };
    std::vector<Slot> slots;
    slots.reserve(subs.size());
    for (const auto& [placeholder, value] : subs) {
        size_t first = tmpl.find(placeholder);
        if (first == std::string_view::npos) {
            throw ValidationError("template does not contain placeholder " +
                                  std::string(placeholder));
        }
        if (tmpl.find(placeholder, first + placeholder.size()) != std::string_view::npos) {
            throw ValidationError("template contains placeholder " + std::string(placeholder) +
                                  " more than once");
        }
        slots.push_back({first, placeholder.size(), value});
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return a.pos < b.pos;
    });

    std::string out;
    out.reserve(tmpl.size() + 256);
    size_t cursor = 0;
    for (const Slot& slot : slots) {
        out.append(tmpl.substr(cursor, slot.pos - cursor));
        out.append(slot.value);
        cursor = slot.pos + slot.len;
    }
    out.append(tmpl.substr(cursor));
    return out;
}

} // namespace fecsynth::prompts
