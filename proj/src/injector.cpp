#include "fecsynth/injector.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <json.hpp>

namespace fecsynth::injector {

namespace {

/// Render the serialized program the way the template's exemplars encode it:
/// a ```python fence with literal \n for newlines and \" for quotes.
std::string encode_program_field(const dsl::ReasoningProgram& program) {
    std::string serialized = dsl::serialize_program(program);
    while (!serialized.empty() && serialized.back() == '\n') serialized.pop_back();
    std::string escaped;
    escaped.reserve(serialized.size() + 16);
    for (char c : serialized) {
        if (c == '\n') {
            escaped += "\\n";
        } else if (c == '"') {
            escaped += "\\\"";
        } else {
            escaped.push_back(c);
        }
    }
    return "```python\\n" + escaped + "\\n```";
}

std::string strip_fences(std::string_view raw) {
    std::string s = text::trim(raw);
    if (s.rfind("```", 0) == 0) {
        size_t nl = s.find('\n');
        s = nl == std::string::npos ? std::string() : s.substr(nl + 1);
        size_t tail = s.rfind("```");
        if (tail != std::string::npos && text::trim(s.substr(tail + 3)).empty()) {
            s = s.substr(0, tail);
        }
        s = text::trim(s);
    }
    return s;
}

} // namespace

std::string_view transform_hint_name(TransformHint h) {
    switch (h) {
    case TransformHint::PredictEntitySwap: return "PredictEntitySwap";
    case TransformHint::VerifyFactSwap: return "VerifyFactSwap";
    case TransformHint::VerifyNegation: return "VerifyNegation";
    case TransformHint::QuestionAnswerSwap: return "QuestionAnswerSwap";
    case TransformHint::Unknown: return "Unknown";
    }
    return "Unknown";
}

TransformHint transform_hint_from_string(std::string_view s) {
    if (s == "PredictEntitySwap") return TransformHint::PredictEntitySwap;
    if (s == "VerifyFactSwap") return TransformHint::VerifyFactSwap;
    if (s == "VerifyNegation") return TransformHint::VerifyNegation;
    if (s == "QuestionAnswerSwap") return TransformHint::QuestionAnswerSwap;
    return TransformHint::Unknown;
}

std::string build_injection_prompt(const prompts::PromptSet& set, std::string_view claim,
                                   const dsl::ReasoningProgram& program) {
    if (claim.empty()) throw ValidationError("cannot build an injection prompt for an empty claim");
    std::string prediction = encode_program_field(program);
    return prompts::substitute_all(set.inject,
                                   {{"[[claim]]", claim}, {"[[prediction]]", prediction}});
}

std::vector<std::string> parse_injection_output(std::string_view raw) {
    std::string body = strip_fences(raw);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw NotAJsonArray(std::string("injection output is not JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw NotAJsonArray("injection output is valid JSON but not an array");
    }
    std::vector<std::string> out;
    for (const nlohmann::json& item : doc) {
        if (!item.is_string()) {
            throw NonStringElement("injection output array holds a non-string element: " +
                                   item.dump());
        }
        std::string trimmed = text::trim(item.get<std::string>());
        if (!trimmed.empty()) out.push_back(std::move(trimmed));
    }
    return out;
}

std::vector<TransformHint> expected_hint_sequence(const dsl::ReasoningProgram& program) {
    std::vector<TransformHint> seq;
    seq.push_back(TransformHint::PredictEntitySwap);
    bool has_question = false;
    for (const dsl::Step& step : program.steps) {
        if (std::holds_alternative<dsl::VerifyStep>(step.variant)) {
            seq.push_back(TransformHint::VerifyFactSwap);
            seq.push_back(TransformHint::VerifyNegation);
        } else if (std::holds_alternative<dsl::QuestionStep>(step.variant)) {
            has_question = true;
        }
    }
    if (has_question) seq.push_back(TransformHint::QuestionAnswerSwap);
    return seq;
}

std::vector<CorruptionCandidate> inject(const dataset::ClaimRecord& record,
                                        const dsl::ReasoningProgram& program,
                                        gw::Gateway& gateway, const prompts::PromptSet& set,
                                        const InjectorConfig& cfg) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = build_injection_prompt(set, record.claim, program);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;

    std::vector<std::string> texts;
    try {
        texts = parse_injection_output(gateway.complete(req).text);
    } catch (const InjectionParseError&) {
        gw::CallOptions opts;
        opts.bypass_cache = true;
        texts = parse_injection_output(gateway.complete(req, opts).text);
    }
    if (texts.empty()) {
        throw EmptyInjection("injection produced zero candidates for record " + record.id);
    }

    std::vector<TransformHint> expected = expected_hint_sequence(program);
    bool tagged = expected.size() == texts.size();

    std::vector<CorruptionCandidate> out;
    out.reserve(texts.size());
    for (size_t i = 0; i < texts.size(); ++i) {
        CorruptionCandidate cand;
        cand.source_claim_id = record.id;
        cand.corrupted_text = std::move(texts[i]);
        cand.ordinal = static_cast<int>(i);
        cand.transform_hint = tagged ? expected[i] : TransformHint::Unknown;
        cand.evidence = record.evidence;
        out.push_back(std::move(cand));
    }
    return out;
}

} // namespace fecsynth::injector
