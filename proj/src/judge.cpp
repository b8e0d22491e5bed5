#include "fecsynth/judge.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <cstdlib>

namespace fecsynth::judge {

std::optional<double> parse_judge_reply(std::string_view reply) {
    std::string t = text::trim(reply);
    if (t.empty()) return std::nullopt;
    size_t i = 0;
    bool saw_digit = false;
    while (i < t.size() && t[i] >= '0' && t[i] <= '9') {
        ++i;
        saw_digit = true;
    }
    if (i < t.size() && t[i] == '.') {
        ++i;
        while (i < t.size() && t[i] >= '0' && t[i] <= '9') {
            ++i;
            saw_digit = true;
        }
    }
    if (!saw_digit || i != t.size()) return std::nullopt;
    double value = std::strtod(t.c_str(), nullptr);
    if (value < 0.0 || value > 1.0) return std::nullopt;
    return value;
}

double judge_score(std::string_view mutated, std::string_view evidence,
                   std::string_view corrected, gw::Gateway& gateway,
                   const prompts::PromptSet& set, const JudgeConfig& cfg) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = prompts::substitute_all(set.judge, {{"[[mutated]]", mutated},
                                                        {"[[evidence]]", evidence},
                                                        {"[[output_text]]", corrected}});
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;

    gw::CompletionResponse resp = gateway.complete(req);
    std::optional<double> score = parse_judge_reply(resp.text);
    if (!score) {
        gw::CallOptions opts;
        opts.bypass_cache = true;
        resp = gateway.complete(req, opts);
        score = parse_judge_reply(resp.text);
    }
    if (!score) {
        throw JudgeUnparseable("judge reply is not a single decimal in [0, 1]: \"" +
                               std::string(std::string_view(resp.text).substr(0, 80)) + "\"");
    }
    return *score;
}

metrics::RewardBreakdown reward(std::string_view ref_claim, std::string_view corrected,
                                std::string_view evidence, gw::Gateway& gateway,
                                const prompts::PromptSet& set, const JudgeConfig& cfg) {
    metrics::RewardBreakdown out;
    out.s_correct = judge_score(ref_claim, evidence, corrected, gateway, set, cfg);
    out.s_sim = metrics::lcs_similarity(ref_claim, corrected);

    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = prompts::substitute(set.quality_validator, "[[claim]]", corrected);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    gw::CompletionResponse resp = gateway.complete(req);
    out.s_flu = text::lowercase_ascii(text::trim(resp.text)) == "yes" ? 1.0 : 0.0;

    out.total = out.s_correct + out.s_sim + out.s_flu;
    return out;
}

} // namespace fecsynth::judge
