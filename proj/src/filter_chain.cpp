#include "fecsynth/filter_chain.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

namespace fecsynth::filter {

namespace {

gw::CompletionRequest make_request(const FilterConfig& cfg, std::string prompt) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = std::move(prompt);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    return req;
}

} // namespace

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::Fail: return "Fail";
    case Verdict::Skipped: return "Skipped";
    }
    return "Skipped";
}

std::string_view entailment_name(Entailment e) {
    switch (e) {
    case Entailment::Supports: return "SUPPORTS";
    case Entailment::Refutes: return "REFUTES";
    case Entailment::NotEnoughInfo: return "NOT ENOUGH INFO";
    }
    return "NOT ENOUGH INFO";
}

std::optional<int> parse_hop_reply(std::string_view reply) {
    std::string t = text::trim(reply);
    std::string_view rest = t;
    constexpr std::string_view prefix = "Answer:";
    if (rest.rfind(prefix, 0) == 0) {
        rest.remove_prefix(prefix.size());
    }
    std::string digits = text::trim(rest);
    if (digits.empty() || digits.size() > 9) return std::nullopt;
    for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    return std::stoi(digits);
}

std::optional<Entailment> parse_entailment_reply(std::string_view reply) {
    std::string t = text::lowercase_ascii(text::trim(reply));
    if (t == "supports") return Entailment::Supports;
    if (t == "refutes") return Entailment::Refutes;
    if (t == "not enough info") return Entailment::NotEnoughInfo;
    return std::nullopt;
}

Verdict check_length(std::string_view candidate, std::string_view source,
                     const FilterConfig& cfg) {
    size_t cand_tokens = text::whitespace_tokens(candidate).size();
    size_t src_tokens = text::whitespace_tokens(source).size();
    if (cand_tokens < static_cast<size_t>(cfg.min_tokens) ||
        cand_tokens > static_cast<size_t>(cfg.max_tokens)) {
        return Verdict::Fail;
    }
    if (src_tokens == 0) return Verdict::Fail;
    double ratio = static_cast<double>(cand_tokens) / static_cast<double>(src_tokens);
    if (ratio < cfg.min_ratio || ratio > cfg.max_ratio) return Verdict::Fail;
    return Verdict::Pass;
}

Verdict check_identity(std::string_view candidate, std::string_view source) {
    return text::identity_normalize(candidate) == text::identity_normalize(source)
               ? Verdict::Fail
               : Verdict::Pass;
}

std::pair<Verdict, std::optional<int>> check_multihop(std::string_view candidate,
                                                      gw::Gateway& gateway,
                                                      const prompts::PromptSet& set,
                                                      const FilterConfig& cfg) {
    std::string prompt = prompts::substitute(set.hop_estimator, "[[claim]]", candidate);
    gw::CompletionResponse resp = gateway.complete(make_request(cfg, std::move(prompt)));
    std::optional<int> estimate = parse_hop_reply(resp.text);
    if (!estimate) return {Verdict::Fail, std::nullopt};
    return {*estimate >= cfg.min_hops ? Verdict::Pass : Verdict::Fail, estimate};
}

Verdict check_quality(std::string_view candidate, gw::Gateway& gateway,
                      const prompts::PromptSet& set, const FilterConfig& cfg) {
    std::string prompt = prompts::substitute(set.quality_validator, "[[claim]]", candidate);
    gw::CompletionResponse resp = gateway.complete(make_request(cfg, std::move(prompt)));
    return text::lowercase_ascii(text::trim(resp.text)) == "yes" ? Verdict::Pass : Verdict::Fail;
}

std::pair<Verdict, std::optional<Entailment>> check_contradiction(
    std::string_view candidate, const std::vector<std::string>& evidence, gw::Gateway& gateway,
    const prompts::PromptSet& set, const FilterConfig& cfg) {
    if (evidence.empty()) {
        throw ValidationError("contradiction check requires non-empty evidence");
    }
    std::string prompt = prompts::substitute_all(
        set.entailment,
        {{"[[claim]]", candidate}, {"[[evidence]]", dataset::join_evidence(evidence)}});
    gw::CompletionResponse resp = gateway.complete(make_request(cfg, std::move(prompt)));
    std::optional<Entailment> verdict = parse_entailment_reply(resp.text);
    if (!verdict) return {Verdict::Fail, std::nullopt};
    return {*verdict == Entailment::Refutes ? Verdict::Pass : Verdict::Fail, verdict};
}

FilterReport apply_filters(const injector::CorruptionCandidate& candidate,
                           const dataset::ClaimRecord& source, gw::Gateway& gateway,
                           const prompts::PromptSet& set, const FilterConfig& cfg) {
    FilterReport report;
    report.candidate_id = candidate.source_claim_id + "#" + std::to_string(candidate.ordinal);

    bool failed = false;
    auto run = [&](std::string_view name, auto&& evaluate) {
        if (failed && cfg.short_circuit) {
            report.verdicts[std::string(name)] = Verdict::Skipped;
            return;
        }
        Verdict v;
        try {
            v = evaluate();
        } catch (const GatewayError& e) {
            report.notes.push_back(std::string(name) + ": " + e.what());
            v = Verdict::Fail;
        }
        report.verdicts[std::string(name)] = v;
        if (v == Verdict::Fail) failed = true;
    };

    run("length", [&] { return check_length(candidate.corrupted_text, source.claim, cfg); });
    run("identity", [&] { return check_identity(candidate.corrupted_text, source.claim); });
    run("multihop", [&] {
        auto [verdict, estimate] = check_multihop(candidate.corrupted_text, gateway, set, cfg);
        report.hop_estimate = estimate;
        return verdict;
    });
    run("quality", [&] { return check_quality(candidate.corrupted_text, gateway, set, cfg); });
    run("contradiction", [&] {
        if (candidate.evidence.empty()) {
            report.notes.push_back("contradiction: candidate has no evidence to check against");
            return Verdict::Fail;
        }
        auto [verdict, entailment] =
            check_contradiction(candidate.corrupted_text, candidate.evidence, gateway, set, cfg);
        report.contradiction_verdict = entailment;
        return verdict;
    });

    report.passed = true;
    for (const auto& [name, verdict] : report.verdicts) {
        if (verdict != Verdict::Pass) report.passed = false;
    }
    return report;
}

} // namespace fecsynth::filter
