#include "fecsynth/pipeline.hpp"

#include "fecsynth/decomposer.hpp"
#include "fecsynth/errors.hpp"
#include "fecsynth/injector.hpp"
#include "fecsynth/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace fecsynth::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fixed(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

void apply_retry_keys(const json& j, PipelineConfig& cfg) {
    for (const auto& [key, value] : j.items()) {
        if (key == "max_attempts") cfg.retry_max_attempts = value.get<int>();
        else if (key == "base_backoff_ms") cfg.retry_base_backoff_ms = value.get<long>();
        else if (key == "backoff_multiplier") cfg.retry_backoff_multiplier = value.get<double>();
        else throw ValidationError("unknown config key: retry." + key);
    }
}

void apply_filter_keys(const json& j, filter::FilterConfig& f) {
    for (const auto& [key, value] : j.items()) {
        if (key == "min_tokens") f.min_tokens = value.get<int>();
        else if (key == "max_tokens") f.max_tokens = value.get<int>();
        else if (key == "min_ratio") f.min_ratio = value.get<double>();
        else if (key == "max_ratio") f.max_ratio = value.get<double>();
        else if (key == "min_hops") f.min_hops = value.get<int>();
        else if (key == "short_circuit") f.short_circuit = value.get<bool>();
        else throw ValidationError("unknown config key: filter." + key);
    }
}

void apply_bm25_keys(const json& j, retriever::Bm25Params& p) {
    for (const auto& [key, value] : j.items()) {
        if (key == "k1") p.k1 = value.get<double>();
        else if (key == "b") p.b = value.get<double>();
        else throw ValidationError("unknown config key: bm25." + key);
    }
}

} // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig cfg;
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "endpoint") cfg.endpoint = value.get<std::string>();
        else if (key == "model_id") cfg.model_id = value.get<std::string>();
        else if (key == "api_key_env") cfg.api_key_env = value.get<std::string>();
        else if (key == "prompt_dir") cfg.prompt_dir = value.get<std::string>();
        else if (key == "mock_fixtures") cfg.mock_fixtures = value.get<std::string>();
        else if (key == "cache_dir") cfg.cache_dir = value.get<std::string>();
        else if (key == "requests_per_minute") cfg.requests_per_minute = value.get<double>();
        else if (key == "workers") cfg.workers = value.get<int>();
        else if (key == "max_output_tokens") cfg.max_output_tokens = value.get<int>();
        else if (key == "max_reparse") cfg.max_reparse = value.get<int>();
        else if (key == "decompose_temperature") cfg.decompose_temperature = value.get<double>();
        else if (key == "inject_temperature") cfg.inject_temperature = value.get<double>();
        else if (key == "filter_temperature") cfg.filter_temperature = value.get<double>();
        else if (key == "judge_temperature") cfg.judge_temperature = value.get<double>();
        else if (key == "retry") apply_retry_keys(value, cfg);
        else if (key == "filter") apply_filter_keys(value, cfg.filter);
        else if (key == "bm25") apply_bm25_keys(value, cfg.bm25);
        else if (key == "top_k") cfg.top_k = value.get<int>();
        else if (key == "rouge_recall") cfg.rouge_recall = value.get<bool>();
        else throw ValidationError("unknown config key: " + key);
    }
    if (cfg.workers < 1) throw ValidationError("workers must be >= 1");
    if (cfg.top_k < 1) throw ValidationError("top_k must be >= 1");
    return cfg;
}

json PipelineConfig::to_json() const {
    json j;
    j["endpoint"] = endpoint;
    j["model_id"] = model_id;
    j["api_key_env"] = api_key_env;
    j["prompt_dir"] = prompt_dir;
    j["mock_fixtures"] = mock_fixtures;
    j["cache_dir"] = cache_dir;
    j["requests_per_minute"] = requests_per_minute;
    j["workers"] = workers;
    j["max_output_tokens"] = max_output_tokens;
    j["max_reparse"] = max_reparse;
    j["decompose_temperature"] = decompose_temperature;
    j["inject_temperature"] = inject_temperature;
    j["filter_temperature"] = filter_temperature;
    j["judge_temperature"] = judge_temperature;
    j["retry"] = {{"max_attempts", retry_max_attempts},
                  {"base_backoff_ms", retry_base_backoff_ms},
                  {"backoff_multiplier", retry_backoff_multiplier}};
    j["filter"] = {{"min_tokens", filter.min_tokens},   {"max_tokens", filter.max_tokens},
                   {"min_ratio", filter.min_ratio},     {"max_ratio", filter.max_ratio},
                   {"min_hops", filter.min_hops},       {"short_circuit", filter.short_circuit}};
    j["bm25"] = {{"k1", bm25.k1}, {"b", bm25.b}};
    j["top_k"] = top_k;
    j["rouge_recall"] = rouge_recall;
    return j;
}

json RunManifest::to_json() const {
    json j;
    j["format"] = "fecsynth-run-manifest";
    j["version"] = 1;
    j["config"] = config;
    j["input_digest"] = input_digest;
    j["counters"] = counters;
    j["per_criterion_fail"] = per_criterion_fail;
    json usage_j = json::object();
    for (const auto& [model, u] : usage) {
        usage_j[model] = {{"requests", u.requests},
                          {"cache_hits", u.cache_hits},
                          {"prompt_tokens", u.prompt_tokens},
                          {"completion_tokens", u.completion_tokens}};
    }
    j["usage"] = usage_j;
    j["wall_time_ms"] = wall_time_ms;
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "fecsynth-run-manifest" ||
            j.value("version", 0) != 1) {
            throw CorruptManifest("not a run manifest");
        }
        RunManifest m;
        m.config = j.at("config");
        m.input_digest = j.at("input_digest").get<std::string>();
        for (const auto& [key, value] : j.at("counters").items())
            m.counters[key] = value.get<long>();
        for (const auto& [key, value] : j.at("per_criterion_fail").items())
            m.per_criterion_fail[key] = value.get<long>();
        for (const auto& [model, u] : j.at("usage").items()) {
            gw::ModelUsage mu;
            mu.requests = u.at("requests").get<long>();
            mu.cache_hits = u.at("cache_hits").get<long>();
            mu.prompt_tokens = u.at("prompt_tokens").get<long>();
            mu.completion_tokens = u.at("completion_tokens").get<long>();
            m.usage[model] = mu;
        }
        m.wall_time_ms = j.at("wall_time_ms").get<long>();
        return m;
    } catch (const json::exception& e) {
        throw CorruptManifest(std::string("manifest field error: ") + e.what());
    }
}

namespace {

struct ClaimWork {
    bool gated = false;
    std::optional<decomposer::DecompositionOutcome> outcome;
    std::optional<std::string> inject_failure;
    std::vector<injector::CorruptionCandidate> candidates;
    std::vector<filter::FilterReport> reports;
};

void process_claim(const dataset::ClaimRecord& rec, ClaimWork& w, gw::Gateway& gateway,
                   const prompts::PromptSet& set, const decomposer::DecomposerConfig& dcfg,
                   const injector::InjectorConfig& icfg, const filter::FilterConfig& fcfg) {
    if (rec.label != dataset::Label::SUPPORTS) {
        w.gated = true;
        return;
    }
    try {
        w.outcome = decomposer::decompose(rec, gateway, set, dcfg);
    } catch (const GatewayError& e) {
        decomposer::DecompositionOutcome failed;
        failed.claim_id = rec.id;
        failed.failure = std::string("gateway: ") + e.what();
        w.outcome = std::move(failed);
        return;
    }
    if (!w.outcome->program) return;
    try {
        w.candidates = injector::inject(rec, *w.outcome->program, gateway, set, icfg);
    } catch (const InjectionParseError& e) {
        w.inject_failure = std::string("parse: ") + e.what();
        return;
    } catch (const EmptyInjection& e) {
        w.inject_failure = std::string("empty: ") + e.what();
        return;
    } catch (const GatewayError& e) {
        w.inject_failure = std::string("gateway: ") + e.what();
        return;
    }
    w.reports.reserve(w.candidates.size());
    for (const auto& cand : w.candidates)
        w.reports.push_back(filter::apply_filters(cand, rec, gateway, set, fcfg));
}

ordered_json pair_line(const dataset::ClaimRecord& rec, const std::string& program_text,
                       const injector::CorruptionCandidate& cand,
                       const filter::FilterReport& report) {
    ordered_json filt;
    filt["passed"] = report.passed;
    ordered_json verdicts;
    for (auto name : filter::kCriteria) {
        auto it = report.verdicts.find(std::string(name));
        verdicts[std::string(name)] =
            it == report.verdicts.end() ? "Skipped" : std::string(filter::verdict_name(it->second));
    }
    filt["verdicts"] = verdicts;
    filt["hop_estimate"] = report.hop_estimate ? json(*report.hop_estimate) : json(nullptr);
    filt["contradiction"] = report.contradiction_verdict
                                ? json(std::string(filter::entailment_name(*report.contradiction_verdict)))
                                : json(nullptr);
    filt["notes"] = report.notes;

    ordered_json prov;
    prov["source_claim_id"] = rec.id;
    prov["program"] = program_text;
    prov["ordinal"] = cand.ordinal;
    prov["transform_hint"] = std::string(injector::transform_hint_name(cand.transform_hint));
    prov["filter"] = std::move(filt);

    ordered_json line;
    line["pair_id"] = report.candidate_id;
    line["corrupted"] = cand.corrupted_text;
    line["target"] = rec.claim;
    line["evidence"] = rec.evidence;
    line["provenance"] = std::move(prov);
    return line;
}

} // namespace

RunManifest synthesize(const std::vector<dataset::ClaimRecord>& records,
                       const PipelineConfig& cfg, gw::Gateway& gateway,
                       const prompts::PromptSet& set, const std::string& input_digest,
                       const std::filesystem::path& run_dir) {
    auto started = std::chrono::steady_clock::now();
    std::filesystem::create_directories(run_dir);

    // written up front so an interrupted run leaves a resumable directory
    {
        RunManifest initial;
        initial.config = cfg.to_json();
        initial.input_digest = input_digest;
        text::write_file_atomic(run_dir / "manifest.json", initial.to_json().dump(2) + "\n");
    }

    decomposer::DecomposerConfig dcfg;
    dcfg.model_id = cfg.model_id;
    dcfg.temperature = cfg.decompose_temperature;
    dcfg.max_output_tokens = cfg.max_output_tokens;
    dcfg.max_reparse = cfg.max_reparse;

    injector::InjectorConfig icfg;
    icfg.model_id = cfg.model_id;
    icfg.temperature = cfg.inject_temperature;
    icfg.max_output_tokens = cfg.max_output_tokens;

    filter::FilterConfig fcfg = cfg.filter;
    fcfg.model_id = cfg.model_id;
    fcfg.temperature = cfg.filter_temperature;

    const size_t n = records.size();
    std::vector<ClaimWork> work(n);
    std::atomic<size_t> next{0};
    std::atomic<bool> fatal{false};
    std::exception_ptr first_error;
    std::mutex err_mu;

    auto body = [&]() {
        try {
            while (!fatal.load()) {
                size_t i = next.fetch_add(1);
                if (i >= n) break;
                process_claim(records[i], work[i], gateway, set, dcfg, icfg, fcfg);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!first_error) first_error = std::current_exception();
            fatal.store(true);
        }
    };

    size_t width = std::min<size_t>(std::max(cfg.workers, 1), std::max<size_t>(n, 1));
    std::vector<std::thread> pool;
    pool.reserve(width);
    for (size_t t = 0; t < width; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    std::map<std::string, long> counters;
    for (const char* key :
         {"records", "supports", "refutes", "decompose_attempted", "decompose_ok",
          "decompose_failed", "inject_attempted", "inject_ok", "inject_failed", "candidates",
          "filtered_in", "filtered_out", "emitted"}) {
        counters[key] = 0;
    }
    std::map<std::string, long> per_criterion_fail;
    for (auto name : filter::kCriteria) per_criterion_fail[std::string(name)] = 0;

    std::string pairs_out;
    counters["records"] = static_cast<long>(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& rec = records[i];
        const auto& w = work[i];
        if (w.gated) {
            ++counters["refutes"];
            continue;
        }
        ++counters["supports"];
        ++counters["decompose_attempted"];
        if (!w.outcome || !w.outcome->program) {
            ++counters["decompose_failed"];
            continue;
        }
        ++counters["decompose_ok"];
        ++counters["inject_attempted"];
        if (w.inject_failure) {
            ++counters["inject_failed"];
            continue;
        }
        ++counters["inject_ok"];
        counters["candidates"] += static_cast<long>(w.candidates.size());
        std::string program_text = dsl::serialize_program(*w.outcome->program);
        for (size_t c = 0; c < w.candidates.size(); ++c) {
            const auto& report = w.reports[c];
            for (const auto& [criterion, verdict] : report.verdicts) {
                if (verdict == filter::Verdict::Fail) ++per_criterion_fail[criterion];
            }
            if (!report.passed) {
                ++counters["filtered_out"];
                continue;
            }
            ++counters["filtered_in"];
            ++counters["emitted"];
            pairs_out += pair_line(rec, program_text, w.candidates[c], report).dump();
            pairs_out += '\n';
        }
    }

    RunManifest manifest;
    manifest.config = cfg.to_json();
    manifest.input_digest = input_digest;
    manifest.counters = std::move(counters);
    manifest.per_criterion_fail = std::move(per_criterion_fail);
    manifest.usage = gateway.usage_report();
    manifest.wall_time_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                  std::chrono::steady_clock::now() - started)
                                                  .count());

    text::write_file_atomic(run_dir / "pairs.jsonl", pairs_out);
    text::write_file_atomic(run_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

void validate_resume(const std::filesystem::path& run_dir, const std::string& input_digest,
                     const std::filesystem::path& cache_dir) {
    auto manifest_path = run_dir / "manifest.json";
    std::error_code ec;
    if (!std::filesystem::exists(manifest_path, ec))
        throw CorruptManifest("missing manifest: " + manifest_path.string());
    json j = json::parse(text::read_file(manifest_path), nullptr, false);
    if (j.is_discarded())
        throw CorruptManifest("manifest is not valid JSON: " + manifest_path.string());
    RunManifest m = RunManifest::from_json(j);
    if (m.input_digest != input_digest)
        throw CorruptManifest("input digest mismatch: manifest has " + m.input_digest +
                              ", input hashes to " + input_digest);
    if (!std::filesystem::is_directory(cache_dir, ec))
        throw CorruptManifest("cache directory missing: " + cache_dir.string());
}

std::string build_rl_pool(const std::vector<dataset::ClaimRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        if (rec.label != dataset::Label::REFUTES) continue;
        ordered_json line;
        line["id"] = rec.id;
        line["claim"] = rec.claim;
        line["evidence"] = rec.evidence;
        out += line.dump();
        out += '\n';
    }
    return out;
}

namespace {

std::vector<json> parse_jsonl(const std::filesystem::path& path) {
    std::istringstream in(text::read_file(path));
    std::vector<json> lines;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": not a JSON object");
        lines.push_back(std::move(j));
    }
    return lines;
}

std::string evidence_field(const json& j) {
    if (!j.contains("evidence")) return "";
    const json& e = j.at("evidence");
    if (e.is_string()) return e.get<std::string>();
    if (e.is_array()) {
        std::vector<std::string> parts;
        for (const auto& item : e) parts.push_back(item.get<std::string>());
        return dataset::join_evidence(parts);
    }
    throw ValidationError("evidence must be a string or an array of strings");
}

} // namespace

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::vector<PredictionRecord> out;
    for (const auto& j : parse_jsonl(path)) {
        PredictionRecord rec;
        rec.id = j.value("id", "");
        if (rec.id.empty()) throw ValidationError(path.string() + ": prediction record missing id");
        if (!j.contains("prediction") || !j.at("prediction").is_string())
            throw ValidationError(path.string() + ": record " + rec.id +
                                  " missing string field 'prediction'");
        rec.prediction = j.at("prediction").get<std::string>();
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<ReferenceRecord> read_references(const std::filesystem::path& path) {
    std::vector<ReferenceRecord> out;
    for (const auto& j : parse_jsonl(path)) {
        ReferenceRecord rec;
        rec.id = j.value("id", "");
        if (rec.id.empty()) throw ValidationError(path.string() + ": reference record missing id");
        if (!j.contains("source") || !j.at("source").is_string())
            throw ValidationError(path.string() + ": record " + rec.id +
                                  " missing string field 'source'");
        rec.source = j.at("source").get<std::string>();
        if (j.contains("references")) {
            for (const auto& r : j.at("references")) rec.references.push_back(r.get<std::string>());
        } else if (j.contains("reference")) {
            rec.references.push_back(j.at("reference").get<std::string>());
        }
        if (rec.references.empty())
            throw ValidationError(path.string() + ": record " + rec.id + " has no references");
        rec.evidence = evidence_field(j);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<ReferenceRecord> references_from_claims(
    const std::vector<dataset::ClaimRecord>& records) {
    std::vector<ReferenceRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (!rec.gold_correction || rec.gold_correction->empty())
            throw ValidationError("record " + rec.id +
                                  " has no gold_correction; cannot be used as a reference");
        ReferenceRecord ref;
        ref.id = rec.id;
        ref.source = rec.claim;
        ref.references = {*rec.gold_correction};
        ref.evidence = dataset::join_evidence(rec.evidence);
        out.push_back(std::move(ref));
    }
    return out;
}

EvalOutput evaluate_streams(const std::vector<PredictionRecord>& predictions,
                            const std::vector<ReferenceRecord>& references, bool rouge_recall,
                            int threads, gw::Gateway* judge_gateway,
                            const prompts::PromptSet* set, const judge::JudgeConfig* judge_cfg) {
    if (predictions.size() != references.size())
        throw IdMismatch("prediction/reference count mismatch: " +
                         std::to_string(predictions.size()) + " vs " +
                         std::to_string(references.size()));
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].id != references[i].id)
            throw IdMismatch("id mismatch at position " + std::to_string(i) + ": '" +
                             predictions[i].id + "' vs '" + references[i].id + "'");
    }
    if (judge_gateway && (!set || !judge_cfg))
        throw ValidationError("judge gateway supplied without prompts or judge config");

    const long n = static_cast<long>(predictions.size());
    EvalOutput out;
    out.records.resize(predictions.size());
    std::vector<std::exception_ptr> errors(predictions.size());
    const int nthreads = threads > 0 ? threads : 1;

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (long i = 0; i < n; ++i) {
        try {
            auto& rec = out.records[static_cast<size_t>(i)];
            const auto& pred = predictions[static_cast<size_t>(i)];
            const auto& ref = references[static_cast<size_t>(i)];
            rec.id = pred.id;
            rec.scores.sari = metrics::sari(ref.source, pred.prediction, ref.references);
            double best = 0.0;
            for (const auto& r : ref.references) {
                double v = rouge_recall ? metrics::rouge2_recall(pred.prediction, r)
                                        : metrics::rouge2_f1(pred.prediction, r);
                best = std::max(best, v);
            }
            rec.scores.rouge2 = best;
            if (judge_gateway) {
                rec.scores.judge = judge::judge_score(ref.source, ref.evidence, pred.prediction,
                                                      *judge_gateway, *set, *judge_cfg);
            }
        } catch (...) {
            errors[static_cast<size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    out.means.id = "MEAN";
    if (n > 0) {
        double keep = 0, add = 0, del = 0, fin = 0, rouge = 0, judge_sum = 0;
        for (const auto& rec : out.records) {
            keep += rec.scores.sari.keep;
            add += rec.scores.sari.add;
            del += rec.scores.sari.del;
            fin += rec.scores.sari.final;
            rouge += rec.scores.rouge2;
            if (rec.scores.judge) judge_sum += *rec.scores.judge;
        }
        const double dn = static_cast<double>(n);
        out.means.scores.sari = {keep / dn, add / dn, del / dn, fin / dn};
        out.means.scores.rouge2 = rouge / dn;
        if (judge_gateway) out.means.scores.judge = judge_sum / dn;
    }
    return out;
}

void write_eval_outputs(const EvalOutput& output, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const bool has_judge = output.means.scores.judge.has_value();

    std::string scores;
    for (const auto& rec : output.records) {
        ordered_json line;
        line["id"] = rec.id;
        line["sari"] = {{"keep", rec.scores.sari.keep},
                        {"add", rec.scores.sari.add},
                        {"delete", rec.scores.sari.del},
                        {"final", rec.scores.sari.final}};
        line["rouge2"] = rec.scores.rouge2;
        if (rec.scores.judge) line["judge"] = *rec.scores.judge;
        scores += line.dump();
        scores += '\n';
    }
    text::write_file_atomic(out_dir / "scores.jsonl", scores);

    ordered_json summary;
    summary["count"] = output.records.size();
    summary["keep"] = output.means.scores.sari.keep;
    summary["add"] = output.means.scores.sari.add;
    summary["delete"] = output.means.scores.sari.del;
    summary["final"] = output.means.scores.sari.final;
    summary["rouge2"] = output.means.scores.rouge2;
    if (has_judge) summary["judge"] = *output.means.scores.judge;
    text::write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");

    std::string tsv = "id\tKeep\tAdd\tDelete\tFinal\tRG-2";
    if (has_judge) tsv += "\tJudge";
    tsv += '\n';
    auto row = [&](const RecordScores& rec) {
        tsv += rec.id;
        tsv += '\t';
        tsv += fixed(rec.scores.sari.keep, 2);
        tsv += '\t';
        tsv += fixed(rec.scores.sari.add, 2);
        tsv += '\t';
        tsv += fixed(rec.scores.sari.del, 2);
        tsv += '\t';
        tsv += fixed(rec.scores.sari.final, 2);
        tsv += '\t';
        tsv += fixed(rec.scores.rouge2, 4);
        if (has_judge) {
            tsv += '\t';
            tsv += fixed(rec.scores.judge.value_or(0.0), 3);
        }
        tsv += '\n';
    };
    for (const auto& rec : output.records) row(rec);
    row(output.means);
    text::write_file_atomic(out_dir / "report.tsv", tsv);
}

ordered_json claim_record_to_json(const dataset::ClaimRecord& rec) {
    ordered_json j;
    j["id"] = rec.id;
    j["claim"] = rec.claim;
    j["label"] = std::string(dataset::label_name(rec.label));
    j["evidence"] = rec.evidence;
    if (rec.hops) j["hops"] = *rec.hops;
    if (rec.gold_correction) j["gold_correction"] = *rec.gold_correction;
    return j;
}

} // namespace fecsynth::pipeline
