#include "fecsynth/dataset.hpp"
#include "fecsynth/decomposer.hpp"
#include "fecsynth/errors.hpp"
#include "fecsynth/filter_chain.hpp"
#include "fecsynth/gateway.hpp"
#include "fecsynth/injector.hpp"
#include "fecsynth/judge.hpp"
#include "fecsynth/pipeline.hpp"
#include "fecsynth/program_dsl.hpp"
#include "fecsynth/prompts.hpp"
#include "fecsynth/retriever.hpp"
#include "fecsynth/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace fecsynth;

namespace {

std::unique_ptr<gw::Gateway> make_gateway(const pipeline::PipelineConfig& cfg,
                                          std::optional<fs::path> cache_override = std::nullopt) {
    std::shared_ptr<gw::Backend> backend;
    if (!cfg.mock_fixtures.empty()) {
        backend = std::make_shared<gw::MockBackend>(cfg.mock_fixtures);
    } else {
        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw ValidationError("environment variable " + cfg.api_key_env +
                                  " is not set (or pass --mock-fixtures for hermetic runs)");
        backend = std::make_shared<gw::HttpBackend>(cfg.endpoint, key);
    }
    gw::GatewayConfig gcfg;
    gcfg.retry.max_attempts = cfg.retry_max_attempts;
    gcfg.retry.base_backoff = std::chrono::milliseconds(cfg.retry_base_backoff_ms);
    gcfg.retry.backoff_multiplier = cfg.retry_backoff_multiplier;
    gcfg.requests_per_minute = cfg.requests_per_minute;
    if (cache_override)
        gcfg.cache_dir = *cache_override;
    else if (!cfg.cache_dir.empty())
        gcfg.cache_dir = cfg.cache_dir;
    return std::make_unique<gw::Gateway>(std::move(backend), std::move(gcfg));
}

prompts::PromptSet load_prompts(const pipeline::PipelineConfig& cfg) {
    return prompts::PromptSet::load(cfg.prompt_dir.empty() ? prompts::default_prompt_dir()
                                                           : fs::path(cfg.prompt_dir));
}

dataset::IngestResult ingest_with_warnings(const fs::path& input, const std::string& kind,
                                           const std::optional<fs::path>& corpus) {
    auto result = dataset::ingest(input, dataset::dataset_kind_from_string(kind), corpus);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    return result;
}

void print_usage_report(const gw::Gateway& gateway) {
    for (const auto& [model, u] : gateway.usage_report()) {
        std::cerr << "usage " << model << ": requests=" << u.requests
                  << " cache_hits=" << u.cache_hits << " prompt_tokens=" << u.prompt_tokens
                  << " completion_tokens=" << u.completion_tokens << "\n";
    }
}

std::vector<json> read_jsonl_objects(const fs::path& path) {
    std::istringstream in(text::read_file(path));
    std::vector<json> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": not a JSON object");
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<std::string> string_array(const json& j, const char* key) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    for (const auto& item : j.at(key)) out.push_back(item.get<std::string>());
    return out;
}

int cmd_decompose(const pipeline::PipelineConfig& cfg, const fs::path& input,
                  const std::string& kind, const std::optional<fs::path>& corpus,
                  const fs::path& output) {
    auto ingested = ingest_with_warnings(input, kind, corpus);
    auto gateway = make_gateway(cfg);
    auto set = load_prompts(cfg);
    decomposer::DecomposerConfig dcfg{cfg.model_id, cfg.decompose_temperature,
                                      cfg.max_output_tokens, cfg.max_reparse};
    std::string out;
    size_t ok = 0, failed = 0, gated = 0;
    for (const auto& rec : ingested.records) {
        if (rec.label != dataset::Label::SUPPORTS) {
            ++gated;
            continue;
        }
        auto outcome = decomposer::decompose(rec, *gateway, set, dcfg);
        ordered_json line;
        line["id"] = rec.id;
        line["claim"] = rec.claim;
        line["label"] = std::string(dataset::label_name(rec.label));
        line["evidence"] = rec.evidence;
        line["attempts"] = outcome.attempts;
        if (outcome.program) {
            line["program"] = dsl::serialize_program(*outcome.program);
            ++ok;
        } else {
            line["failure"] = outcome.failure.value_or("unparseable");
            ++failed;
        }
        line["raw_outputs"] = outcome.raw_outputs;
        out += line.dump();
        out += '\n';
    }
    text::write_file_atomic(output, out);
    std::cerr << "decomposed ok=" << ok << " failed=" << failed << " non-supports skipped=" << gated
              << " -> " << output.string() << "\n";
    print_usage_report(*gateway);
    return 0;
}

int cmd_inject(const pipeline::PipelineConfig& cfg, const fs::path& input, const fs::path& output) {
    auto gateway = make_gateway(cfg);
    auto set = load_prompts(cfg);
    injector::InjectorConfig icfg{cfg.model_id, cfg.inject_temperature, cfg.max_output_tokens};
    std::string out;
    size_t candidates = 0, failures = 0, skipped = 0;
    for (const auto& j : read_jsonl_objects(input)) {
        if (!j.contains("program")) {
            ++skipped;
            continue;
        }
        dataset::ClaimRecord rec;
        rec.id = j.at("id").get<std::string>();
        rec.claim = j.at("claim").get<std::string>();
        rec.evidence = string_array(j, "evidence");
        auto parsed = dsl::parse_program(j.at("program").get<std::string>());
        if (!parsed.ok())
            throw ValidationError("record " + rec.id + ": stored program does not parse");
        try {
            for (const auto& cand : injector::inject(rec, *parsed.program, *gateway, set, icfg)) {
                ordered_json line;
                line["source_claim_id"] = cand.source_claim_id;
                line["source_claim"] = rec.claim;
                line["ordinal"] = cand.ordinal;
                line["corrupted"] = cand.corrupted_text;
                line["transform_hint"] =
                    std::string(injector::transform_hint_name(cand.transform_hint));
                line["evidence"] = cand.evidence;
                out += line.dump();
                out += '\n';
                ++candidates;
            }
        } catch (const InjectionParseError& e) {
            std::cerr << "warning: record " << rec.id << ": " << e.what() << "\n";
            ++failures;
        } catch (const EmptyInjection& e) {
            std::cerr << "warning: record " << rec.id << ": " << e.what() << "\n";
            ++failures;
        }
    }
    text::write_file_atomic(output, out);
    std::cerr << "candidates=" << candidates << " failed_records=" << failures
              << " skipped_records=" << skipped << " -> " << output.string() << "\n";
    print_usage_report(*gateway);
    return 0;
}

int cmd_filter(const pipeline::PipelineConfig& cfg, const fs::path& input, const fs::path& output) {
    auto gateway = make_gateway(cfg);
    auto set = load_prompts(cfg);
    filter::FilterConfig fcfg = cfg.filter;
    fcfg.model_id = cfg.model_id;
    fcfg.temperature = cfg.filter_temperature;
    std::string out;
    size_t passed = 0, total = 0;
    for (const auto& j : read_jsonl_objects(input)) {
        injector::CorruptionCandidate cand;
        cand.source_claim_id = j.at("source_claim_id").get<std::string>();
        cand.corrupted_text = j.at("corrupted").get<std::string>();
        cand.ordinal = j.at("ordinal").get<int>();
        cand.transform_hint =
            injector::transform_hint_from_string(j.value("transform_hint", "Unknown"));
        cand.evidence = string_array(j, "evidence");
        dataset::ClaimRecord rec;
        rec.id = cand.source_claim_id;
        rec.claim = j.at("source_claim").get<std::string>();
        rec.evidence = cand.evidence;
        auto report = filter::apply_filters(cand, rec, *gateway, set, fcfg);
        ordered_json line;
        line["candidate_id"] = report.candidate_id;
        line["passed"] = report.passed;
        ordered_json verdicts;
        for (auto name : filter::kCriteria)
            verdicts[std::string(name)] =
                std::string(filter::verdict_name(report.verdicts.at(std::string(name))));
        line["verdicts"] = verdicts;
        line["hop_estimate"] = report.hop_estimate ? json(*report.hop_estimate) : json(nullptr);
        line["contradiction"] =
            report.contradiction_verdict
                ? json(std::string(filter::entailment_name(*report.contradiction_verdict)))
                : json(nullptr);
        line["notes"] = report.notes;
        out += line.dump();
        out += '\n';
        ++total;
        if (report.passed) ++passed;
    }
    text::write_file_atomic(output, out);
    std::cerr << "passed=" << passed << "/" << total << " -> " << output.string() << "\n";
    print_usage_report(*gateway);
    return 0;
}

int cmd_synthesize(const pipeline::PipelineConfig& cfg, const fs::path& input,
                   const std::string& kind, const std::optional<fs::path>& corpus,
                   const fs::path& run_dir, bool resume) {
    auto ingested = ingest_with_warnings(input, kind, corpus);
    std::string digest = text::sha256_file_hex(input);
    fs::path cache_dir = cfg.cache_dir.empty() ? run_dir / "cache" : fs::path(cfg.cache_dir);
    if (resume) pipeline::validate_resume(run_dir, digest, cache_dir);
    auto gateway = make_gateway(cfg, cache_dir);
    auto set = load_prompts(cfg);
    auto manifest = pipeline::synthesize(ingested.records, cfg, *gateway, set, digest, run_dir);
    for (const auto& [key, value] : manifest.counters) std::cerr << key << "=" << value << "\n";
    print_usage_report(*gateway);
    std::cout << (run_dir / "pairs.jsonl").string() << "\n";
    return 0;
}

int cmd_rl_pool(const fs::path& input, const std::string& kind,
                const std::optional<fs::path>& corpus, const fs::path& output) {
    auto ingested = ingest_with_warnings(input, kind, corpus);
    text::write_file_atomic(output, pipeline::build_rl_pool(ingested.records));
    std::cerr << "-> " << output.string() << "\n";
    return 0;
}

int cmd_evaluate(const pipeline::PipelineConfig& cfg, const fs::path& predictions_path,
                 const fs::path& references_path, const std::string& references_kind,
                 const fs::path& out_dir, bool with_judge, bool rouge_recall, int threads) {
    auto predictions = pipeline::read_predictions(predictions_path);
    std::vector<pipeline::ReferenceRecord> references;
    if (references_kind.empty()) {
        references = pipeline::read_references(references_path);
    } else {
        auto ingested = ingest_with_warnings(references_path, references_kind, std::nullopt);
        references = pipeline::references_from_claims(ingested.records);
    }
    std::unique_ptr<gw::Gateway> gateway;
    std::optional<prompts::PromptSet> set;
    judge::JudgeConfig jcfg;
    jcfg.model_id = cfg.model_id;
    jcfg.temperature = cfg.judge_temperature;
    if (with_judge) {
        gateway = make_gateway(cfg);
        set = load_prompts(cfg);
    }
    auto output = pipeline::evaluate_streams(predictions, references, rouge_recall,
                                             threads > 0 ? threads : cfg.workers, gateway.get(),
                                             set ? &*set : nullptr, with_judge ? &jcfg : nullptr);
    pipeline::write_eval_outputs(output, out_dir);
    const auto& m = output.means.scores;
    std::cout << "count=" << output.records.size() << " keep=" << m.sari.keep
              << " add=" << m.sari.add << " delete=" << m.sari.del << " final=" << m.sari.final
              << " rouge2=" << m.rouge2;
    if (m.judge) std::cout << " judge=" << *m.judge;
    std::cout << "\n";
    if (gateway) print_usage_report(*gateway);
    return 0;
}

int cmd_judge(const pipeline::PipelineConfig& cfg, const std::string& mutated,
              const std::string& evidence, const std::string& corrected,
              const std::string& reference) {
    auto gateway = make_gateway(cfg);
    auto set = load_prompts(cfg);
    judge::JudgeConfig jcfg;
    jcfg.model_id = cfg.model_id;
    jcfg.temperature = cfg.judge_temperature;
    ordered_json out;
    if (reference.empty()) {
        out["judge"] = judge::judge_score(mutated, evidence, corrected, *gateway, set, jcfg);
    } else {
        auto r = judge::reward(reference, corrected, evidence, *gateway, set, jcfg);
        out["s_correct"] = r.s_correct;
        out["s_sim"] = r.s_sim;
        out["s_flu"] = r.s_flu;
        out["total"] = r.total;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_index(const fs::path& corpus_path, const fs::path& output) {
    std::vector<retriever::CorpusDoc> docs;
    size_t n = 0;
    for (const auto& j : read_jsonl_objects(corpus_path)) {
        retriever::CorpusDoc doc;
        doc.title = j.value("title", "");
        if (j.contains("text")) {
            doc.text = j.at("text").get<std::string>();
        } else if (j.contains("sentences")) {
            doc.text = dataset::join_evidence(string_array(j, "sentences"));
        } else {
            throw ValidationError(corpus_path.string() + ": document " + std::to_string(n) +
                                  " has neither 'text' nor 'sentences'");
        }
        doc.id = j.value("id", doc.title.empty() ? "doc-" + std::to_string(n) : doc.title);
        docs.push_back(std::move(doc));
        ++n;
    }
    auto index = retriever::CorpusIndex::build(docs);
    index.save(output);
    std::cerr << "indexed " << index.doc_count() << " docs, avgdl=" << index.average_doc_length()
              << " -> " << output.string() << "\n";
    return 0;
}

int cmd_retrieve_evidence(const pipeline::PipelineConfig& cfg, const fs::path& input,
                          const std::string& kind, const fs::path& index_path,
                          const fs::path& output, int top_k, int threads) {
    auto ingested = ingest_with_warnings(input, kind, std::nullopt);
    auto index = retriever::CorpusIndex::load(index_path);
    std::vector<std::string> queries;
    queries.reserve(ingested.records.size());
    for (const auto& rec : ingested.records) queries.push_back(rec.claim);
    auto hits = index.retrieve_batch(cfg.bm25, queries, static_cast<size_t>(top_k),
                                     threads > 0 ? threads : cfg.workers);
    std::string out;
    for (size_t i = 0; i < ingested.records.size(); ++i) {
        dataset::ClaimRecord rec = ingested.records[i];
        rec.evidence.clear();
        for (const auto& hit : hits[i]) rec.evidence.push_back(index.doc(hit.doc_id).text);
        out += pipeline::claim_record_to_json(rec).dump();
        out += '\n';
    }
    text::write_file_atomic(output, out);
    std::cerr << "retrieved evidence for " << ingested.records.size() << " records -> "
              << output.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic factual-error-correction data construction and evaluation"};
    app.require_subcommand(1);

    std::string config_path, model_id, endpoint, mock_fixtures, cache_dir, prompt_dir, api_key_env;
    double rpm = 0.0;
    int workers = 0;
    auto* opt_config = app.add_option("--config", config_path, "JSON config file");
    auto* opt_model = app.add_option("--model", model_id, "Model identifier");
    auto* opt_endpoint = app.add_option("--endpoint", endpoint, "Chat-completions base URL");
    auto* opt_mock =
        app.add_option("--mock-fixtures", mock_fixtures, "Fixture dir; hermetic backend");
    auto* opt_cache = app.add_option("--cache-dir", cache_dir, "Response cache directory");
    auto* opt_prompts = app.add_option("--prompt-dir", prompt_dir, "Prompt template directory");
    auto* opt_keyenv = app.add_option("--api-key-env", api_key_env, "API key env var name");
    auto* opt_rpm = app.add_option("--rpm", rpm, "Request rate limit per minute");
    auto* opt_workers = app.add_option("--workers", workers, "Worker pool width");

    std::string input, kind = "other", output, evidence_corpus;
    std::string predictions_path, references_path, references_kind, out_dir, run_dir;
    std::string mutated, evidence, corrected, reference, index_path;
    bool resume = false, with_judge = false, rouge_recall = false;
    int top_k = 0, threads = 0;

    auto add_ingest_opts = [&](CLI::App* sub, bool with_kind = true) {
        sub->add_option("--input", input, "Dataset file")->required();
        if (with_kind)
            sub->add_option("--kind", kind, "Dataset kind: hover|feverous|fecdata|other");
        sub->add_option("--evidence-corpus", evidence_corpus,
                        "JSONL of {title, sentences} used to resolve evidence titles");
    };

    auto* sc_decompose = app.add_subcommand("decompose", "Plan reasoning programs for claims");
    add_ingest_opts(sc_decompose);
    sc_decompose->add_option("--output", output, "Output JSONL")->required();

    auto* sc_inject = app.add_subcommand("inject", "Generate corruption candidates from programs");
    sc_inject->add_option("--input", input, "Decompose-stage JSONL")->required();
    sc_inject->add_option("--output", output, "Output JSONL")->required();

    auto* sc_filter = app.add_subcommand("filter", "Screen corruption candidates");
    sc_filter->add_option("--input", input, "Inject-stage JSONL")->required();
    sc_filter->add_option("--output", output, "Output JSONL")->required();

    auto* sc_synth = app.add_subcommand("synthesize", "Full decompose->inject->filter run");
    add_ingest_opts(sc_synth);
    sc_synth->add_option("--run-dir", run_dir, "Run directory (pairs, manifest, cache)")
        ->required();
    sc_synth->add_flag("--resume", resume, "Resume an interrupted run in --run-dir");

    auto* sc_pool = app.add_subcommand("rl-pool", "Emit the REFUTES pool");
    add_ingest_opts(sc_pool);
    sc_pool->add_option("--output", output, "Output JSONL")->required();

    auto* sc_eval = app.add_subcommand("evaluate", "Score predictions against references");
    sc_eval->add_option("--predictions", predictions_path, "Predictions JSONL")->required();
    sc_eval->add_option("--references", references_path, "References JSONL")->required();
    sc_eval->add_option("--references-kind", references_kind,
                        "Treat --references as this dataset kind (needs gold corrections)");
    sc_eval->add_option("--out-dir", out_dir, "Report directory")->required();
    sc_eval->add_flag("--judge", with_judge, "Add the LLM-judge column");
    sc_eval->add_flag("--rouge-recall", rouge_recall, "Report ROUGE-2 recall instead of F1");
    sc_eval->add_option("--threads", threads, "Scoring parallelism");

    auto* sc_judge = app.add_subcommand("judge", "Score one correction");
    sc_judge->add_option("--mutated", mutated, "Incorrect sentence")->required();
    sc_judge->add_option("--evidence", evidence, "Evidence text")->required();
    sc_judge->add_option("--corrected", corrected, "Corrected sentence")->required();
    sc_judge->add_option("--reference", reference,
                         "Reference claim; adds similarity/fluency reward terms");

    auto* sc_index = app.add_subcommand("index", "Build a retrieval index snapshot");
    sc_index->add_option("--corpus", predictions_path, "Corpus JSONL")->required();
    sc_index->add_option("--output", output, "Index snapshot path")->required();

    auto* sc_retrieve =
        app.add_subcommand("retrieve-evidence", "Replace record evidence with top-k paragraphs");
    sc_retrieve->add_option("--input", input, "Dataset file")->required();
    sc_retrieve->add_option("--kind", kind, "Dataset kind: hover|feverous|fecdata|other");
    sc_retrieve->add_option("--index", index_path, "Index snapshot path")->required();
    sc_retrieve->add_option("--output", output, "Output JSONL")->required();
    sc_retrieve->add_option("--top-k", top_k, "Paragraphs per record");
    sc_retrieve->add_option("--threads", threads, "Retrieval parallelism");

    CLI11_PARSE(app, argc, argv);

    try {
        pipeline::PipelineConfig cfg;
        if (opt_config->count() > 0)
            cfg = pipeline::PipelineConfig::from_json(json::parse(text::read_file(config_path)));
        if (opt_model->count() > 0) cfg.model_id = model_id;
        if (opt_endpoint->count() > 0) cfg.endpoint = endpoint;
        if (opt_mock->count() > 0) cfg.mock_fixtures = mock_fixtures;
        if (opt_cache->count() > 0) cfg.cache_dir = cache_dir;
        if (opt_prompts->count() > 0) cfg.prompt_dir = prompt_dir;
        if (opt_keyenv->count() > 0) cfg.api_key_env = api_key_env;
        if (opt_rpm->count() > 0) cfg.requests_per_minute = rpm;
        if (opt_workers->count() > 0) cfg.workers = workers;

        std::optional<fs::path> corpus;
        if (!evidence_corpus.empty()) corpus = evidence_corpus;

        if (sc_decompose->parsed()) return cmd_decompose(cfg, input, kind, corpus, output);
        if (sc_inject->parsed()) return cmd_inject(cfg, input, output);
        if (sc_filter->parsed()) return cmd_filter(cfg, input, output);
        if (sc_synth->parsed()) return cmd_synthesize(cfg, input, kind, corpus, run_dir, resume);
        if (sc_pool->parsed()) return cmd_rl_pool(input, kind, corpus, output);
        if (sc_eval->parsed())
            return cmd_evaluate(cfg, predictions_path, references_path, references_kind, out_dir,
                                with_judge, rouge_recall, threads);
        if (sc_judge->parsed()) return cmd_judge(cfg, mutated, evidence, corrected, reference);
        if (sc_index->parsed()) return cmd_index(predictions_path, output);
        if (sc_retrieve->parsed())
            return cmd_retrieve_evidence(cfg, input, kind, index_path, output,
                                         top_k > 0 ? top_k : cfg.top_k, threads);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
