#pragma once

#include "fecsynth/dataset.hpp"
#include "fecsynth/filter_chain.hpp"
#include "fecsynth/gateway.hpp"
#include "fecsynth/judge.hpp"
#include "fecsynth/metrics.hpp"
#include "fecsynth/prompts.hpp"
#include "fecsynth/retriever.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fecsynth::pipeline {

struct PipelineConfig {
    std::string endpoint = "https://api.openai.com";
    std::string model_id = "gpt-4o-mini";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string prompt_dir;     // empty: compiled-in default
    std::string mock_fixtures;  // non-empty: hermetic mock backend
    std::string cache_dir;      // empty: <run_dir>/cache for synthesize runs
    double requests_per_minute = 0.0;
    int workers = 4;
    int max_output_tokens = 1024;
    int max_reparse = 2;
    double decompose_temperature = 0.0;
    double inject_temperature = 0.7;
    double filter_temperature = 0.0;
    double judge_temperature = 0.0;
    int retry_max_attempts = 5;
    long retry_base_backoff_ms = 1000;
    double retry_backoff_multiplier = 2.0;
    filter::FilterConfig filter; // model/temperature fields are filled from the above
    retriever::Bm25Params bm25;
    int top_k = 3;
    bool rouge_recall = false;

    /// Documented-key JSON round trip (unknown keys rejected).
    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct RunManifest {
    nlohmann::json config;
    std::string input_digest;
    std::map<std::string, long> counters;
    std::map<std::string, long> per_criterion_fail;
    gw::UsageReport usage;
    long wall_time_ms = 0;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Run decompose -> inject -> filter over the records with a bounded worker
/// pool and write <run_dir>/pairs.jsonl plus <run_dir>/manifest.json. Only
/// SUPPORTS records are decomposed; per-claim LLM failures are recorded in the
/// counters and skipped; pair output order is (input record order, candidate
/// ordinal). Returns the manifest.
RunManifest synthesize(const std::vector<dataset::ClaimRecord>& records,
                       const PipelineConfig& cfg, gw::Gateway& gateway,
                       const prompts::PromptSet& set, const std::string& input_digest,
                       const std::filesystem::path& run_dir);

/// Guard for resuming an interrupted run: the manifest must parse, reference
/// the same input digest, and the cache directory must exist. Throws
/// CorruptManifest. (A resumed run is a rerun of synthesize(); completed calls
/// are served from the response cache.)
void validate_resume(const std::filesystem::path& run_dir, const std::string& input_digest,
                     const std::filesystem::path& cache_dir);

/// REFUTES records as {"id", "claim", "evidence"} JSONL lines, input order.
std::string build_rl_pool(const std::vector<dataset::ClaimRecord>& records);

struct PredictionRecord {
    std::string id;
    std::string prediction;
};

struct ReferenceRecord {
    std::string id;
    std::string source;
    std::vector<std::string> references;
    std::string evidence;
};

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
std::vector<ReferenceRecord> read_references(const std::filesystem::path& path);

/// Map ingested claim records (gold_correction required) onto references.
std::vector<ReferenceRecord> references_from_claims(
    const std::vector<dataset::ClaimRecord>& records);

struct RecordScores {
    std::string id;
    metrics::EvalScores scores;
};

struct EvalOutput {
    std::vector<RecordScores> records;
    RecordScores means; // id = "MEAN"
};

/// Score predictions against references (streams must align positionally by
/// id; IdMismatch otherwise). Pure metrics run in parallel over records when
/// threads > 1; the judge column is produced only when a gateway is supplied.
EvalOutput evaluate_streams(const std::vector<PredictionRecord>& predictions,
                            const std::vector<ReferenceRecord>& references, bool rouge_recall,
                            int threads, gw::Gateway* judge_gateway,
                            const prompts::PromptSet* set, const judge::JudgeConfig* judge_cfg);

/// scores.jsonl, summary.json, and report.tsv under out_dir.
void write_eval_outputs(const EvalOutput& output, const std::filesystem::path& out_dir);

/// Serialize one claim record in the native input shape.
nlohmann::ordered_json claim_record_to_json(const dataset::ClaimRecord& rec);

} // namespace fecsynth::pipeline
