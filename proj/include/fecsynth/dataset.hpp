#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fecsynth::dataset {

enum class Label { SUPPORTS, REFUTES };

enum class DatasetKind { HOVER, FEVEROUS, FECDATA, OTHER };

std::string_view label_name(Label l);
std::string_view dataset_kind_name(DatasetKind k);

/// Case-insensitive; throws UnknownDatasetKind.
DatasetKind dataset_kind_from_string(std::string_view s);

struct ClaimRecord {
    std::string id;
    std::string claim;
    Label label = Label::SUPPORTS;
    std::vector<std::string> evidence;
    std::optional<int> hops;
    DatasetKind dataset = DatasetKind::OTHER;
    std::optional<std::string> gold_correction;
};

struct IngestStats {
    size_t read = 0;
    size_t kept = 0;
    size_t skipped = 0;
};

struct IngestResult {
    std::vector<ClaimRecord> records;
    IngestStats stats;
    std::vector<std::string> warnings;
};

/// Read a dataset file (JSON array or JSONL, sniffed by the first non-space
/// byte) and map it to ClaimRecords. Malformed records are skipped with a
/// warning, never fatal. `evidence_corpus` optionally resolves supporting-fact
/// titles to sentences (JSONL of {"title", "sentences"}).
///
/// Field mappings per kind:
///  - HOVER:    {uid|id, claim, label SUPPORTED/NOT_SUPPORTED, num_hops,
///               supporting_facts [[title, sent_idx], ...]}
///  - FEVEROUS: {id, claim, label SUPPORTS/REFUTES/NOT ENOUGH INFO, evidence
///               [{content: [...]}, ...]}; records kept only when every
///               evidence content id is sentence-typed; NEI dropped
///  - FECDATA:  {mutated, original, evidence, label REFUTED/SUPPORTED};
///               mutated becomes the claim, original the gold correction;
///               missing ids are synthesized
///  - OTHER:    {id, claim, label, evidence, [gold_correction], [hops]}
IngestResult ingest(const std::filesystem::path& path, DatasetKind kind,
                    const std::optional<std::filesystem::path>& evidence_corpus = std::nullopt);

/// Concatenate evidence sentences for use in prompts.
std::string join_evidence(const std::vector<std::string>& evidence);

} // namespace fecsynth::dataset
