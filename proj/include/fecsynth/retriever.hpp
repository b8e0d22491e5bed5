#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fecsynth::retriever {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

struct CorpusDoc {
    std::string id;
    std::string title;
    std::string text;
};

/// Inverted index over a paragraph corpus; immutable after build, safe for
/// concurrent reads.
class CorpusIndex {
public:
    /// Throws DuplicateId.
    static CorpusIndex build(const std::vector<CorpusDoc>& docs);

    size_t doc_count() const { return doc_ids_.size(); }
    double average_doc_length() const { return avgdl_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const CorpusDoc& doc(const std::string& doc_id) const; // throws UnknownDoc
    long doc_length(const std::string& doc_id) const;      // throws UnknownDoc
    long term_frequency(std::string_view term, const std::string& doc_id) const;
    long doc_frequency(std::string_view term) const;

    /// BM25 with the non-negative log form: idf = ln(1 + (N-df+0.5)/(df+0.5));
    /// per term: idf * tf * (k1+1) / (tf + k1 * (1 - b + b*len/avgdl)).
    /// Duplicate query tokens contribute once per occurrence.
    double score(const Bm25Params& params, const std::vector<std::string>& query_tokens,
                 const std::string& doc_id) const; // throws UnknownDoc

    /// Top-k docs with positive score, ordered by descending score and then
    /// ascending doc id.
    std::vector<ScoredDoc> retrieve(const Bm25Params& params, std::string_view query,
                                    size_t k) const;

    /// Batch retrieval, parallel over queries when threads > 1 (OpenMP);
    /// results are positionally aligned with the input.
    std::vector<std::vector<ScoredDoc>> retrieve_batch(const Bm25Params& params,
                                                       const std::vector<std::string>& queries,
                                                       size_t k, int threads) const;

    void save(const std::filesystem::path& path) const;
    static CorpusIndex load(const std::filesystem::path& path); // throws UnreadableFile

private:
    std::vector<std::string> doc_ids_;
    std::vector<CorpusDoc> docs_;
    std::vector<long> doc_lengths_;
    std::unordered_map<std::string, size_t> id_to_idx_;
    std::unordered_map<std::string, std::vector<std::pair<size_t, long>>> postings_;
    double avgdl_ = 0.0;

    double score_idx(const Bm25Params& params, const std::vector<std::string>& query_tokens,
                     size_t idx) const;
};

/// Serial exhaustive scorer over the raw documents; the reference the index
/// must agree with exactly.
std::vector<ScoredDoc> brute_force_retrieve(const std::vector<CorpusDoc>& docs,
                                            const Bm25Params& params, std::string_view query,
                                            size_t k);

double brute_force_score(const std::vector<CorpusDoc>& docs, const Bm25Params& params,
                         const std::vector<std::string>& query_tokens, size_t doc_idx);

} // namespace fecsynth::retriever
