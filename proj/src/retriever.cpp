#include "fecsynth/retriever.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>

namespace fecsynth::retriever {

namespace {

double idf(size_t doc_count, long df) {
    double n = static_cast<double>(doc_count);
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double term_score(double idf_value, long tf, double k1, double b, double len, double avgdl) {
    if (tf <= 0) return 0.0;
    double tfd = static_cast<double>(tf);
    double norm = tfd + k1 * (1.0 - b + b * len / avgdl);
    return idf_value * tfd * (k1 + 1.0) / norm;
}

void sort_and_truncate(std::vector<ScoredDoc>& scored, size_t k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > k) scored.resize(k);
}

} // namespace

CorpusIndex CorpusIndex::build(const std::vector<CorpusDoc>& docs) {
    CorpusIndex index;
    index.docs_ = docs;
    index.doc_ids_.reserve(docs.size());
    index.doc_lengths_.reserve(docs.size());

    long total_len = 0;
    for (size_t i = 0; i < docs.size(); ++i) {
        const CorpusDoc& doc = docs[i];
        if (index.id_to_idx_.count(doc.id)) {
            throw DuplicateId("duplicate document id '" + doc.id + "'");
        }
        index.id_to_idx_[doc.id] = i;
        index.doc_ids_.push_back(doc.id);

        std::vector<std::string> tokens = text::bm25_tokens(doc.text);
        index.doc_lengths_.push_back(static_cast<long>(tokens.size()));
        total_len += static_cast<long>(tokens.size());

        std::unordered_map<std::string, long> tf;
        for (std::string& tok : tokens) ++tf[std::move(tok)];
        for (auto& [term, count] : tf) {
            index.postings_[term].emplace_back(i, count);
        }
    }
    index.avgdl_ = docs.empty() ? 0.0
                                : static_cast<double>(total_len) /
                                      static_cast<double>(docs.size());
    return index;
}

const CorpusDoc& CorpusIndex::doc(const std::string& doc_id) const {
    auto it = id_to_idx_.find(doc_id);
    if (it == id_to_idx_.end()) throw UnknownDoc("unknown document id '" + doc_id + "'");
    return docs_[it->second];
}

long CorpusIndex::doc_length(const std::string& doc_id) const {
    auto it = id_to_idx_.find(doc_id);
    if (it == id_to_idx_.end()) throw UnknownDoc("unknown document id '" + doc_id + "'");
    return doc_lengths_[it->second];
}

long CorpusIndex::term_frequency(std::string_view term, const std::string& doc_id) const {
    auto it = id_to_idx_.find(doc_id);
    if (it == id_to_idx_.end()) throw UnknownDoc("unknown document id '" + doc_id + "'");
    auto post = postings_.find(std::string(term));
    if (post == postings_.end()) return 0;
    for (const auto& [idx, tf] : post->second) {
        if (idx == it->second) return tf;
    }
    return 0;
}

long CorpusIndex::doc_frequency(std::string_view term) const {
    auto post = postings_.find(std::string(term));
    return post == postings_.end() ? 0 : static_cast<long>(post->second.size());
}

double CorpusIndex::score_idx(const Bm25Params& params,
                              const std::vector<std::string>& query_tokens, size_t idx) const {
    double len = static_cast<double>(doc_lengths_[idx]);
    double sum = 0.0;
    for (const std::string& term : query_tokens) {
        auto post = postings_.find(term);
        if (post == postings_.end()) continue;
        long tf = 0;
        for (const auto& [doc_idx, count] : post->second) {
            if (doc_idx == idx) {
                tf = count;
                break;
            }
        }
        if (tf == 0) continue;
        double idf_value = idf(doc_count(), static_cast<long>(post->second.size()));
        sum += term_score(idf_value, tf, params.k1, params.b, len, avgdl_);
    }
    return sum;
}

double CorpusIndex::score(const Bm25Params& params, const std::vector<std::string>& query_tokens,
                          const std::string& doc_id) const {
    auto it = id_to_idx_.find(doc_id);
    if (it == id_to_idx_.end()) throw UnknownDoc("unknown document id '" + doc_id + "'");
    return score_idx(params, query_tokens, it->second);
}

std::vector<ScoredDoc> CorpusIndex::retrieve(const Bm25Params& params, std::string_view query,
                                             size_t k) const {
    std::vector<std::string> query_tokens = text::bm25_tokens(query);
    std::vector<double> acc(doc_count(), 0.0);
    for (const std::string& term : query_tokens) {
        auto post = postings_.find(term);
        if (post == postings_.end()) continue;
        double idf_value = idf(doc_count(), static_cast<long>(post->second.size()));
        for (const auto& [doc_idx, tf] : post->second) {
            acc[doc_idx] += term_score(idf_value, tf, params.k1, params.b,
                                       static_cast<double>(doc_lengths_[doc_idx]), avgdl_);
        }
    }
    std::vector<ScoredDoc> scored;
    for (size_t i = 0; i < acc.size(); ++i) {
        if (acc[i] > 0.0) scored.push_back({doc_ids_[i], acc[i]});
    }
    sort_and_truncate(scored, k);
    return scored;
}

std::vector<std::vector<ScoredDoc>> CorpusIndex::retrieve_batch(
    const Bm25Params& params, const std::vector<std::string>& queries, size_t k,
    int threads) const {
    std::vector<std::vector<ScoredDoc>> results(queries.size());
    if (threads <= 1) {
        for (size_t i = 0; i < queries.size(); ++i) {
            results[i] = retrieve(params, queries[i], k);
        }
        return results;
    }
#ifdef _OPENMP
    long n = static_cast<long>(queries.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long i = 0; i < n; ++i) {
        results[static_cast<size_t>(i)] = retrieve(params, queries[static_cast<size_t>(i)], k);
    }
#else
    for (size_t i = 0; i < queries.size(); ++i) {
        results[i] = retrieve(params, queries[i], k);
    }
#endif
    return results;
}

void CorpusIndex::save(const std::filesystem::path& path) const {
    nlohmann::json doc;
    doc["format"] = "fecsynth-bm25-index";
    doc["version"] = 1;
    nlohmann::json docs = nlohmann::json::array();
    for (size_t i = 0; i < docs_.size(); ++i) {
        docs.push_back({{"id", docs_[i].id},
                        {"title", docs_[i].title},
                        {"text", docs_[i].text},
                        {"len", doc_lengths_[i]}});
    }
    doc["docs"] = std::move(docs);
    nlohmann::json postings = nlohmann::json::object();
    for (const auto& [term, posting] : postings_) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& [idx, tf] : posting) list.push_back({idx, tf});
        postings[term] = std::move(list);
    }
    doc["postings"] = std::move(postings);
    text::write_file_atomic(path, doc.dump());
}

CorpusIndex CorpusIndex::load(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw UnreadableFile("cannot parse index snapshot " + path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "fecsynth-bm25-index" || doc.value("version", 0) != 1) {
        throw UnreadableFile("not a recognized index snapshot: " + path.string());
    }
    CorpusIndex index;
    long total_len = 0;
    for (const nlohmann::json& d : doc["docs"]) {
        CorpusDoc cd{d["id"].get<std::string>(), d["title"].get<std::string>(),
                     d["text"].get<std::string>()};
        if (index.id_to_idx_.count(cd.id)) {
            throw UnreadableFile("index snapshot has duplicate doc id '" + cd.id + "'");
        }
        index.id_to_idx_[cd.id] = index.docs_.size();
        index.doc_ids_.push_back(cd.id);
        long len = d["len"].get<long>();
        index.doc_lengths_.push_back(len);
        total_len += len;
        index.docs_.push_back(std::move(cd));
    }
    for (const auto& [term, posting] : doc["postings"].items()) {
        std::vector<std::pair<size_t, long>> list;
        for (const nlohmann::json& entry : posting) {
            list.emplace_back(entry[0].get<size_t>(), entry[1].get<long>());
        }
        index.postings_[term] = std::move(list);
    }
    index.avgdl_ = index.docs_.empty() ? 0.0
                                       : static_cast<double>(total_len) /
                                             static_cast<double>(index.docs_.size());
    return index;
}

double brute_force_score(const std::vector<CorpusDoc>& docs, const Bm25Params& params,
                         const std::vector<std::string>& query_tokens, size_t doc_idx) {
    size_t n = docs.size();
    std::vector<std::string> doc_tokens = text::bm25_tokens(docs[doc_idx].text);
    double len = static_cast<double>(doc_tokens.size());

    double total_len = 0.0;
    for (const CorpusDoc& d : docs) {
        total_len += static_cast<double>(text::bm25_tokens(d.text).size());
    }
    double avgdl = n == 0 ? 0.0 : total_len / static_cast<double>(n);

    double sum = 0.0;
    for (const std::string& term : query_tokens) {
        long tf = static_cast<long>(std::count(doc_tokens.begin(), doc_tokens.end(), term));
        if (tf == 0) continue;
        long df = 0;
        for (const CorpusDoc& d : docs) {
            std::vector<std::string> toks = text::bm25_tokens(d.text);
            if (std::find(toks.begin(), toks.end(), term) != toks.end()) ++df;
        }
        sum += term_score(idf(n, df), tf, params.k1, params.b, len, avgdl);
    }
    return sum;
}

std::vector<ScoredDoc> brute_force_retrieve(const std::vector<CorpusDoc>& docs,
                                            const Bm25Params& params, std::string_view query,
                                            size_t k) {
    std::vector<std::string> query_tokens = text::bm25_tokens(query);
    std::vector<ScoredDoc> scored;
    for (size_t i = 0; i < docs.size(); ++i) {
        double s = brute_force_score(docs, params, query_tokens, i);
        if (s > 0.0) scored.push_back({docs[i].id, s});
    }
    sort_and_truncate(scored, k);
    return scored;
}

} // namespace fecsynth::retriever
