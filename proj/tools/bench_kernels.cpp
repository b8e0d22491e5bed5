#include "fecsynth/metrics.hpp"
#include "fecsynth/pipeline.hpp"
#include "fecsynth/retriever.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace fecsynth;

namespace {

double time_ms(const std::function<void()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

std::string random_sentence(std::mt19937& rng, const std::vector<std::string>& vocab,
                            int min_len, int max_len) {
    std::uniform_int_distribution<int> len_dist(min_len, max_len);
    std::uniform_int_distribution<size_t> word_dist(0, vocab.size() - 1);
    int len = len_dist(rng);
    std::string s;
    for (int i = 0; i < len; ++i) {
        if (!s.empty()) s += ' ';
        s += vocab[word_dist(rng)];
    }
    return s;
}

std::vector<std::string> make_vocab(std::mt19937& rng, size_t n) {
    std::uniform_int_distribution<int> ch('a', 'z');
    std::uniform_int_distribution<int> len(3, 9);
    std::vector<std::string> vocab;
    vocab.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        std::string w;
        int l = len(rng);
        for (int c = 0; c < l; ++c) w += static_cast<char>(ch(rng));
        vocab.push_back(std::move(w));
    }
    return vocab;
}

} // namespace

int main(int argc, char** argv) {
    int docs = 5000, queries = 2000, records = 20000, k = 3;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    unsigned seed = 20240817;
    CLI::App app{"Timing comparison: parallel kernels vs their serial references"};
    app.add_option("--docs", docs, "Corpus size");
    app.add_option("--queries", queries, "Retrieval batch size");
    app.add_option("--records", records, "Evaluation corpus size");
    app.add_option("--k", k, "Results per query");
    app.add_option("--threads", threads, "Parallel width");
    app.add_option("--seed", seed, "RNG seed");
    CLI11_PARSE(app, argc, argv);
    if (threads < 2) threads = 2;

    std::mt19937 rng(seed);
    auto vocab = make_vocab(rng, 800);

    std::vector<retriever::CorpusDoc> corpus;
    corpus.reserve(static_cast<size_t>(docs));
    for (int i = 0; i < docs; ++i) {
        retriever::CorpusDoc d;
        d.id = "doc-" + std::to_string(i);
        d.text = random_sentence(rng, vocab, 20, 80);
        corpus.push_back(std::move(d));
    }
    std::vector<std::string> query_batch;
    query_batch.reserve(static_cast<size_t>(queries));
    for (int i = 0; i < queries; ++i) query_batch.push_back(random_sentence(rng, vocab, 3, 8));

    auto index = retriever::CorpusIndex::build(corpus);
    std::printf("corpus: %d docs, avgdl %.1f; %d queries, k=%d\n", docs,
                index.average_doc_length(), queries, k);

    std::vector<std::vector<retriever::ScoredDoc>> serial_hits, parallel_hits;
    double t_serial = time_ms([&] {
        serial_hits = index.retrieve_batch({}, query_batch, static_cast<size_t>(k), 1);
    });
    double t_parallel = time_ms([&] {
        parallel_hits = index.retrieve_batch({}, query_batch, static_cast<size_t>(k), threads);
    });
    int brute_queries = std::min(queries, 50);
    double t_brute = time_ms([&] {
        for (int i = 0; i < brute_queries; ++i)
            retriever::brute_force_retrieve(corpus, {}, query_batch[static_cast<size_t>(i)],
                                            static_cast<size_t>(k));
    });
    bool agree = serial_hits.size() == parallel_hits.size();
    for (size_t i = 0; agree && i < serial_hits.size(); ++i) {
        agree = serial_hits[i].size() == parallel_hits[i].size();
        for (size_t j = 0; agree && j < serial_hits[i].size(); ++j)
            agree = serial_hits[i][j].doc_id == parallel_hits[i][j].doc_id;
    }
    std::printf("retrieve_batch  serial %9.1f ms | %d threads %9.1f ms | speedup %.2fx | %s\n",
                t_serial, threads, t_parallel, t_serial / t_parallel,
                agree ? "results identical" : "RESULTS DIFFER");
    std::printf("brute force     %9.1f ms for %d queries (indexed: %9.3f ms)\n", t_brute,
                brute_queries,
                t_serial * brute_queries / static_cast<double>(queries));

    std::vector<pipeline::PredictionRecord> preds(static_cast<size_t>(records));
    std::vector<pipeline::ReferenceRecord> refs(static_cast<size_t>(records));
    for (int i = 0; i < records; ++i) {
        auto id = "r" + std::to_string(i);
        preds[static_cast<size_t>(i)] = {id, random_sentence(rng, vocab, 8, 25)};
        refs[static_cast<size_t>(i)] = {id, random_sentence(rng, vocab, 8, 25),
                                        {random_sentence(rng, vocab, 8, 25)}, ""};
    }
    pipeline::EvalOutput out_serial, out_parallel;
    double e_serial = time_ms([&] {
        out_serial = pipeline::evaluate_streams(preds, refs, false, 1, nullptr, nullptr, nullptr);
    });
    double e_parallel = time_ms([&] {
        out_parallel =
            pipeline::evaluate_streams(preds, refs, false, threads, nullptr, nullptr, nullptr);
    });
    bool eval_agree = out_serial.records.size() == out_parallel.records.size();
    for (size_t i = 0; eval_agree && i < out_serial.records.size(); ++i) {
        eval_agree = out_serial.records[i].scores.sari.final ==
                         out_parallel.records[i].scores.sari.final &&
                     out_serial.records[i].scores.rouge2 == out_parallel.records[i].scores.rouge2;
    }
    std::printf("evaluate        serial %9.1f ms | %d threads %9.1f ms | speedup %.2fx | %s\n",
                e_serial, threads, e_parallel, e_serial / e_parallel,
                eval_agree ? "scores identical" : "SCORES DIFFER");
    return agree && eval_agree ? 0 : 1;
}
