#include "fecsynth/metrics.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <map>
#include <set>

namespace fecsynth::metrics {

namespace {

using Counter = std::map<std::vector<std::string>, long>;

Counter ngram_counter(const std::vector<std::string>& tokens, size_t n) {
    Counter out;
    if (tokens.size() < n) return out;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string> gram(tokens.begin() + static_cast<long>(i),
                                      tokens.begin() + static_cast<long>(i + n));
        ++out[std::move(gram)];
    }
    return out;
}

Counter scale(const Counter& c, long factor) {
    Counter out;
    for (const auto& [gram, count] : c) out[gram] = count * factor;
    return out;
}

Counter intersect(const Counter& a, const Counter& b) {
    Counter out;
    for (const auto& [gram, count] : a) {
        auto it = b.find(gram);
        if (it != b.end()) {
            long m = std::min(count, it->second);
            if (m > 0) out[gram] = m;
        }
    }
    return out;
}

Counter subtract(const Counter& a, const Counter& b) {
    Counter out;
    for (const auto& [gram, count] : a) {
        auto it = b.find(gram);
        long d = count - (it == b.end() ? 0 : it->second);
        if (d > 0) out[gram] = d;
    }
    return out;
}

long total(const Counter& c) {
    long sum = 0;
    for (const auto& [gram, count] : c) sum += count;
    return sum;
}

struct OrderScores {
    double keep = 0.0;
    double del = 0.0;
    double add = 0.0;
};

double f1(double precision, double recall) {
    if (precision > 0.0 || recall > 0.0) {
        return 2.0 * precision * recall / (precision + recall);
    }
    return 0.0;
}

OrderScores sari_order(const Counter& sgrams, const Counter& cgrams,
                       const std::vector<Counter>& rgrams, long numref) {
    Counter rcounter;
    for (const Counter& one : rgrams) {
        for (const auto& [gram, count] : one) rcounter[gram] += count;
    }
    Counter s_rep = scale(sgrams, numref);
    Counter c_rep = scale(cgrams, numref);

    Counter keep_rep = intersect(s_rep, c_rep);
    Counter keep_good = intersect(keep_rep, rcounter);
    Counter keep_all = intersect(s_rep, rcounter);

    double keep_frac = 0.0;
    double keep_matched = 0.0;
    for (const auto& [gram, count] : keep_good) {
        keep_frac += static_cast<double>(count) / static_cast<double>(keep_rep.at(gram));
        keep_matched += static_cast<double>(count);
    }
    double keep_precision = 1.0;
    double keep_recall = 1.0;
    if (!keep_rep.empty()) keep_precision = keep_frac / static_cast<double>(keep_rep.size());
    long keep_all_total = total(keep_all);
    if (keep_all_total > 0) keep_recall = keep_matched / static_cast<double>(keep_all_total);

    Counter del_rep = subtract(s_rep, c_rep);
    Counter del_good = subtract(del_rep, rcounter);
    double del_frac = 0.0;
    for (const auto& [gram, count] : del_good) {
        del_frac += static_cast<double>(count) / static_cast<double>(del_rep.at(gram));
    }
    double del_precision = 1.0;
    if (!del_rep.empty()) del_precision = del_frac / static_cast<double>(del_rep.size());

    std::set<std::vector<std::string>> s_set, c_set, r_set;
    for (const auto& [gram, count] : sgrams) s_set.insert(gram);
    for (const auto& [gram, count] : cgrams) c_set.insert(gram);
    for (const auto& [gram, count] : rcounter) r_set.insert(gram);

    long add_candidates = 0;
    long add_good = 0;
    long add_all = 0;
    for (const auto& gram : c_set) {
        if (!s_set.count(gram)) {
            ++add_candidates;
            if (r_set.count(gram)) ++add_good;
        }
    }
    for (const auto& gram : r_set) {
        if (!s_set.count(gram)) ++add_all;
    }
    double add_precision = 1.0;
    double add_recall = 1.0;
    if (add_candidates > 0) {
        add_precision = static_cast<double>(add_good) / static_cast<double>(add_candidates);
    }
    if (add_all > 0) add_recall = static_cast<double>(add_good) / static_cast<double>(add_all);

    OrderScores scores;
    scores.keep = f1(keep_precision, keep_recall);
    scores.del = del_precision;
    scores.add = f1(add_precision, add_recall);
    return scores;
}

} // namespace

SariScores sari(std::string_view source, std::string_view prediction,
                const std::vector<std::string>& references) {
    if (references.empty()) {
        throw EmptyReferenceList("sari requires at least one reference");
    }
    std::vector<std::string> s_tokens = text::metric_tokens(source);
    std::vector<std::string> c_tokens = text::metric_tokens(prediction);
    std::vector<std::vector<std::string>> r_tokens;
    r_tokens.reserve(references.size());
    for (const std::string& ref : references) r_tokens.push_back(text::metric_tokens(ref));

    long numref = static_cast<long>(references.size());
    double keep_sum = 0.0, del_sum = 0.0, add_sum = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
        Counter sgrams = ngram_counter(s_tokens, n);
        Counter cgrams = ngram_counter(c_tokens, n);
        std::vector<Counter> rgrams;
        rgrams.reserve(r_tokens.size());
        for (const auto& toks : r_tokens) rgrams.push_back(ngram_counter(toks, n));
        OrderScores scores = sari_order(sgrams, cgrams, rgrams, numref);
        keep_sum += scores.keep;
        del_sum += scores.del;
        add_sum += scores.add;
    }

    SariScores out;
    out.keep = 100.0 * keep_sum / 4.0;
    out.del = 100.0 * del_sum / 4.0;
    out.add = 100.0 * add_sum / 4.0;
    out.final = (out.keep + out.add + out.del) / 3.0;
    return out;
}

namespace {

double rouge2_overlap(std::string_view prediction, std::string_view reference, bool recall_only) {
    std::vector<std::string> p = text::metric_tokens(prediction);
    std::vector<std::string> r = text::metric_tokens(reference);
    if (p.size() < 2 || r.size() < 2) return 0.0;
    Counter pg = ngram_counter(p, 2);
    Counter rg = ngram_counter(r, 2);
    long overlap = total(intersect(pg, rg));
    long p_total = total(pg);
    long r_total = total(rg);
    double recall = static_cast<double>(overlap) / static_cast<double>(r_total);
    if (recall_only) return recall;
    double precision = static_cast<double>(overlap) / static_cast<double>(p_total);
    return f1(precision, recall);
}

} // namespace

double rouge2_f1(std::string_view prediction, std::string_view reference) {
    return rouge2_overlap(prediction, reference, false);
}

double rouge2_recall(std::string_view prediction, std::string_view reference) {
    return rouge2_overlap(prediction, reference, true);
}

double lcs_similarity(std::string_view a, std::string_view b) {
    return text::lcs_ratio(text::metric_tokens(a), text::metric_tokens(b));
}

} // namespace fecsynth::metrics
