#include "fecsynth/dataset.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <json.hpp>

#include <map>
#include <sstream>

namespace fecsynth::dataset {

namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
    return text::lowercase_ascii(s);
}

std::vector<std::string> evidence_strings(const json& value) {
    std::vector<std::string> out;
    if (value.is_string()) {
        if (!value.get<std::string>().empty()) out.push_back(value.get<std::string>());
    } else if (value.is_array()) {
        for (const json& item : value) {
            if (item.is_string() && !item.get<std::string>().empty()) {
                out.push_back(item.get<std::string>());
            }
        }
    }
    return out;
}

/// title -> sentences, loaded from a JSONL corpus of {"title", "sentences"}.
std::map<std::string, std::vector<std::string>> load_evidence_corpus(
    const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> corpus;
    std::istringstream in(text::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception&) {
            continue;
        }
        if (!doc.contains("title") || !doc["title"].is_string()) continue;
        std::vector<std::string> sentences;
        if (doc.contains("sentences") && doc["sentences"].is_array()) {
            for (const json& s : doc["sentences"]) {
                sentences.push_back(s.is_string() ? s.get<std::string>() : std::string());
            }
        }
        corpus[doc["title"].get<std::string>()] = std::move(sentences);
    }
    return corpus;
}

struct MapContext {
    const std::map<std::string, std::vector<std::string>>* corpus = nullptr;
    size_t ordinal = 0;
};

std::optional<std::string> map_hover(const json& doc, MapContext& ctx, ClaimRecord& rec) {
    if (!doc.contains("claim") || !doc["claim"].is_string() ||
        doc["claim"].get<std::string>().empty()) {
        return "record has no claim text";
    }
    rec.claim = doc["claim"].get<std::string>();
    if (doc.contains("uid") && doc["uid"].is_string()) {
        rec.id = doc["uid"].get<std::string>();
    } else if (doc.contains("id")) {
        rec.id = doc["id"].is_string() ? doc["id"].get<std::string>()
                                       : doc["id"].dump();
    }
    if (rec.id.empty()) return "record has no id";

    std::string label = doc.contains("label") && doc["label"].is_string()
                            ? lower(doc["label"].get<std::string>())
                            : "";
    if (label == "supported") {
        rec.label = Label::SUPPORTS;
    } else if (label == "not_supported") {
        rec.label = Label::REFUTES;
    } else {
        return "unrecognized label '" + label + "'";
    }
    if (doc.contains("num_hops") && doc["num_hops"].is_number_integer()) {
        rec.hops = doc["num_hops"].get<int>();
    }
    if (doc.contains("supporting_facts") && doc["supporting_facts"].is_array()) {
        for (const json& fact : doc["supporting_facts"]) {
            if (!fact.is_array() || fact.empty() || !fact[0].is_string()) continue;
            std::string title = fact[0].get<std::string>();
            if (ctx.corpus != nullptr) {
                auto it = ctx.corpus->find(title);
                if (it != ctx.corpus->end() && fact.size() > 1 &&
                    fact[1].is_number_integer()) {
                    int idx = fact[1].get<int>();
                    if (idx >= 0 && static_cast<size_t>(idx) < it->second.size()) {
                        rec.evidence.push_back(it->second[static_cast<size_t>(idx)]);
                        continue;
                    }
                }
            }
            rec.evidence.push_back(title);
        }
    }
    rec.dataset = DatasetKind::HOVER;
    return std::nullopt;
}

std::optional<std::string> map_feverous(const json& doc, MapContext&, ClaimRecord& rec) {
    if (!doc.contains("claim") || !doc["claim"].is_string() ||
        doc["claim"].get<std::string>().empty()) {
        return "record has no claim text";
    }
    rec.claim = doc["claim"].get<std::string>();
    if (doc.contains("id")) {
        rec.id = doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump();
    }
    if (rec.id.empty()) return "record has no id";

    std::string label = doc.contains("label") && doc["label"].is_string()
                            ? lower(doc["label"].get<std::string>())
                            : "";
    if (label == "supports") {
        rec.label = Label::SUPPORTS;
    } else if (label == "refutes") {
        rec.label = Label::REFUTES;
    } else if (label == "not enough info") {
        return "label NOT ENOUGH INFO is out of scope";
    } else {
        return "unrecognized label '" + label + "'";
    }

    if (doc.contains("evidence") && doc["evidence"].is_array()) {
        for (const json& group : doc["evidence"]) {
            if (!group.is_object() || !group.contains("content") ||
                !group["content"].is_array()) {
                continue;
            }
            for (const json& content_id : group["content"]) {
                if (!content_id.is_string()) return "non-string evidence content id";
                std::string cid = content_id.get<std::string>();
                if (cid.find("_sentence_") == std::string::npos) {
                    return "evidence includes non-sentence element '" + cid + "'";
                }
                rec.evidence.push_back(cid);
            }
        }
    }
    rec.dataset = DatasetKind::FEVEROUS;
    return std::nullopt;
}

std::optional<std::string> map_fecdata(const json& doc, MapContext& ctx, ClaimRecord& rec) {
    if (!doc.contains("mutated") || !doc["mutated"].is_string() ||
        doc["mutated"].get<std::string>().empty()) {
        return "record has no mutated text";
    }
    rec.claim = doc["mutated"].get<std::string>();
    if (doc.contains("original") && doc["original"].is_string()) {
        rec.gold_correction = doc["original"].get<std::string>();
    }
    if (doc.contains("id")) {
        rec.id = doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump();
    }
    if (rec.id.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "fec-%06zu", ctx.ordinal);
        rec.id = buf;
    }
    std::string label = doc.contains("label") && doc["label"].is_string()
                            ? lower(doc["label"].get<std::string>())
                            : "refuted";
    if (label == "supported") {
        rec.label = Label::SUPPORTS;
    } else if (label == "refuted") {
        rec.label = Label::REFUTES;
    } else {
        return "unrecognized label '" + label + "'";
    }
    if (doc.contains("evidence")) rec.evidence = evidence_strings(doc["evidence"]);
    rec.dataset = DatasetKind::FECDATA;
    return std::nullopt;
}

std::optional<std::string> map_other(const json& doc, MapContext&, ClaimRecord& rec) {
    if (!doc.contains("claim") || !doc["claim"].is_string() ||
        doc["claim"].get<std::string>().empty()) {
        return "record has no claim text";
    }
    rec.claim = doc["claim"].get<std::string>();
    if (doc.contains("id")) {
        rec.id = doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump();
    }
    if (rec.id.empty()) return "record has no id";
    std::string label = doc.contains("label") && doc["label"].is_string()
                            ? lower(doc["label"].get<std::string>())
                            : "";
    if (label == "supports") {
        rec.label = Label::SUPPORTS;
    } else if (label == "refutes") {
        rec.label = Label::REFUTES;
    } else {
        return "unrecognized label '" + label + "'";
    }
    if (doc.contains("evidence")) rec.evidence = evidence_strings(doc["evidence"]);
    if (doc.contains("gold_correction") && doc["gold_correction"].is_string()) {
        rec.gold_correction = doc["gold_correction"].get<std::string>();
    }
    if (doc.contains("hops") && doc["hops"].is_number_integer()) {
        rec.hops = doc["hops"].get<int>();
    }
    rec.dataset = DatasetKind::OTHER;
    return std::nullopt;
}

} // namespace

std::string_view label_name(Label l) {
    return l == Label::SUPPORTS ? "SUPPORTS" : "REFUTES";
}

std::string_view dataset_kind_name(DatasetKind k) {
    switch (k) {
    case DatasetKind::HOVER: return "hover";
    case DatasetKind::FEVEROUS: return "feverous";
    case DatasetKind::FECDATA: return "fecdata";
    case DatasetKind::OTHER: return "other";
    }
    return "other";
}

DatasetKind dataset_kind_from_string(std::string_view s) {
    std::string k = lower(text::trim(s));
    if (k == "hover") return DatasetKind::HOVER;
    if (k == "feverous") return DatasetKind::FEVEROUS;
    if (k == "fecdata" || k == "fec") return DatasetKind::FECDATA;
    if (k == "other" || k == "native") return DatasetKind::OTHER;
    throw UnknownDatasetKind("unknown dataset kind '" + std::string(s) + "'");
}

IngestResult ingest(const std::filesystem::path& path, DatasetKind kind,
                    const std::optional<std::filesystem::path>& evidence_corpus) {
    std::string raw = text::read_file(path);

    std::map<std::string, std::vector<std::string>> corpus;
    MapContext ctx;
    if (evidence_corpus) {
        corpus = load_evidence_corpus(*evidence_corpus);
        ctx.corpus = &corpus;
    }

    std::vector<json> docs;
    std::vector<std::string> line_errors;
    size_t first_byte = raw.find_first_not_of(" \t\r\n");
    if (first_byte != std::string::npos && raw[first_byte] == '[') {
        try {
            json arr = json::parse(raw);
            for (json& item : arr) docs.push_back(std::move(item));
        } catch (const json::exception& e) {
            throw UnreadableFile("cannot parse JSON array " + path.string() + ": " + e.what());
        }
    } else {
        std::istringstream in(raw);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            try {
                docs.push_back(json::parse(line));
            } catch (const json::exception& e) {
                docs.push_back(json(json::value_t::discarded));
                line_errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    IngestResult result;
    size_t bad_line = 0;
    for (const json& doc : docs) {
        ++result.stats.read;
        if (doc.is_discarded()) {
            ++result.stats.skipped;
            result.warnings.push_back("skipped record: " + line_errors[bad_line++]);
            continue;
        }
        if (!doc.is_object()) {
            ++result.stats.skipped;
            result.warnings.push_back("skipped record: not a JSON object");
            continue;
        }
        ClaimRecord rec;
        ctx.ordinal = result.stats.read;
        std::optional<std::string> err;
        switch (kind) {
        case DatasetKind::HOVER: err = map_hover(doc, ctx, rec); break;
        case DatasetKind::FEVEROUS: err = map_feverous(doc, ctx, rec); break;
        case DatasetKind::FECDATA: err = map_fecdata(doc, ctx, rec); break;
        case DatasetKind::OTHER: err = map_other(doc, ctx, rec); break;
        }
        if (err) {
            ++result.stats.skipped;
            result.warnings.push_back("skipped record: " + *err);
            continue;
        }
        ++result.stats.kept;
        result.records.push_back(std::move(rec));
    }
    if (result.stats.read == 0) {
        result.warnings.push_back("input file " + path.string() + " contained no records");
    }
    return result;
}

std::string join_evidence(const std::vector<std::string>& evidence) {
    std::string out;
    for (size_t i = 0; i < evidence.size(); ++i) {
        if (i > 0) out += ' ';
        out += evidence[i];
    }
    return out;
}

} // namespace fecsynth::dataset
