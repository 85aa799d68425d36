#include "vieval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vieval/rng.hpp"
#include "vieval/unicode.hpp"

namespace vieval::corpus {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::pair<const char*, Scenario> kScenarioNames[] = {
    {"question_answering", Scenario::question_answering},
    {"summarization", Scenario::summarization},
    {"sentiment", Scenario::sentiment},
    {"text_classification", Scenario::text_classification},
    {"knowledge_openended", Scenario::knowledge_openended},
    {"knowledge_mcq", Scenario::knowledge_mcq},
    {"toxicity_detection", Scenario::toxicity_detection},
    {"information_retrieval", Scenario::information_retrieval},
    {"language_modeling_mlm", Scenario::language_modeling_mlm},
    {"language_modeling_spelling", Scenario::language_modeling_spelling},
    {"reasoning_synthetic", Scenario::reasoning_synthetic},
    {"reasoning_math", Scenario::reasoning_math},
    {"translation", Scenario::translation},
};

[[noreturn]] void line_error(const std::string& origin, std::size_t line,
                             const std::string& what) {
    throw SchemaError(origin + ":" + std::to_string(line) + ": " + what);
}

bool needs_references(Scenario s) {
    switch (s) {
        case Scenario::question_answering:
        case Scenario::summarization:
        case Scenario::knowledge_openended:
        case Scenario::language_modeling_mlm:
        case Scenario::language_modeling_spelling:
        case Scenario::reasoning_synthetic:
        case Scenario::reasoning_math:
        case Scenario::translation:
            return true;
        default:
            return false;
    }
}

bool needs_label(Scenario s) {
    switch (s) {
        case Scenario::sentiment:
        case Scenario::text_classification:
        case Scenario::knowledge_mcq:
        case Scenario::toxicity_detection:
            return true;
        default:
            return false;
    }
}

EvalSample parse_sample(const json& j, Scenario scenario, const std::string& origin,
                        std::size_t line_no) {
    EvalSample s;
    s.scenario = scenario;
    s.id = j.contains("id") ? std::string(j.at("id").is_string()
                                              ? j.at("id").get<std::string>()
                                              : j.at("id").dump())
                            : std::to_string(line_no);
    auto get_str = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key)) return std::nullopt;
        if (!j.at(key).is_string()) line_error(origin, line_no, std::string(key) + " must be a string");
        return j.at(key).get<std::string>();
    };
    s.context = get_str("context");
    s.query = get_str("query");
    if (j.contains("choices")) {
        if (!j.at("choices").is_array())
            line_error(origin, line_no, "choices must be an array of strings");
        std::vector<std::string> cs;
        for (const auto& c : j.at("choices")) {
            if (!c.is_string()) line_error(origin, line_no, "choices must be an array of strings");
            cs.push_back(c.get<std::string>());
        }
        s.choices = std::move(cs);
    }
    if (j.contains("references")) {
        if (!j.at("references").is_array())
            line_error(origin, line_no, "references must be an array of strings");
        for (const auto& r : j.at("references")) {
            if (!r.is_string())
                line_error(origin, line_no, "references must be an array of strings");
            s.references.push_back(r.get<std::string>());
        }
    }
    if (j.contains("label")) {
        if (!j.at("label").is_number_integer())
            line_error(origin, line_no, "label must be an integer index");
        s.label = j.at("label").get<int>();
    }
    if (j.contains("relevance")) {
        if (!j.at("relevance").is_object())
            line_error(origin, line_no, "relevance must be an object of doc id -> integer");
        std::map<std::string, int> rel;
        for (auto it = j.at("relevance").begin(); it != j.at("relevance").end(); ++it) {
            if (!it.value().is_number_integer() || it.value().get<int>() < 0)
                line_error(origin, line_no,
                           "relevance values must be non-negative integers");
            rel[it.key()] = it.value().get<int>();
        }
        s.relevance = std::move(rel);
    }

    // Scenario invariants.
    if (needs_references(scenario) && s.references.empty())
        line_error(origin, line_no,
                   "scenario " + scenario_to_string(scenario) + " requires non-empty references");
    if (needs_label(scenario) && !s.label)
        line_error(origin, line_no,
                   "scenario " + scenario_to_string(scenario) + " requires a label");
    if (scenario == Scenario::knowledge_mcq && !s.choices)
        line_error(origin, line_no, "knowledge_mcq requires choices");
    if (scenario == Scenario::information_retrieval) {
        if (!s.query) line_error(origin, line_no, "information_retrieval requires a query");
        if (!s.relevance)
            line_error(origin, line_no, "information_retrieval requires relevance judgments");
    }
    if (s.choices && s.label && (*s.label < 0 || static_cast<std::size_t>(*s.label) >= s.choices->size()))
        line_error(origin, line_no,
                   "label " + std::to_string(*s.label) + " out of range for " +
                       std::to_string(s.choices->size()) + " choices");
    if (s.label && !s.choices && *s.label < 0)
        line_error(origin, line_no, "label must be >= 0");
    return s;
}

}  // namespace

Scenario scenario_from_string(const std::string& name) {
    for (const auto& [n, s] : kScenarioNames)
        if (name == n) return s;
    throw SchemaError("unknown scenario: '" + name + "'");
}

std::string scenario_to_string(Scenario s) {
    for (const auto& [n, v] : kScenarioNames)
        if (v == s) return n;
    return "?";
}

ScenarioDataset parse_dataset(const std::string& text, Scenario scenario,
                              const std::string& origin) {
    ScenarioDataset ds;
    ds.scenario = scenario;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool seen_record = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            line_error(origin, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) line_error(origin, line_no, "record must be a JSON object");

        const bool looks_meta = j.contains("label_names") || j.contains("source_language") ||
                                j.contains("target_language");
        if (looks_meta && !seen_record) {
            if (j.contains("label_names")) {
                std::vector<std::string> names;
                for (const auto& n : j.at("label_names")) {
                    if (!n.is_string())
                        line_error(origin, line_no, "label_names must be an array of strings");
                    names.push_back(n.get<std::string>());
                }
                ds.label_names = std::move(names);
            }
            if (j.contains("source_language"))
                ds.source_language = j.at("source_language").get<std::string>();
            if (j.contains("target_language"))
                ds.target_language = j.at("target_language").get<std::string>();
            continue;
        }
        seen_record = true;

        if (j.contains("doc_id")) {
            if (!j.contains("text") || !j.at("text").is_string())
                line_error(origin, line_no, "document record requires string field 'text'");
            std::string id = j.at("doc_id").is_string() ? j.at("doc_id").get<std::string>()
                                                        : j.at("doc_id").dump();
            if (ds.docs.count(id)) line_error(origin, line_no, "duplicate doc_id '" + id + "'");
            ds.docs[id] = j.at("text").get<std::string>();
            continue;
        }

        EvalSample s = parse_sample(j, scenario, origin, line_no);
        std::string split = "test";
        if (j.contains("split")) {
            if (!j.at("split").is_string())
                line_error(origin, line_no, "split must be \"train\" or \"test\"");
            split = j.at("split").get<std::string>();
        }
        if (split == "train")
            ds.train.push_back(std::move(s));
        else if (split == "test")
            ds.test.push_back(std::move(s));
        else
            line_error(origin, line_no, "split must be \"train\" or \"test\", got '" + split + "'");
    }

    // Label range against label_names, test-id uniqueness.
    if (ds.label_names) {
        for (const auto* split : {&ds.train, &ds.test})
            for (const auto& s : *split)
                if (s.label && !s.choices &&
                    static_cast<std::size_t>(*s.label) >= ds.label_names->size())
                    throw SchemaError(origin + ": sample '" + s.id + "' label " +
                                      std::to_string(*s.label) + " out of range for " +
                                      std::to_string(ds.label_names->size()) + " label names");
    }
    std::set<std::string> ids;
    for (const auto& s : ds.test)
        if (!ids.insert(s.id).second)
            throw SchemaError(origin + ": duplicate test sample id '" + s.id + "'");
    return ds;
}

ScenarioDataset load_dataset(const std::string& path, Scenario scenario) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open dataset file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_dataset(ss.str(), scenario, path);
}

std::string serialize_dataset(const ScenarioDataset& ds) {
    std::string out;
    if (ds.label_names || ds.source_language || ds.target_language) {
        ordered_json meta;
        if (ds.label_names) meta["label_names"] = *ds.label_names;
        if (ds.source_language) meta["source_language"] = *ds.source_language;
        if (ds.target_language) meta["target_language"] = *ds.target_language;
        out += meta.dump() + "\n";
    }
    for (const auto& [id, text] : ds.docs) {
        ordered_json j;
        j["doc_id"] = id;
        j["text"] = text;
        out += j.dump() + "\n";
    }
    auto emit = [&](const EvalSample& s, const char* split) {
        ordered_json j;
        j["id"] = s.id;
        j["split"] = split;
        if (s.context) j["context"] = *s.context;
        if (s.query) j["query"] = *s.query;
        if (s.choices) j["choices"] = *s.choices;
        if (!s.references.empty()) j["references"] = s.references;
        if (s.label) j["label"] = *s.label;
        if (s.relevance) j["relevance"] = *s.relevance;
        out += j.dump() + "\n";
    };
    for (const auto& s : ds.train) emit(s, "train");
    for (const auto& s : ds.test) emit(s, "test");
    return out;
}

std::vector<EvalSample> sample_shots(const ScenarioDataset& ds, std::size_t k,
                                     std::uint64_t seed) {
    if (k > ds.train.size())
        throw SchemaError("sample_shots: requested " + std::to_string(k) +
                          " shots but train split has only " + std::to_string(ds.train.size()));
    rng::Engine eng(seed);
    std::vector<std::size_t> idx = rng::sample_without_replacement(eng, ds.train.size(), k);
    std::vector<EvalSample> out;
    out.reserve(k);
    for (std::size_t i : idx) out.push_back(ds.train[i]);
    return out;
}

std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> toks;
    std::vector<char32_t> cur;
    for (char32_t cp : unicode::decode_utf8(unicode::to_lower(text))) {
        if (unicode::is_space(cp)) {
            if (!cur.empty()) {
                toks.push_back(unicode::encode_utf8(cur));
                cur.clear();
            }
        } else {
            cur.push_back(cp);
        }
    }
    if (!cur.empty()) toks.push_back(unicode::encode_utf8(cur));
    return toks;
}

std::map<std::string, std::vector<std::string>> bm25_candidates(
    const std::vector<Query>& queries, const std::map<std::string, std::string>& docs,
    std::size_t top_n, double k1, double b) {
    if (docs.empty()) throw SchemaError("bm25_candidates: empty document collection");
    if (top_n < 1) throw SchemaError("bm25_candidates: top_n must be >= 1");

    // Index: per-doc term frequencies and lengths; per-term document freq.
    struct DocIndex {
        std::string id;
        std::map<std::string, int> tf;
        double len = 0;
    };
    std::vector<DocIndex> index;
    index.reserve(docs.size());
    std::map<std::string, int> df;
    double total_len = 0;
    for (const auto& [id, text] : docs) {
        DocIndex d;
        d.id = id;
        for (const auto& t : tokenize_lower(text)) ++d.tf[t];
        for (const auto& [t, _] : d.tf) ++df[t];
        d.len = 0;
        for (const auto& [_, c] : d.tf) d.len += c;
        total_len += d.len;
        index.push_back(std::move(d));
    }
    const double n_docs = static_cast<double>(index.size());
    const double avgdl = total_len / n_docs;

    std::map<std::string, std::vector<std::string>> out;
    for (const auto& q : queries) {
        std::vector<std::string> terms = tokenize_lower(q.text);
        if (terms.empty()) {
            out[q.id] = {};
            continue;
        }
        std::vector<std::pair<double, const std::string*>> scored;
        scored.reserve(index.size());
        for (const auto& d : index) {
            double score = 0;
            for (const auto& t : terms) {
                auto it = d.tf.find(t);
                if (it == d.tf.end()) continue;
                auto dit = df.find(t);
                const double dfv = dit == df.end() ? 0.0 : dit->second;
                const double idf = std::log(1.0 + (n_docs - dfv + 0.5) / (dfv + 0.5));
                const double tf = it->second;
                const double denom = tf + k1 * (1.0 - b + b * (avgdl > 0 ? d.len / avgdl : 0.0));
                score += idf * tf * (k1 + 1.0) / denom;
            }
            scored.emplace_back(score, &d.id);
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b2) {
                             if (a.first != b2.first) return a.first > b2.first;
                             return *a.second < *b2.second;
                         });
        std::vector<std::string> ranked;
        for (const auto& [score, id] : scored) {
            if (ranked.size() >= top_n) break;
            ranked.push_back(*id);
        }
        out[q.id] = std::move(ranked);
    }
    return out;
}

std::vector<std::string> boost_candidates(const std::vector<std::string>& candidates,
                                          const std::vector<std::string>& relevant) {
    std::vector<std::string> out = candidates;
    std::set<std::string> have(candidates.begin(), candidates.end());
    std::vector<std::string> missing;
    for (const auto& r : relevant)
        if (!have.count(r)) {
            missing.push_back(r);
            have.insert(r);
        }
    std::sort(missing.begin(), missing.end());
    out.insert(out.end(), missing.begin(), missing.end());
    return out;
}

}  // namespace vieval::corpus
