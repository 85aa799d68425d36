#include "vieval/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace vieval::report {

namespace {

using ordered_json = nlohmann::ordered_json;

/// Shortest round-trip decimal form, as nlohmann prints it. Using the JSON
/// serializer for CSV too keeps json→csv→json round trips loss-free.
std::string number_repr(double v) { return ordered_json(v).dump(); }

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

/// Quote a CSV cell when it contains a comma, quote, or newline.
std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError("report csv: bad number '" + s + "' in " + what);
    }
}

}  // namespace

const std::vector<std::string>& mandated_metrics(corpus::Scenario scenario) {
    using S = corpus::Scenario;
    static const std::map<S, std::vector<std::string>> table = {
        {S::question_answering,
         {"exact_match", "f1", "toxicity", "demographic_representation",
          "stereotypical_association"}},
        {S::summarization,
         {"rouge1", "rouge2", "rouge_l", "summac", "bert_score", "coverage", "density",
          "compression", "toxicity", "demographic_representation", "stereotypical_association"}},
        {S::sentiment, {"accuracy", "macro_f1", "auc_roc", "ece", "accuracy_at_10"}},
        {S::text_classification, {"accuracy", "macro_f1", "auc_roc", "ece", "accuracy_at_10"}},
        {S::knowledge_openended, {"exact_match", "f1"}},
        {S::knowledge_mcq, {"accuracy", "macro_f1", "auc_roc", "ece", "accuracy_at_10"}},
        {S::toxicity_detection, {"accuracy", "macro_f1", "auc_roc"}},
        {S::information_retrieval, {"mrr_at_10", "ndcg_at_10"}},
        {S::language_modeling_mlm, {"exact_match", "cer", "wer", "ced", "wed", "perplexity"}},
        {S::language_modeling_spelling,
         {"exact_match", "cer", "wer", "ced", "wed", "perplexity"}},
        {S::reasoning_synthetic, {"exact_match", "f1"}},
        {S::reasoning_math, {"exact_match", "f1", "equivalent"}},
        {S::translation,
         {"bleu", "hlepor", "toxicity", "demographic_representation",
          "stereotypical_association"}},
    };
    auto it = table.find(scenario);
    if (it == table.end())
        throw SchemaError("no mandated metric set for scenario " +
                          corpus::scenario_to_string(scenario));
    return it->second;
}

std::string human_value(const MetricValue& v) {
    if (!v.value) return "—";
    std::string out = fixed4(*v.value);
    if (v.std_dev) out += " ± " + fixed4(*v.std_dev);
    return out;
}

std::string render_json(const MetricReport& r) {
    ordered_json j;
    j["run_id"] = r.run_id;
    j["config_hash"] = r.config_hash;
    j["scenario"] = corpus::scenario_to_string(r.scenario);
    j["dataset_path"] = r.dataset_path;
    j["endpoint_url"] = r.endpoint_url;
    j["template_id"] = r.template_id;
    j["shots"] = r.shots;
    j["strength"] = r.strength;
    j["easy_config"] = r.easy_config;
    j["seed"] = r.seed;
    j["bootstrap_iterations"] = r.bootstrap_iterations;
    j["n_samples"] = r.n_samples;
    j["metrics"] = ordered_json::array();
    for (const auto& [name, v] : r.metrics) {
        ordered_json m;
        m["name"] = name;
        if (v.value) {
            m["value"] = *v.value;
            if (v.std_dev) m["std"] = *v.std_dev;
        }
        m["n"] = v.n;
        if (v.absent_reason) m["absent_reason"] = *v.absent_reason;
        j["metrics"].push_back(std::move(m));
    }
    if (r.unparsed_rate) j["unparsed_rate"] = *r.unparsed_rate;
    j["samples_path"] = r.samples_path;
    return j.dump(2) + "\n";
}

MetricReport parse_report_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report json: ") + e.what());
    }
    try {
        MetricReport r;
        r.run_id = j.at("run_id").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.scenario = corpus::scenario_from_string(j.at("scenario").get<std::string>());
        r.dataset_path = j.at("dataset_path").get<std::string>();
        r.endpoint_url = j.at("endpoint_url").get<std::string>();
        r.template_id = j.at("template_id").get<std::string>();
        r.shots = j.at("shots").get<std::size_t>();
        r.strength = j.at("strength").get<std::string>();
        r.easy_config = j.at("easy_config").get<bool>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.bootstrap_iterations = j.at("bootstrap_iterations").get<std::size_t>();
        r.n_samples = j.at("n_samples").get<std::size_t>();
        for (const auto& m : j.at("metrics")) {
            MetricValue v;
            if (m.contains("value")) v.value = m.at("value").get<double>();
            if (m.contains("std")) v.std_dev = m.at("std").get<double>();
            v.n = m.at("n").get<std::size_t>();
            if (m.contains("absent_reason"))
                v.absent_reason = m.at("absent_reason").get<std::string>();
            r.metrics.emplace_back(m.at("name").get<std::string>(), std::move(v));
        }
        if (j.contains("unparsed_rate")) r.unparsed_rate = j.at("unparsed_rate").get<double>();
        r.samples_path = j.at("samples_path").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report json: ") + e.what());
    }
}

std::string render_csv(const MetricReport& r) {
    std::string out = "metric,value,std,n,absent_reason\n";
    auto row = [&](const std::string& name, const MetricValue& v) {
        out += csv_cell(name);
        out += ',';
        if (v.value) out += number_repr(*v.value);
        out += ',';
        if (v.std_dev) out += number_repr(*v.std_dev);
        out += ',';
        out += std::to_string(v.n);
        out += ',';
        if (v.absent_reason) out += csv_cell(*v.absent_reason);
        out += '\n';
    };
    for (const auto& [name, v] : r.metrics) row(name, v);
    if (r.unparsed_rate) {
        MetricValue v;
        v.value = *r.unparsed_rate;
        v.n = r.n_samples;
        row("unparsed_rate", v);
    }
    return out;
}

std::pair<std::vector<std::pair<std::string, MetricValue>>, std::optional<double>>
parse_report_csv(const std::string& text) {
    std::vector<std::pair<std::string, MetricValue>> metrics;
    std::optional<double> unparsed_rate;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            if (line != "metric,value,std,n,absent_reason")
                throw SchemaError("report csv: unexpected header '" + line + "'");
            header = false;
            continue;
        }
        auto cells = split_csv_row(line);
        if (cells.size() != 5)
            throw SchemaError("report csv: expected 5 cells, got " +
                              std::to_string(cells.size()));
        MetricValue v;
        if (!cells[1].empty()) v.value = parse_number(cells[1], "value");
        if (!cells[2].empty()) v.std_dev = parse_number(cells[2], "std");
        v.n = static_cast<std::size_t>(parse_number(cells[3], "n"));
        if (!cells[4].empty()) v.absent_reason = cells[4];
        if (cells[0] == "unparsed_rate") {
            if (!v.value) throw SchemaError("report csv: unparsed_rate row without a value");
            unparsed_rate = *v.value;
        } else {
            metrics.emplace_back(cells[0], std::move(v));
        }
    }
    if (header) throw SchemaError("report csv: empty document");
    return {std::move(metrics), unparsed_rate};
}

std::string render_markdown(const MetricReport& r) {
    std::string out;
    out += "# " + corpus::scenario_to_string(r.scenario) + " — run " + r.run_id + "\n\n";
    out += "- dataset: `" + r.dataset_path + "`\n";
    out += "- endpoint: `" + r.endpoint_url + "`\n";
    out += "- template: `" + r.template_id + "`, shots: " + std::to_string(r.shots) +
           ", strength: " + r.strength + (r.easy_config ? ", easy generation config" : "") +
           "\n";
    out += "- samples: " + std::to_string(r.n_samples) +
           ", seed: " + std::to_string(r.seed) +
           ", bootstrap iterations: " + std::to_string(r.bootstrap_iterations) + "\n";
    if (r.unparsed_rate) out += "- unparsed rate: " + fixed4(*r.unparsed_rate) + "\n";
    out += "\n|";
    for (const auto& [name, v] : r.metrics) out += " " + name + " |";
    out += "\n|";
    for (std::size_t i = 0; i < r.metrics.size(); ++i) out += " --- |";
    out += "\n|";
    for (const auto& [name, v] : r.metrics) out += " " + human_value(v) + " |";
    out += "\n";
    return out;
}

std::vector<std::string> emit_report(const MetricReport& r, const std::set<Format>& formats,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create output directory '" + out_dir + "': " + ec.message());

    std::vector<std::string> written;
    auto write_file = [&](const std::string& name, const std::string& body) {
        fs::path p = fs::path(out_dir) / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + p.string() + "'");
        out << body;
        out.close();
        if (!out) throw Error("failed writing '" + p.string() + "'");
        written.push_back(p.string());
    };
    if (formats.count(Format::json)) write_file("report.json", render_json(r));
    if (formats.count(Format::csv)) write_file("report.csv", render_csv(r));
    if (formats.count(Format::markdown)) write_file("report.md", render_markdown(r));
    return written;
}

}  // namespace vieval::report
