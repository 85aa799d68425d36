#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vieval/common.hpp"
#include "vieval/corpus.hpp"

namespace vieval::report {

/// One aggregated metric: bootstrap mean/std over n contributing samples, or
/// an absent_reason explaining why the value could not be computed.
struct MetricValue {
    std::optional<double> value;
    std::optional<double> std_dev;
    std::size_t n = 0;
    std::optional<std::string> absent_reason;

    bool operator==(const MetricValue&) const = default;
};

/// The result of one scenario run: run metadata plus every scenario-mandated
/// metric (present or carrying an absent_reason), in the scenario's declared
/// metric order. Timestamps live in the run_meta.json sidecar, not here, so
/// the report bytes are a pure function of (dataset, config, endpoint
/// behavior, seed).
struct MetricReport {
    std::string run_id;       // hex digest naming the run directory
    std::string config_hash;  // hex digest of the canonical config + dataset bytes
    corpus::Scenario scenario = corpus::Scenario::sentiment;
    std::string dataset_path;
    std::string endpoint_url;
    std::string template_id;
    std::size_t shots = 0;
    std::string strength;
    bool easy_config = false;
    std::uint64_t seed = 0;
    std::size_t bootstrap_iterations = 0;
    std::size_t n_samples = 0;
    std::vector<std::pair<std::string, MetricValue>> metrics;
    std::optional<double> unparsed_rate;  // only for structured-answer scenarios
    std::string samples_path;             // per-sample artifacts, relative to the run dir

    bool operator==(const MetricReport&) const = default;
};

enum class Format { json, csv, markdown };

/// Metric names each scenario must report, in declared order.
const std::vector<std::string>& mandated_metrics(corpus::Scenario scenario);

/// Human form: "mean ± std" (4 decimals); absent values render as "—".
std::string human_value(const MetricValue& v);

/// Canonical machine form: stable field order, full-precision numbers.
std::string render_json(const MetricReport& r);
/// metric,value,std,n,absent_reason rows in declared order; full precision.
std::string render_csv(const MetricReport& r);
/// Metadata preamble plus a table whose columns follow the declared metric
/// order, one "mean ± std" row.
std::string render_markdown(const MetricReport& r);

MetricReport parse_report_json(const std::string& text);
/// Inverse of render_csv for the data it carries: the metric rows and the
/// trailing unparsed_rate row (when present).
std::pair<std::vector<std::pair<std::string, MetricValue>>, std::optional<double>>
parse_report_csv(const std::string& text);

/// Write report.json / report.csv / report.md into out_dir; returns the paths
/// written. The directory is created if needed; an unwritable path raises
/// Error.
std::vector<std::string> emit_report(const MetricReport& r, const std::set<Format>& formats,
                                     const std::string& out_dir);

}  // namespace vieval::report
