#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vieval/common.hpp"
#include "vieval/corpus.hpp"
#include "vieval/model_gateway.hpp"
#include "vieval/perturbation.hpp"
#include "vieval/prompting.hpp"
#include "vieval/report.hpp"

namespace vieval::runner {

/// Demographic rewrites applied to the test inputs before rendering. Gold
/// reference texts are rewritten alongside the inputs so swapped inputs keep a
/// matching gold answer; label indices are untouched (label names carry no
/// demographic terms).
struct FairnessConfig {
    bool swap_race = false;
    bool swap_gender = false;
    std::string race_names_path;   // two-column name<TAB>name map
    std::string term_groups_path;  // sectioned term-group file; [pairs] drives the swap

    bool operator==(const FairnessConfig&) const = default;
};

/// Retrieval settings: candidate pools are BM25 top-k; the boosted setting
/// appends every judged-relevant document missing from the pool.
struct IrConfig {
    std::size_t top_k = 30;
    bool boosted = false;

    bool operator==(const IrConfig&) const = default;
};

/// Optional auxiliary services. When absent, the metrics they feed degrade to
/// absent_reason entries instead of failing the run.
struct AnalysisConfig {
    std::optional<model_gateway::EndpointSpec> toxicity_endpoint;
    /// Embedding service for greedy-matching similarity; defaults to the main
    /// endpoint when unset (the bundled mock serves /embed).
    std::optional<model_gateway::EndpointSpec> embedding_endpoint;
    /// Term groups for mention-balance statistics over generations.
    std::string term_groups_path;

    bool operator==(const AnalysisConfig&) const = default;
};

struct RunConfig {
    corpus::Scenario scenario = corpus::Scenario::sentiment;
    std::string dataset_path;
    model_gateway::EndpointSpec endpoint;
    std::string templates_dir = "data/templates";
    std::string template_id;  // empty: resolved from (scenario, strength)
    std::size_t shots = 0;
    prompting::Strength strength = prompting::Strength::normal;
    std::string wrapper = "none";  // chat wrapper preset
    std::vector<perturbation::PerturbationSpec> perturbations;
    FairnessConfig fairness;
    bool easy_config = false;
    std::size_t bootstrap_iterations = 1000;
    std::size_t parallelism = 1;  // >= 1
    std::uint64_t seed = 0;
    std::string output_dir = "runs";
    IrConfig ir;
    AnalysisConfig analysis;
};

std::string perturbation_kind_to_string(perturbation::Kind k);
perturbation::Kind perturbation_kind_from_string(const std::string& s);

/// Parse a JSON run-config document. `origin` names the source in errors.
/// Unknown keys raise SchemaError so typos cannot silently change a run.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "config");
RunConfig load_run_config(const std::string& path);

/// Canonical JSON of every field that affects results (excludes output_dir
/// and parallelism). Hashed together with the dataset bytes into run_id.
std::string canonical_config(const RunConfig& cfg);
/// 16 hex digits naming the run directory `output_dir/<run_id>`.
std::string run_id(const RunConfig& cfg);

/// Apply one perturbation to every test sample of a dataset (train split,
/// metadata, and document corpus pass through unchanged). Text perturbations
/// rewrite the input fields (context/query) with per-sample seeds derived
/// from spec.seed and the sample id; shuffle_choices permutes options and
/// remaps the gold label.
corpus::ScenarioDataset perturb_dataset(const corpus::ScenarioDataset& ds,
                                        const perturbation::PerturbationSpec& spec);

/// Execute the pipeline: load → perturb/fairness rewrite → sample shots →
/// render → generate / score options → extract → metrics → bootstrap →
/// report. Per-sample artifacts are persisted under the run directory and
/// reloaded on rerun, so interrupted runs resume where they stopped.
/// Endpoint capability gaps degrade the affected metrics with an
/// absent_reason; dataset or transport failures abort.
report::MetricReport run_scenario(const RunConfig& cfg);

/// Recompute the report purely from a run directory's persisted samples and
/// rewrite the report files there (byte-identical to the original run).
report::MetricReport score_run(const std::string& run_dir);

}  // namespace vieval::runner
