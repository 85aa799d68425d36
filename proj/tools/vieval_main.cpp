// vieval — command-line surface of the evaluation harness.
//
// Subcommands:
//   run        execute one scenario run from a JSON config file (+ overrides)
//   perturb    apply a perturbation to a dataset and write the result
//   score      recompute a run's report from its persisted samples
//   mock-serve start the bundled deterministic offline endpoint
//
// Exit codes: 0 success, 1 run/command failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vieval/corpus.hpp"
#include "vieval/mock_server.hpp"
#include "vieval/perturbation.hpp"
#include "vieval/report.hpp"
#include "vieval/runner.hpp"

namespace {

/// Parse "--seed" values of the form "N" or "A..B" (inclusive range).
std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
    auto parse_one = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            unsigned long long v = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return static_cast<std::uint64_t>(v);
        } catch (const std::exception&) {
            throw vieval::SchemaError("bad seed '" + text + "' (expected N or A..B)");
        }
    };
    std::size_t dots = text.find("..");
    if (dots == std::string::npos) return {parse_one(text)};
    std::uint64_t lo = parse_one(text.substr(0, dots));
    std::uint64_t hi = parse_one(text.substr(dots + 2));
    if (hi < lo) throw vieval::SchemaError("bad seed range '" + text + "' (end before start)");
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
}

/// d.jsonl + seed 2 -> d.seed2.jsonl (suffix inserted before the extension).
std::string seeded_path(const std::string& out, std::uint64_t seed) {
    std::filesystem::path p(out);
    std::string stem = p.stem().string();
    std::string ext = p.extension().string();
    return (p.parent_path() / (stem + ".seed" + std::to_string(seed) + ext)).string();
}

int run_command(const std::string& config_path, const std::optional<std::string>& dataset,
                const std::optional<std::string>& endpoint_url,
                const std::optional<std::string>& scenario,
                const std::optional<std::string>& template_id,
                const std::optional<std::string>& templates_dir,
                const std::optional<std::size_t>& shots,
                const std::optional<std::string>& strength,
                const std::optional<std::string>& wrapper, bool easy,
                const std::optional<std::size_t>& bootstrap_iterations,
                const std::optional<std::size_t>& parallelism,
                const std::optional<std::uint64_t>& seed,
                const std::optional<std::string>& output_dir) {
    vieval::runner::RunConfig cfg = vieval::runner::load_run_config(config_path);
    if (dataset) cfg.dataset_path = *dataset;
    if (endpoint_url) cfg.endpoint.base_url = *endpoint_url;
    if (scenario) cfg.scenario = vieval::corpus::scenario_from_string(*scenario);
    if (template_id) cfg.template_id = *template_id;
    if (templates_dir) cfg.templates_dir = *templates_dir;
    if (shots) cfg.shots = *shots;
    if (strength) cfg.strength = vieval::prompting::strength_from_string(*strength);
    if (wrapper) cfg.wrapper = *wrapper;
    if (easy) cfg.easy_config = true;
    if (bootstrap_iterations) cfg.bootstrap_iterations = *bootstrap_iterations;
    if (parallelism) cfg.parallelism = *parallelism;
    if (seed) cfg.seed = *seed;
    if (output_dir) cfg.output_dir = *output_dir;

    vieval::report::MetricReport rep = vieval::runner::run_scenario(cfg);
    std::string run_dir =
        (std::filesystem::path(cfg.output_dir) / rep.run_id).string();
    std::cout << vieval::report::render_markdown(rep);
    std::cout << "\nreport written to " << run_dir << "/report.{json,csv,md}\n";
    return 0;
}

int perturb_command(const std::string& kind, const std::string& dataset_path,
                    const std::string& scenario_name, const std::string& out,
                    const std::string& seed_text, double rate,
                    const std::optional<std::string>& typo_lexicon,
                    const std::optional<std::string>& digit_lexicon) {
    auto scenario = vieval::corpus::scenario_from_string(scenario_name);
    auto ds = vieval::corpus::load_dataset(dataset_path, scenario);
    vieval::perturbation::PerturbationSpec spec;
    spec.kind = vieval::runner::perturbation_kind_from_string(kind);
    spec.rate = rate;
    if (typo_lexicon) spec.typo_lexicon = vieval::perturbation::load_lexicon(*typo_lexicon);
    if (digit_lexicon) spec.digit_lexicon = vieval::perturbation::load_lexicon(*digit_lexicon);

    std::vector<std::uint64_t> seeds = parse_seed_range(seed_text);
    for (std::uint64_t s : seeds) {
        spec.seed = s;
        auto perturbed = vieval::runner::perturb_dataset(ds, spec);
        std::string path = seeds.size() == 1 ? out : seeded_path(out, s);
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        if (!file) throw vieval::Error("cannot write '" + path + "'");
        file << vieval::corpus::serialize_dataset(perturbed);
        file.close();
        if (!file) throw vieval::Error("failed writing '" + path + "'");
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vieval — scenario-based evaluation harness for Vietnamese LLM endpoints"};
    app.require_subcommand(1);

    // ---- run ----------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Execute one scenario run from a JSON config file");
    std::string run_config;
    std::optional<std::string> o_dataset, o_endpoint, o_scenario, o_template, o_templates_dir,
        o_strength, o_wrapper, o_output_dir;
    std::optional<std::size_t> o_shots, o_bootstrap, o_parallelism;
    std::optional<std::uint64_t> o_seed;
    bool o_easy = false;
    run->add_option("--config", run_config, "Run-config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--dataset", o_dataset, "Override: dataset path (JSON lines)");
    run->add_option("--endpoint", o_endpoint, "Override: endpoint base URL");
    run->add_option("--scenario", o_scenario, "Override: scenario name");
    run->add_option("--template", o_template, "Override: template id");
    run->add_option("--templates-dir", o_templates_dir, "Override: template directory");
    run->add_option("--shots", o_shots, "Override: few-shot exemplar count");
    run->add_option("--strength", o_strength, "Override: prompt strength (weak|medium|normal)");
    run->add_option("--wrapper", o_wrapper, "Override: chat wrapper preset (none|plain|llama2)");
    run->add_flag("--easy-config", o_easy,
                  "Use the easy generation config (temperature 0.1, top_k 50, "
                  "repetition_penalty 1.0)");
    run->add_option("--bootstrap-iterations", o_bootstrap, "Override: bootstrap replicas");
    run->add_option("--parallelism", o_parallelism, "Override: request worker count (>= 1)");
    run->add_option("--seed", o_seed, "Override: run seed");
    run->add_option("--output-dir", o_output_dir, "Override: report/artifact directory");

    // ---- perturb --------------------------------------------------------------
    auto* perturb = app.add_subcommand(
        "perturb", "Apply a perturbation to a dataset's test split and write the result");
    std::string p_kind, p_dataset, p_scenario, p_out, p_seed = "0";
    double p_rate = 0.10;
    std::optional<std::string> p_typo_lexicon, p_digit_lexicon;
    perturb
        ->add_option("--kind", p_kind,
                     "typo|spacing|lowercase|digits_to_text|shuffle_choices")
        ->required();
    perturb->add_option("--dataset", p_dataset, "Input dataset (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
    perturb->add_option("--scenario", p_scenario, "Scenario the dataset belongs to")->required();
    perturb->add_option("--out", p_out,
                        "Output path; a seed range writes one file per seed "
                        "(name.seedN.ext)")
        ->required();
    perturb->add_option("--seed", p_seed, "Seed: N or an inclusive range A..B");
    perturb->add_option("--rate", p_rate, "Fraction of words altered by typo injection");
    perturb->add_option("--typo-lexicon", p_typo_lexicon, "word<TAB>misspelling file");
    perturb->add_option("--digit-lexicon", p_digit_lexicon, "numeral<TAB>spelled-form file");

    // ---- score ---------------------------------------------------------------
    auto* score = app.add_subcommand(
        "score", "Recompute a run's report from its persisted samples (no generation)");
    std::string s_run_dir;
    score->add_option("--run-dir", s_run_dir, "Run directory (output_dir/<run-id>)")
        ->required()
        ->check(CLI::ExistingDirectory);

    // ---- mock-serve ------------------------------------------------------------
    auto* mock = app.add_subcommand("mock-serve",
                                    "Serve the bundled deterministic offline endpoint");
    std::string m_config, m_host = "127.0.0.1";
    int m_port = 8600;
    mock->add_option("--config", m_config, "Mock endpoint config (JSON)")
        ->check(CLI::ExistingFile);
    mock->add_option("--host", m_host, "Bind address");
    mock->add_option("--port", m_port, "Port (0 picks a free one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed())
            return run_command(run_config, o_dataset, o_endpoint, o_scenario, o_template,
                               o_templates_dir, o_shots, o_strength, o_wrapper, o_easy,
                               o_bootstrap, o_parallelism, o_seed, o_output_dir);
        if (perturb->parsed())
            return perturb_command(p_kind, p_dataset, p_scenario, p_out, p_seed, p_rate,
                                   p_typo_lexicon, p_digit_lexicon);
        if (score->parsed()) {
            vieval::report::MetricReport rep = vieval::runner::score_run(s_run_dir);
            std::cout << vieval::report::render_markdown(rep);
            return 0;
        }
        if (mock->parsed()) {
            vieval::mock_server::ServerConfig cfg;
            if (!m_config.empty()) cfg = vieval::mock_server::load_server_config(m_config);
            vieval::mock_server::MockServer server(std::move(cfg));
            std::cerr << "serving mock endpoint on " << m_host << ":" << m_port << "\n";
            server.run(m_host, m_port);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
