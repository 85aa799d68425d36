#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "../support/paths.hpp"
#include "vieval/common.hpp"
#include "vieval/corpus.hpp"
#include "vieval/mock_server.hpp"
#include "vieval/report.hpp"
#include "vieval/runner.hpp"

namespace fs = std::filesystem;
using vieval::report::Format;
using vieval::report::MetricReport;
using vieval::report::MetricValue;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

const MetricValue* find_metric(const MetricReport& r, const std::string& name) {
    for (const auto& [n, v] : r.metrics)
        if (n == name) return &v;
    return nullptr;
}

const MetricValue& metric(const MetricReport& r, const std::string& name) {
    const MetricValue* v = find_metric(r, name);
    REQUIRE_MESSAGE(v != nullptr, "metric missing from report: ", name);
    return *v;
}

/// Fixture mock endpoint: echoes the last ⟦đáp:...⟧ marker in the prompt.
vieval::mock_server::ServerConfig fixture_server_config() {
    return vieval::mock_server::load_server_config(
        testsupport::fixture("e2e/mock_endpoint.json"));
}

vieval::runner::RunConfig e2e_config(const std::string& scenario, int port,
                                     const std::string& out_dir,
                                     const std::string& extra = "") {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["dataset"] = testsupport::fixture("e2e/" + scenario + ".jsonl");
    j["endpoint"] = "http://127.0.0.1:" + std::to_string(port);
    j["templates_dir"] = testsupport::source_dir() + "/data/templates";
    j["bootstrap_iterations"] = 200;
    j["seed"] = 7;
    j["output_dir"] = out_dir;
    if (scenario == "text_classification") j["template_id"] = "text_classification_vsmec";
    if (!extra.empty()) {
        nlohmann::ordered_json more = nlohmann::ordered_json::parse(extra);
        for (auto it = more.begin(); it != more.end(); ++it) j[it.key()] = it.value();
    }
    return vieval::runner::parse_run_config(j.dump(), "test-config");
}

}  // namespace

TEST_CASE("mandated metric lists name every required metric per scenario") {
    using vieval::corpus::Scenario;
    auto names = [](Scenario s) {
        std::vector<std::string> out;
        for (const auto& n : vieval::report::mandated_metrics(s)) out.push_back(n);
        return out;
    };
    CHECK(names(Scenario::sentiment) ==
          std::vector<std::string>{"accuracy", "macro_f1", "auc_roc", "ece", "accuracy_at_10"});
    CHECK(names(Scenario::toxicity_detection) ==
          std::vector<std::string>{"accuracy", "macro_f1", "auc_roc"});
    CHECK(names(Scenario::information_retrieval) ==
          std::vector<std::string>{"mrr_at_10", "ndcg_at_10"});
    CHECK(names(Scenario::reasoning_math) ==
          std::vector<std::string>{"exact_match", "f1", "equivalent"});
    auto lm = names(Scenario::language_modeling_mlm);
    CHECK(lm == std::vector<std::string>{"exact_match", "cer", "wer", "ced", "wed", "perplexity"});
    CHECK(names(Scenario::language_modeling_spelling) == lm);
    auto summ = names(Scenario::summarization);
    CHECK(std::find(summ.begin(), summ.end(), "summac") != summ.end());
    CHECK(std::find(summ.begin(), summ.end(), "coverage") != summ.end());
    auto tr = names(Scenario::translation);
    CHECK(tr.front() == "bleu");
    CHECK(std::find(tr.begin(), tr.end(), "hlepor") != tr.end());
    auto qa = names(Scenario::question_answering);
    CHECK(std::find(qa.begin(), qa.end(), "stereotypical_association") != qa.end());
}

TEST_CASE("report renders and parses losslessly in json and csv") {
    MetricReport r;
    r.run_id = "00ff00ff00ff00ff";
    r.config_hash = "0123456789abcdef";
    r.scenario = vieval::corpus::Scenario::sentiment;
    r.dataset_path = "data/sets/example.jsonl";
    r.endpoint_url = "http://127.0.0.1:9999";
    r.template_id = "sentiment";
    r.shots = 2;
    r.strength = "normal";
    r.easy_config = false;
    r.seed = 42;
    r.bootstrap_iterations = 1000;
    r.n_samples = 50;
    MetricValue acc;
    acc.value = 0.84;
    acc.std_dev = 0.0512345678901234;
    acc.n = 50;
    MetricValue absent;
    absent.absent_reason = "endpoint does not support continuation scoring";
    absent.n = 0;
    r.metrics = {{"accuracy", acc}, {"auc_roc", absent}};
    r.unparsed_rate = 0.02;
    r.samples_path = "samples";

    std::string js = vieval::report::render_json(r);
    MetricReport back = vieval::report::parse_report_json(js);
    CHECK(back == r);
    CHECK(vieval::report::render_json(back) == js);

    std::string csv = vieval::report::render_csv(r);
    auto [rows, unparsed] = vieval::report::parse_report_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].first == "accuracy");
    CHECK(rows[0].second == acc);
    CHECK(rows[1].first == "auc_roc");
    CHECK(rows[1].second == absent);
    REQUIRE(unparsed.has_value());
    CHECK(*unparsed == 0.02);

    std::string md = vieval::report::render_markdown(r);
    CHECK(md.find("| accuracy | auc_roc |") != std::string::npos);  // declared column order
    CHECK(md.find("—") != std::string::npos);                       // absent placeholder
    CHECK(md.find("0.8400 ± 0.0512") != std::string::npos);

    std::string dir = fresh_dir("vieval_rt_report_emit");
    auto written = vieval::report::emit_report(
        r, {Format::json, Format::csv, Format::markdown}, dir);
    CHECK(written.size() == 3);
    CHECK(fs::exists(dir + "/report.json"));
    CHECK(fs::exists(dir + "/report.csv"));
    CHECK(fs::exists(dir + "/report.md"));
    CHECK(slurp(dir + "/report.json") == js);
}

TEST_CASE("run config parser accepts endpoint shorthand and rejects mistakes") {
    using vieval::SchemaError;
    using vieval::runner::parse_run_config;

    std::string ds = fresh_dir("vieval_rt_cfg") + "/d.jsonl";
    spit(ds, "{\"label_names\":[\"a\",\"b\"]}\n"
             "{\"id\":\"s0\",\"context\":\"x\",\"label\":0,\"references\":[\"0\"]}\n");
    std::string base = R"({"scenario":"sentiment","dataset":")" + ds +
                       R"(","endpoint":"http://h:1"})";
    auto cfg = parse_run_config(base);
    CHECK(cfg.endpoint.base_url == "http://h:1");
    CHECK(cfg.parallelism == 1);
    CHECK(cfg.bootstrap_iterations == 1000);

    CHECK_THROWS_AS(parse_run_config(
                        R"({"scenario":"sentiment","dataset":"d","endpoint":"u","bananas":1})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_run_config(
                        R"({"scenario":"sentiment","dataset":"d","endpoint":"u","parallelism":0})"),
                    SchemaError);
    CHECK_THROWS_AS(
        parse_run_config(
            R"({"scenario":"sentiment","dataset":"d","endpoint":"u","fairness":{"swap":["gender"]}})"),
        SchemaError);
    CHECK_THROWS_AS(parse_run_config(R"({"dataset":"d","endpoint":"u"})"), SchemaError);

    // identity of a run ignores where results are written and worker count
    auto a = parse_run_config(base);
    a.output_dir = "here";
    a.parallelism = 1;
    auto b = parse_run_config(base);
    b.output_dir = "there";
    b.parallelism = 8;
    CHECK(vieval::runner::run_id(a) == vieval::runner::run_id(b));
    auto c = parse_run_config(base);
    c.seed = 1;
    CHECK(vieval::runner::run_id(a) != vieval::runner::run_id(c));
    CHECK(vieval::runner::canonical_config(a).find("output_dir") == std::string::npos);
}

TEST_CASE("perturb_dataset rewrites only the test split") {
    vieval::corpus::ScenarioDataset ds;
    ds.scenario = vieval::corpus::Scenario::sentiment;
    ds.label_names = {"A", "B"};
    vieval::corpus::EvalSample tr;
    tr.id = "t0";
    tr.context = "CHỮ HOA GIỮ NGUYÊN";
    tr.references = {"0"};
    tr.label = 0;
    vieval::corpus::EvalSample te;
    te.id = "s0";
    te.context = "CHỮ HOA THÀNH THƯỜNG";
    te.references = {"1"};
    te.label = 1;
    ds.train = {tr};
    ds.test = {te};

    vieval::perturbation::PerturbationSpec spec;
    spec.kind = vieval::perturbation::Kind::lowercase;
    auto out = vieval::runner::perturb_dataset(ds, spec);
    CHECK(out.train[0].context == "CHỮ HOA GIỮ NGUYÊN");
    CHECK(out.test[0].context == "chữ hoa thành thường");
    CHECK(out.test[0].label == 1);  // labels untouched by text perturbations
}

TEST_CASE("sentiment run against the bundled mock is perfect and reproducible") {
    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    std::string dir_a = fresh_dir("vieval_rt_sent_a");
    auto cfg = e2e_config("sentiment", port, dir_a, R"({"parallelism":3})");
    MetricReport rep = vieval::runner::run_scenario(cfg);

    CHECK(rep.n_samples == 50);
    CHECK(rep.scenario == vieval::corpus::Scenario::sentiment);
    CHECK(metric(rep, "accuracy").value == 1.0);
    CHECK(metric(rep, "accuracy").std_dev == 0.0);
    CHECK(metric(rep, "macro_f1").value == 1.0);
    CHECK(metric(rep, "auc_roc").value == 0.5);  // uniform single-char option scores
    CHECK(metric(rep, "ece").value == 0.0);      // confidence 1.0 on all-correct labels
    CHECK(metric(rep, "accuracy_at_10").value == 1.0);
    REQUIRE(rep.unparsed_rate.has_value());
    CHECK(*rep.unparsed_rate == 0.0);

    std::string run_dir = dir_a + "/" + rep.run_id;
    REQUIRE(fs::exists(run_dir + "/report.json"));
    REQUIRE(fs::exists(run_dir + "/run_meta.json"));
    size_t n_records = 0;
    for (const auto& e : fs::directory_iterator(run_dir + "/samples")) {
        (void)e;
        ++n_records;
    }
    CHECK(n_records == 50);

    // same config, different output root: byte-identical report
    std::string dir_b = fresh_dir("vieval_rt_sent_b");
    auto cfg_b = cfg;
    cfg_b.output_dir = dir_b;
    MetricReport rep_b = vieval::runner::run_scenario(cfg_b);
    CHECK(rep_b.run_id == rep.run_id);
    CHECK(slurp(dir_b + "/" + rep_b.run_id + "/report.json") ==
          slurp(run_dir + "/report.json"));

    // offline re-score reproduces the report bytes exactly
    std::string before = slurp(run_dir + "/report.json");
    MetricReport rescored = vieval::runner::score_run(run_dir);
    CHECK(slurp(run_dir + "/report.json") == before);
    CHECK(rescored.run_id == rep.run_id);

    // resume: with every sample persisted, the run completes without the endpoint
    server.stop();
    MetricReport resumed = vieval::runner::run_scenario(cfg);
    CHECK(slurp(run_dir + "/report.json") == before);
    CHECK(resumed.n_samples == 50);
}

TEST_CASE("retrieval ranking matches hand-computed reciprocal rank and gain") {
    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    // Option scores are prompt-independent in the mock, so every document ties
    // and the final ranking is doc-id ascending: [d1, d2, d3] for both queries.
    std::string data_dir = fresh_dir("vieval_rt_ir_toy");
    std::string ds = data_dir + "/toy.jsonl";
    spit(ds, R"({"doc_id":"d1","text":"bến nước đầu làng"}
{"doc_id":"d2","text":"chợ họp ven sông"}
{"doc_id":"d3","text":"đồi chè sau núi"}
{"id":"q1","query":"phiên chợ ở đâu","relevance":{"d2":1}}
{"id":"q2","query":"cảnh quê buổi sáng","relevance":{"d1":1,"d3":2}}
)");

    nlohmann::ordered_json j;
    j["scenario"] = "information_retrieval";
    j["dataset"] = ds;
    j["endpoint"] = "http://127.0.0.1:" + std::to_string(port);
    j["templates_dir"] = testsupport::source_dir() + "/data/templates";
    j["bootstrap_iterations"] = 200;
    j["output_dir"] = fresh_dir("vieval_rt_ir_toy_out");
    auto cfg = vieval::runner::parse_run_config(j.dump());
    MetricReport rep = vieval::runner::run_scenario(cfg);

    // q1: relevant d2 at rank 2 -> RR 1/2; gain 1/log2(3) against ideal 1.
    // q2: d1 (grade 1) rank 1, d3 (grade 2) rank 3 -> RR 1;
    //     gain 1 + 2/log2(4) = 2 against ideal 2 + 1/log2(3).
    double ndcg_q1 = 1.0 / std::log2(3.0);
    double ndcg_q2 = 2.0 / (2.0 + 1.0 / std::log2(3.0));
    CHECK(metric(rep, "mrr_at_10").value == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(metric(rep, "ndcg_at_10").value ==
          doctest::Approx((ndcg_q1 + ndcg_q2) / 2.0).epsilon(1e-12));
    CHECK(metric(rep, "mrr_at_10").n == 2);
    server.stop();
}

TEST_CASE("judged-relevant documents outside the lexical pool are only ranked when boosted") {
    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    std::string out_plain = fresh_dir("vieval_rt_ir_plain");
    auto plain = e2e_config("information_retrieval", port, out_plain);
    MetricReport rep_plain = vieval::runner::run_scenario(plain);
    CHECK(rep_plain.n_samples == 50);
    CHECK(metric(rep_plain, "mrr_at_10").value.has_value());
    CHECK(metric(rep_plain, "ndcg_at_10").value.has_value());

    std::string out_boost = fresh_dir("vieval_rt_ir_boost");
    auto boosted = e2e_config("information_retrieval", port, out_boost,
                              R"({"ir":{"boosted":true}})");
    MetricReport rep_boost = vieval::runner::run_scenario(boosted);

    // query ir-047 shares no vocabulary with its relevant document d38, so the
    // 30-document pool misses it unless judged documents are appended
    auto ranking_of = [](const std::string& root, const MetricReport& r) {
        auto j = nlohmann::json::parse(slurp(root + "/" + r.run_id + "/samples/00047.json"));
        REQUIRE(j.at("sample").at("id").get<std::string>() == "ir-047");
        return j.at("ranking").get<std::vector<std::string>>();
    };
    auto plain_ranking = ranking_of(out_plain, rep_plain);
    auto boost_ranking = ranking_of(out_boost, rep_boost);
    CHECK(plain_ranking.size() == 30);
    CHECK(boost_ranking.size() == 31);
    CHECK(std::find(plain_ranking.begin(), plain_ranking.end(), "d38") == plain_ranking.end());
    CHECK(std::find(boost_ranking.begin(), boost_ranking.end(), "d38") != boost_ranking.end());
    server.stop();
}

TEST_CASE("gender swap rewrites inputs and references together") {
    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    std::string data_dir = fresh_dir("vieval_rt_fair");
    std::string ds = data_dir + "/qa.jsonl";
    spit(ds,
         "{\"id\":\"f0\",\"context\":\"Người đàn ông đứng trước cửa nhà. "
         "⟦đáp:Người đàn ông ⟧\",\"query\":\"Ai đứng trước cửa?\","
         "\"references\":[\"Người đàn ông\"]}\n");

    nlohmann::ordered_json j;
    j["scenario"] = "question_answering";
    j["dataset"] = ds;
    j["endpoint"] = "http://127.0.0.1:" + std::to_string(port);
    j["templates_dir"] = testsupport::source_dir() + "/data/templates";
    j["bootstrap_iterations"] = 50;
    j["output_dir"] = fresh_dir("vieval_rt_fair_out");
    j["fairness"] = {{"swap", {"gender"}},
                     {"term_groups", testsupport::data_file("lexicons/term_groups_vi.txt")}};
    auto cfg = vieval::runner::parse_run_config(j.dump());
    MetricReport rep = vieval::runner::run_scenario(cfg);

    CHECK(metric(rep, "exact_match").value == 1.0);  // gold follows the swap
    auto rec = nlohmann::json::parse(
        slurp(cfg.output_dir + "/" + rep.run_id + "/samples/00000.json"));
    std::string ctx = rec.at("sample").at("context").get<std::string>();
    std::string ref = rec.at("sample").at("references")[0].get<std::string>();
    CHECK(ctx.find("phụ nữ") != std::string::npos);
    CHECK(ctx.find("đàn ông") == std::string::npos);
    CHECK(ref == "Người phụ nữ");
    server.stop();
}

TEST_CASE("unparseable generations count as wrong answers, not errors") {
    vieval::mock_server::ServerConfig scfg;  // no echo rule: canned refusal only
    scfg.model.default_reply = "Xin lỗi, tôi không trả lời được câu hỏi này.";
    vieval::mock_server::MockServer server(scfg);
    int port = server.start();

    auto cfg = e2e_config("sentiment", port, fresh_dir("vieval_rt_unparsed"));
    MetricReport rep = vieval::runner::run_scenario(cfg);
    CHECK(metric(rep, "accuracy").value == 0.0);
    REQUIRE(rep.unparsed_rate.has_value());
    CHECK(*rep.unparsed_rate == 1.0);
    server.stop();
}

TEST_CASE("endpoints without scoring degrade probability metrics with a reason") {
    auto scfg = fixture_server_config();
    scfg.model.scoring_enabled = false;
    vieval::mock_server::MockServer server(scfg);
    int port = server.start();

    auto cfg = e2e_config("sentiment", port, fresh_dir("vieval_rt_noscore"));
    MetricReport rep = vieval::runner::run_scenario(cfg);
    CHECK(metric(rep, "accuracy").value == 1.0);  // extraction path unaffected
    CHECK(metric(rep, "ece").value == 0.0);
    const MetricValue& auc = metric(rep, "auc_roc");
    CHECK_FALSE(auc.value.has_value());
    REQUIRE(auc.absent_reason.has_value());
    CHECK(*auc.absent_reason == "endpoint does not support continuation scoring");
    server.stop();
}

TEST_CASE("character-uniform scoring yields perplexity of exactly two") {
    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    auto cfg = e2e_config("language_modeling_mlm", port, fresh_dir("vieval_rt_mlm"));
    MetricReport rep = vieval::runner::run_scenario(cfg);
    // every token scored at log(1/2): per-sample perplexity is 2 up to rounding
    CHECK(*metric(rep, "perplexity").value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(*metric(rep, "perplexity").std_dev < 1e-12);
    CHECK(metric(rep, "exact_match").value == doctest::Approx(45.0 / 50.0));
    CHECK(*metric(rep, "cer").value < 0.1);
    CHECK(*metric(rep, "wer").value < 0.2);
    server.stop();
}

TEST_CASE("boxed fraction answers count as equivalent but not exact") {
    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    auto cfg = e2e_config("reasoning_math", port, fresh_dir("vieval_rt_math"));
    MetricReport rep = vieval::runner::run_scenario(cfg);
    CHECK(metric(rep, "exact_match").value == doctest::Approx(40.0 / 50.0));
    CHECK(metric(rep, "equivalent").value == doctest::Approx(1.0));
    CHECK(metric(rep, "f1").value.has_value());
    server.stop();
}

TEST_CASE("command line drives run, score, and perturb end to end") {
    if (!fs::exists("./vieval")) return;  // only when invoked from the build tree

    vieval::mock_server::MockServer server(fixture_server_config());
    int port = server.start();

    std::string work = fresh_dir("vieval_rt_cli");
    nlohmann::ordered_json j;
    j["scenario"] = "sentiment";
    j["dataset"] = testsupport::fixture("e2e/sentiment.jsonl");
    j["endpoint"] = "http://127.0.0.1:" + std::to_string(port);
    j["templates_dir"] = testsupport::source_dir() + "/data/templates";
    j["bootstrap_iterations"] = 50;
    j["output_dir"] = work + "/runs";
    spit(work + "/run.json", j.dump(2));

    auto sh = [](const std::string& cmd) {
        int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };

    CHECK(sh("./vieval run --config " + work + "/run.json > " + work + "/run.out 2>&1") == 0);
    std::string run_dir;
    for (const auto& e : fs::directory_iterator(work + "/runs")) run_dir = e.path().string();
    REQUIRE(fs::exists(run_dir + "/report.json"));
    std::string before = slurp(run_dir + "/report.json");

    CHECK(sh("./vieval score --run-dir " + run_dir + " > /dev/null 2>&1") == 0);
    CHECK(slurp(run_dir + "/report.json") == before);

    CHECK(sh("./vieval --definitely-not-a-flag > /dev/null 2>&1") == 2);

    std::string pout = work + "/pert.jsonl";
    CHECK(sh("./vieval perturb --kind lowercase --dataset " +
             testsupport::fixture("e2e/sentiment.jsonl") +
             " --scenario sentiment --out " + pout +
             " --seed 1..3 > /dev/null 2>&1") == 0);
    CHECK(fs::exists(work + "/pert.seed1.jsonl"));
    CHECK(fs::exists(work + "/pert.seed2.jsonl"));
    CHECK(fs::exists(work + "/pert.seed3.jsonl"));
    server.stop();
}
