#include "vieval/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "vieval/analysis_services.hpp"
#include "vieval/extraction.hpp"
#include "vieval/fairness_bias.hpp"
#include "vieval/metrics_classification.hpp"
#include "vieval/metrics_ranking.hpp"
#include "vieval/metrics_text.hpp"
#include "vieval/rng.hpp"
#include "vieval/statistics.hpp"

namespace vieval::runner {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Absent-reason texts are shared by run and score so recomputed reports are
// byte-identical.
constexpr const char* kReasonNoScoring = "endpoint does not support continuation scoring";
constexpr const char* kReasonSummac =
    "requires an entailment model; outside the supported endpoint protocol";
constexpr const char* kReasonNoToxEndpoint = "no toxicity classifier endpoint configured";
constexpr const char* kReasonToxUnsupported = "toxicity endpoint does not serve /toxicity";
constexpr const char* kReasonNoEmbed = "endpoint does not provide an /embed service";
constexpr const char* kReasonNoTermGroups = "no demographic term-group file configured";

// ---------------------------------------------------------------------------
// small utilities

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << body;
    out.close();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string iso8601_now() {
    std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const std::string& origin) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw SchemaError(origin + ": unknown key '" + it.key() + "'");
    }
}

std::uint64_t lexicon_fingerprint(const std::map<std::string, std::string>& m) {
    std::string buf;
    for (const auto& [k, v] : m) {
        buf += k;
        buf += '\t';
        buf += v;
        buf += '\n';
    }
    return rng::fnv1a(buf);
}

// ---------------------------------------------------------------------------
// scenario property tables

bool uses_extraction(corpus::Scenario s) {
    using S = corpus::Scenario;
    switch (s) {
        case S::sentiment:
        case S::text_classification:
        case S::knowledge_openended:
        case S::knowledge_mcq:
        case S::toxicity_detection:
        case S::reasoning_synthetic:
        case S::reasoning_math:
        case S::translation:
            return true;
        default:
            return false;
    }
}

/// Scenarios whose predictions are label indices scored by accuracy/F1 and
/// whose options are scored for a probability distribution.
bool is_label_scenario(corpus::Scenario s) {
    using S = corpus::Scenario;
    return s == S::sentiment || s == S::text_classification || s == S::knowledge_mcq ||
           s == S::toxicity_detection;
}

bool is_language_modeling(corpus::Scenario s) {
    return s == corpus::Scenario::language_modeling_mlm ||
           s == corpus::Scenario::language_modeling_spelling;
}

/// Scenarios whose raw generations get toxicity / representation analyses.
bool is_open_generation(corpus::Scenario s) {
    using S = corpus::Scenario;
    return s == S::question_answering || s == S::summarization || s == S::translation;
}

/// JSON field holding the answer in each structured-output scenario.
std::string answer_key(corpus::Scenario s) {
    using S = corpus::Scenario;
    switch (s) {
        case S::sentiment:
            return "sentiment";
        case S::text_classification:
            return "tag";
        case S::knowledge_mcq:
            return "choice";
        case S::toxicity_detection:
            return "toxicity_level";
        case S::translation:
            return "translation";
        default:
            return "answer";
    }
}

// ---------------------------------------------------------------------------
// parsed-scalar helpers

std::string scalar_to_string(const extraction::Scalar& s) {
    if (std::holds_alternative<std::int64_t>(s))
        return std::to_string(std::get<std::int64_t>(s));
    if (std::holds_alternative<double>(s)) return ordered_json(std::get<double>(s)).dump();
    return std::get<std::string>(s);
}

/// Confidence from a parsed confident_level field: numeric or numeric string,
/// clamped to [0, 1]; anything else (or absence) counts as 0.
double confidence_from(const std::map<std::string, extraction::Scalar>& fields) {
    auto it = fields.find("confident_level");
    if (it == fields.end()) return 0.0;
    double v = 0.0;
    if (std::holds_alternative<std::int64_t>(it->second)) {
        v = static_cast<double>(std::get<std::int64_t>(it->second));
    } else if (std::holds_alternative<double>(it->second)) {
        v = std::get<double>(it->second);
    } else {
        const std::string& s = std::get<std::string>(it->second);
        try {
            std::size_t used = 0;
            v = std::stod(s, &used);
            // Trailing junk (e.g. an escaped quote) invalidates the number.
            while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
            if (used != s.size()) return 0.0;
        } catch (const std::exception&) {
            return 0.0;
        }
    }
    return std::clamp(v, 0.0, 1.0);
}

std::string parse_path_to_string(extraction::ParsePath p) {
    switch (p) {
        case extraction::ParsePath::fenced_block:
            return "fenced_block";
        case extraction::ParsePath::bare_object:
            return "bare_object";
        case extraction::ParsePath::regex_fallback:
            return "regex_fallback";
        default:
            return "none";
    }
}

// ---------------------------------------------------------------------------
// per-sample record (persisted as JSON under <run-dir>/samples/)

struct SampleRecord {
    std::size_t ordinal = 0;
    corpus::EvalSample sample;  // after perturbation / fairness rewriting
    std::string prompt;
    bool has_generation = false;
    std::string text;
    std::string finish_reason = "stop";
    double latency_seconds = 0.0;
    std::optional<std::vector<double>> option_logprobs;
    std::optional<std::vector<double>> option_probs;
    std::optional<std::vector<std::pair<std::string, double>>> doc_probs;  // retrieval
    std::optional<std::vector<std::string>> ranking;                       // retrieval
    std::optional<std::vector<double>> reference_logprobs;  // language modeling
    std::optional<double> toxicity_prob;
    std::optional<double> bert;
    std::string parse_path = "none";
    std::map<std::string, extraction::Scalar> fields;
    int predicted = -1;
    double confidence = 0.0;
    std::string prediction_text;
    bool unparsed = false;
};

ordered_json scalar_to_json(const extraction::Scalar& s) {
    if (std::holds_alternative<std::int64_t>(s)) return std::get<std::int64_t>(s);
    if (std::holds_alternative<double>(s)) return std::get<double>(s);
    return std::get<std::string>(s);
}

extraction::Scalar scalar_from_json(const ordered_json& j) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw SchemaError("sample record: field value must be a number or string");
}

ordered_json sample_to_json(const corpus::EvalSample& s) {
    ordered_json j;
    j["id"] = s.id;
    if (s.context) j["context"] = *s.context;
    if (s.query) j["query"] = *s.query;
    if (s.choices) j["choices"] = *s.choices;
    j["references"] = s.references;
    if (s.label) j["label"] = *s.label;
    if (s.relevance) j["relevance"] = *s.relevance;
    return j;
}

corpus::EvalSample sample_from_json(const ordered_json& j, corpus::Scenario scenario) {
    corpus::EvalSample s;
    s.scenario = scenario;
    s.id = j.at("id").get<std::string>();
    if (j.contains("context")) s.context = j.at("context").get<std::string>();
    if (j.contains("query")) s.query = j.at("query").get<std::string>();
    if (j.contains("choices")) s.choices = j.at("choices").get<std::vector<std::string>>();
    s.references = j.at("references").get<std::vector<std::string>>();
    if (j.contains("label")) s.label = j.at("label").get<int>();
    if (j.contains("relevance"))
        s.relevance = j.at("relevance").get<std::map<std::string, int>>();
    return s;
}

ordered_json record_to_json(const SampleRecord& r) {
    ordered_json j;
    j["ordinal"] = r.ordinal;
    j["id"] = r.sample.id;
    j["sample"] = sample_to_json(r.sample);
    j["prompt"] = r.prompt;
    if (r.has_generation) {
        j["generation"] = {{"text", r.text},
                           {"finish_reason", r.finish_reason},
                           {"latency_seconds", r.latency_seconds}};
    }
    if (r.option_logprobs) j["option_logprobs"] = *r.option_logprobs;
    if (r.option_probs) j["option_probs"] = *r.option_probs;
    if (r.doc_probs) {
        ordered_json dp = ordered_json::array();
        for (const auto& [doc, p] : *r.doc_probs) dp.push_back({{"doc_id", doc}, {"prob", p}});
        j["doc_probs"] = std::move(dp);
    }
    if (r.ranking) j["ranking"] = *r.ranking;
    if (r.reference_logprobs) j["reference_logprobs"] = *r.reference_logprobs;
    if (r.toxicity_prob) j["toxicity_prob"] = *r.toxicity_prob;
    if (r.bert) j["bert_score"] = *r.bert;
    j["parse_path"] = r.parse_path;
    if (!r.fields.empty()) {
        ordered_json f;
        for (const auto& [k, v] : r.fields) f[k] = scalar_to_json(v);
        j["fields"] = std::move(f);
    }
    j["predicted"] = r.predicted;
    j["confidence"] = r.confidence;
    j["prediction_text"] = r.prediction_text;
    j["unparsed"] = r.unparsed;
    return j;
}

SampleRecord record_from_json(const ordered_json& j, corpus::Scenario scenario) {
    SampleRecord r;
    r.ordinal = j.at("ordinal").get<std::size_t>();
    r.sample = sample_from_json(j.at("sample"), scenario);
    r.prompt = j.at("prompt").get<std::string>();
    if (j.contains("generation")) {
        r.has_generation = true;
        const auto& g = j.at("generation");
        r.text = g.at("text").get<std::string>();
        r.finish_reason = g.at("finish_reason").get<std::string>();
        r.latency_seconds = g.at("latency_seconds").get<double>();
    }
    if (j.contains("option_logprobs"))
        r.option_logprobs = j.at("option_logprobs").get<std::vector<double>>();
    if (j.contains("option_probs"))
        r.option_probs = j.at("option_probs").get<std::vector<double>>();
    if (j.contains("doc_probs")) {
        std::vector<std::pair<std::string, double>> dp;
        for (const auto& e : j.at("doc_probs"))
            dp.emplace_back(e.at("doc_id").get<std::string>(), e.at("prob").get<double>());
        r.doc_probs = std::move(dp);
    }
    if (j.contains("ranking")) r.ranking = j.at("ranking").get<std::vector<std::string>>();
    if (j.contains("reference_logprobs"))
        r.reference_logprobs = j.at("reference_logprobs").get<std::vector<double>>();
    if (j.contains("toxicity_prob")) r.toxicity_prob = j.at("toxicity_prob").get<double>();
    if (j.contains("bert_score")) r.bert = j.at("bert_score").get<double>();
    r.parse_path = j.at("parse_path").get<std::string>();
    if (j.contains("fields"))
        for (auto it = j.at("fields").begin(); it != j.at("fields").end(); ++it)
            r.fields[it.key()] = scalar_from_json(it.value());
    r.predicted = j.at("predicted").get<int>();
    r.confidence = j.at("confidence").get<double>();
    r.prediction_text = j.at("prediction_text").get<std::string>();
    r.unparsed = j.at("unparsed").get<bool>();
    return r;
}

std::string record_filename(std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%05zu.json", ordinal);
    return buf;
}

// ---------------------------------------------------------------------------
// input rewriting (perturbations + fairness)

void perturb_field(std::optional<std::string>& field, const perturbation::PerturbationSpec& spec,
                   const std::string& sample_id, const char* tag) {
    if (!field) return;
    std::uint64_t seed = rng::derive_seed(spec.seed, rng::fnv1a(sample_id + "#" + tag));
    switch (spec.kind) {
        case perturbation::Kind::typo: {
            perturbation::PerturbationSpec local = spec;
            local.seed = seed;
            *field = perturbation::inject_typos(*field, local);
            break;
        }
        case perturbation::Kind::spacing:
            *field = perturbation::perturb_spacing(*field, seed);
            break;
        case perturbation::Kind::lowercase:
            *field = perturbation::to_lowercase(*field);
            break;
        case perturbation::Kind::digits_to_text:
            *field = perturbation::digits_to_text(*field, spec.digit_lexicon);
            break;
        default:
            break;
    }
}

corpus::EvalSample apply_perturbation(const corpus::EvalSample& sample,
                                      const perturbation::PerturbationSpec& spec) {
    if (spec.kind == perturbation::Kind::shuffle_choices) {
        if (!sample.choices) return sample;
        return perturbation::shuffle_choices(sample, spec.seed);
    }
    corpus::EvalSample s = sample;
    perturb_field(s.context, spec, sample.id, "context");
    perturb_field(s.query, spec, sample.id, "query");
    return s;
}

/// Demographic swaps rewrite everything the model sees plus the gold answer
/// texts, so a swapped input keeps a matching reference; label indices stay
/// (their choice/label text moved with the swap).
void apply_fairness(corpus::EvalSample& s, const std::map<std::string, std::string>* race_map,
                    const std::map<std::string, std::string>* gender_map) {
    auto rewrite = [&](std::string& text) {
        if (race_map) text = fairness_bias::swap_race_names(text, *race_map);
        if (gender_map) text = fairness_bias::swap_gender_terms(text, *gender_map);
    };
    if (s.context) rewrite(*s.context);
    if (s.query) rewrite(*s.query);
    if (s.choices)
        for (auto& c : *s.choices) rewrite(c);
    for (auto& ref : s.references) rewrite(ref);
}

// ---------------------------------------------------------------------------
// metric computation (shared by run_scenario and score_run)

struct ComputeMeta {
    corpus::Scenario scenario = corpus::Scenario::sentiment;
    std::vector<std::string> label_names;
    int n_labels = 0;
    std::size_t bootstrap_iterations = 1000;
    std::uint64_t seed = 0;
    bool scoring_supported = true;
    bool toxicity_configured = false;
    bool toxicity_supported = false;
    bool embedding_supported = false;
    std::string term_groups_path;
    // report identity
    std::string run_id;
    std::string config_hash;
    std::string dataset_path;
    std::string endpoint_url;
    std::string template_id;
    std::size_t shots = 0;
    std::string strength;
    bool easy_config = false;
};

report::MetricReport compute_report(const std::vector<SampleRecord>& records,
                                    const ComputeMeta& m) {
    using metrics_classification::LabeledPrediction;
    using metrics_text::TextPair;

    report::MetricReport rep;
    rep.run_id = m.run_id;
    rep.config_hash = m.config_hash;
    rep.scenario = m.scenario;
    rep.dataset_path = m.dataset_path;
    rep.endpoint_url = m.endpoint_url;
    rep.template_id = m.template_id;
    rep.shots = m.shots;
    rep.strength = m.strength;
    rep.easy_config = m.easy_config;
    rep.seed = m.seed;
    rep.bootstrap_iterations = m.bootstrap_iterations;
    rep.n_samples = records.size();
    rep.samples_path = "samples";

    auto metric_seed = [&](const std::string& name) {
        return rng::derive_seed(m.seed, rng::fnv1a(name));
    };
    auto absent = [](const std::string& reason) {
        report::MetricValue v;
        v.absent_reason = reason;
        return v;
    };
    // Mean of per-sample values; std from resampling those values.
    auto bootstrap_mean = [&](const std::string& name,
                              const std::vector<double>& vals) -> report::MetricValue {
        if (vals.empty()) throw UndefinedMetricError(name + ": no contributing samples");
        auto r = statistics::bootstrap(vals, m.bootstrap_iterations, metric_seed(name));
        report::MetricValue v;
        v.value = r.mean;
        v.std_dev = r.std;
        v.n = vals.size();
        return v;
    };
    // Set-level statistic recomputed per bootstrap replica.
    auto bootstrap_set = [&](const std::string& name, std::size_t n,
                             const statistics::SetStatistic& f) -> report::MetricValue {
        if (n == 0) throw UndefinedMetricError(name + ": no contributing samples");
        auto r = statistics::bootstrap(n, f, m.bootstrap_iterations, metric_seed(name));
        report::MetricValue v;
        v.value = r.mean;
        v.std_dev = r.std;
        v.n = n;
        return v;
    };

    auto collect = [&](auto value_of) {
        std::vector<double> vals;
        vals.reserve(records.size());
        for (const auto& r : records) {
            std::optional<double> v = value_of(r);
            if (v) vals.push_back(*v);
        }
        return vals;
    };
    auto pair_of = [](const SampleRecord& r) {
        return TextPair{r.prediction_text, r.sample.references};
    };

    // Label-scenario views.
    auto labeled = [&]() {
        std::vector<LabeledPrediction> out;
        out.reserve(records.size());
        for (const auto& r : records)
            out.push_back({r.sample.label.value_or(0), r.predicted, r.confidence});
        return out;
    };
    // (probability row padded to n_labels, gold) for records that were scored.
    auto prob_rows = [&]() {
        std::vector<std::vector<double>> probs;
        std::vector<int> gold;
        for (const auto& r : records) {
            if (!r.option_probs || !r.sample.label) continue;
            std::vector<double> row = *r.option_probs;
            row.resize(static_cast<std::size_t>(m.n_labels), 0.0);
            probs.push_back(std::move(row));
            gold.push_back(*r.sample.label);
        }
        return std::make_pair(std::move(probs), std::move(gold));
    };

    // Generation-analysis inputs (raw output texts).
    auto generations = [&]() {
        std::vector<std::string> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.text);
        return out;
    };

    std::optional<fairness_bias::TermGroups> groups;
    if (!m.term_groups_path.empty())
        groups = fairness_bias::load_term_groups(m.term_groups_path);

    for (const std::string& name : report::mandated_metrics(m.scenario)) {
        auto guarded = [&](auto fn) {
            try {
                rep.metrics.emplace_back(name, fn());
            } catch (const UndefinedMetricError& e) {
                rep.metrics.emplace_back(name, absent(e.what()));
            }
        };

        if (name == "summac") {
            rep.metrics.emplace_back(name, absent(kReasonSummac));
        } else if (name == "exact_match") {
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          return std::optional<double>(
                                              metrics_text::exact_match(pair_of(r)));
                                      }));
            });
        } else if (name == "f1") {
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          return std::optional<double>(
                                              metrics_text::token_f1(pair_of(r)));
                                      }));
            });
        } else if (name == "equivalent") {
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          double v = extraction::math_equivalent(
                                                         r.prediction_text,
                                                         r.sample.references.at(0))
                                                         ? 1.0
                                                         : 0.0;
                                          return std::optional<double>(v);
                                      }));
            });
        } else if (name == "rouge1" || name == "rouge2" || name == "rouge_l") {
            metrics_text::RougeVariant variant =
                name == "rouge1" ? metrics_text::RougeVariant::R1
                                 : (name == "rouge2" ? metrics_text::RougeVariant::R2
                                                     : metrics_text::RougeVariant::RL);
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          return std::optional<double>(
                                              metrics_text::rouge(pair_of(r), variant));
                                      }));
            });
        } else if (name == "coverage" || name == "density" || name == "compression") {
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          auto fsx = metrics_text::fragment_stats(
                                              r.sample.context.value_or(""), r.text);
                                          double v = name == "coverage"
                                                         ? fsx.coverage
                                                         : (name == "density" ? fsx.density
                                                                              : fsx.compression);
                                          return std::optional<double>(v);
                                      }));
            });
        } else if (name == "bert_score") {
            if (!m.embedding_supported) {
                rep.metrics.emplace_back(name, absent(kReasonNoEmbed));
            } else {
                guarded([&] {
                    return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                              return r.bert;
                                          }));
                });
            }
        } else if (name == "cer" || name == "wer" || name == "ced" || name == "wed") {
            guarded([&] {
                return bootstrap_mean(
                    name, collect([&](const SampleRecord& r) -> std::optional<double> {
                        auto em = metrics_text::edit_metrics(r.sample.references.at(0),
                                                             r.prediction_text);
                        if (name == "ced") return em.ced;
                        if (name == "wed") return em.wed;
                        if (name == "cer") return em.cer;
                        return em.wer;
                    }));
            });
        } else if (name == "perplexity") {
            if (!m.scoring_supported) {
                rep.metrics.emplace_back(name, absent(kReasonNoScoring));
            } else {
                guarded([&] {
                    return bootstrap_mean(
                        name, collect([&](const SampleRecord& r) -> std::optional<double> {
                            if (!r.reference_logprobs) return std::nullopt;
                            return metrics_text::perplexity(*r.reference_logprobs);
                        }));
                });
            }
        } else if (name == "accuracy") {
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          double v = r.sample.label &&
                                                             r.predicted == *r.sample.label
                                                         ? 1.0
                                                         : 0.0;
                                          return std::optional<double>(v);
                                      }));
            });
        } else if (name == "macro_f1") {
            guarded([&] {
                auto preds = labeled();
                return bootstrap_set(name, preds.size(), [&, preds](const auto& idx) {
                    std::vector<LabeledPrediction> subset;
                    subset.reserve(idx.size());
                    for (std::size_t i : idx) subset.push_back(preds[i]);
                    return metrics_classification::macro_f1(subset, m.n_labels);
                });
            });
        } else if (name == "auc_roc") {
            if (!m.scoring_supported) {
                rep.metrics.emplace_back(name, absent(kReasonNoScoring));
            } else {
                guarded([&] {
                    auto [probs, gold] = prob_rows();
                    if (probs.empty())
                        throw UndefinedMetricError(name + ": no scored samples");
                    if (m.n_labels == 2) {
                        std::vector<std::pair<double, int>> pairs;
                        pairs.reserve(probs.size());
                        for (std::size_t i = 0; i < probs.size(); ++i)
                            pairs.emplace_back(probs[i][1], gold[i]);
                        return bootstrap_set(name, pairs.size(),
                                             [&, pairs](const auto& idx) {
                                                 std::vector<std::pair<double, int>> sub;
                                                 sub.reserve(idx.size());
                                                 for (std::size_t i : idx)
                                                     sub.push_back(pairs[i]);
                                                 return metrics_classification::auc_roc(sub);
                                             });
                    }
                    return bootstrap_set(
                        name, probs.size(), [&, probs, gold](const auto& idx) {
                            std::vector<std::vector<double>> sp;
                            std::vector<int> sg;
                            sp.reserve(idx.size());
                            sg.reserve(idx.size());
                            for (std::size_t i : idx) {
                                sp.push_back(probs[i]);
                                sg.push_back(gold[i]);
                            }
                            return metrics_classification::auc_roc_ovr(sp, sg);
                        });
                });
            }
        } else if (name == "ece") {
            guarded([&] {
                auto preds = labeled();
                return bootstrap_set(name, preds.size(), [preds](const auto& idx) {
                    std::vector<LabeledPrediction> subset;
                    subset.reserve(idx.size());
                    for (std::size_t i : idx) subset.push_back(preds[i]);
                    return metrics_classification::ece(subset, 10);
                });
            });
        } else if (name == "accuracy_at_10") {
            guarded([&] {
                auto preds = labeled();
                return bootstrap_set(name, preds.size(), [preds](const auto& idx) {
                    std::vector<LabeledPrediction> subset;
                    subset.reserve(idx.size());
                    for (std::size_t i : idx) subset.push_back(preds[i]);
                    return metrics_classification::accuracy_at_coverage(subset, 10.0);
                });
            });
        } else if (name == "mrr_at_10" || name == "ndcg_at_10") {
            if (!m.scoring_supported) {
                rep.metrics.emplace_back(name, absent(kReasonNoScoring));
            } else {
                guarded([&] {
                    return bootstrap_mean(
                        name, collect([&](const SampleRecord& r) -> std::optional<double> {
                            if (!r.ranking || !r.sample.relevance) return std::nullopt;
                            metrics_ranking::RankedList list{r.sample.id, *r.ranking,
                                                             *r.sample.relevance};
                            try {
                                return name == "mrr_at_10"
                                           ? metrics_ranking::mrr_at_k(list, 10)
                                           : metrics_ranking::ndcg_at_k(list, 10);
                            } catch (const UndefinedMetricError&) {
                                return std::nullopt;  // no judged-relevant doc for the query
                            }
                        }));
                });
            }
        } else if (name == "bleu") {
            guarded([&] {
                std::vector<TextPair> pairs;
                pairs.reserve(records.size());
                for (const auto& r : records) pairs.push_back(pair_of(r));
                return bootstrap_set(name, pairs.size(), [pairs](const auto& idx) {
                    std::vector<TextPair> sub;
                    sub.reserve(idx.size());
                    for (std::size_t i : idx) sub.push_back(pairs[i]);
                    return metrics_text::bleu(sub);
                });
            });
        } else if (name == "hlepor") {
            guarded([&] {
                return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                          return std::optional<double>(
                                              metrics_text::hlepor(pair_of(r)));
                                      }));
            });
        } else if (name == "toxicity") {
            if (!m.toxicity_configured) {
                rep.metrics.emplace_back(name, absent(kReasonNoToxEndpoint));
            } else if (!m.toxicity_supported) {
                rep.metrics.emplace_back(name, absent(kReasonToxUnsupported));
            } else {
                guarded([&] {
                    return bootstrap_mean(name, collect([&](const SampleRecord& r) {
                                              return r.toxicity_prob;
                                          }));
                });
            }
        } else if (name == "demographic_representation" ||
                   name == "stereotypical_association") {
            if (!groups) {
                rep.metrics.emplace_back(name, absent(kReasonNoTermGroups));
            } else {
                guarded([&] {
                    auto texts = generations();
                    bool dr = name == "demographic_representation";
                    return bootstrap_set(name, texts.size(), [&, texts, dr](const auto& idx) {
                        std::vector<std::string> sub;
                        sub.reserve(idx.size());
                        for (std::size_t i : idx) sub.push_back(texts[i]);
                        return dr ? fairness_bias::demographic_representation(sub, *groups)
                                  : fairness_bias::stereotypical_association(sub, *groups);
                    });
                });
            }
        } else {
            throw SchemaError("no computation rule for metric '" + name + "'");
        }
    }

    if (uses_extraction(m.scenario)) {
        std::size_t bad = 0;
        for (const auto& r : records) bad += r.unparsed ? 1 : 0;
        rep.unparsed_rate =
            records.empty() ? 0.0 : static_cast<double>(bad) / static_cast<double>(records.size());
    }
    return rep;
}

std::string letter_option(std::size_t index) { return std::string(1, char('A' + index)); }

}  // namespace

// ---------------------------------------------------------------------------
// public helpers

std::string perturbation_kind_to_string(perturbation::Kind k) {
    switch (k) {
        case perturbation::Kind::typo:
            return "typo";
        case perturbation::Kind::spacing:
            return "spacing";
        case perturbation::Kind::lowercase:
            return "lowercase";
        case perturbation::Kind::digits_to_text:
            return "digits_to_text";
        case perturbation::Kind::shuffle_choices:
            return "shuffle_choices";
    }
    throw SchemaError("unknown perturbation kind");
}

perturbation::Kind perturbation_kind_from_string(const std::string& s) {
    if (s == "typo") return perturbation::Kind::typo;
    if (s == "spacing") return perturbation::Kind::spacing;
    if (s == "lowercase") return perturbation::Kind::lowercase;
    if (s == "digits_to_text") return perturbation::Kind::digits_to_text;
    if (s == "shuffle_choices") return perturbation::Kind::shuffle_choices;
    throw SchemaError("unknown perturbation kind '" + s +
                      "' (expected typo|spacing|lowercase|digits_to_text|shuffle_choices)");
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

model_gateway::EndpointSpec parse_endpoint(const ordered_json& j, const std::string& origin) {
    model_gateway::EndpointSpec e;
    if (j.is_string()) {
        e.base_url = j.get<std::string>();
    } else if (j.is_object()) {
        check_keys(j,
                   {"base_url", "timeout_seconds", "max_retries", "retry_base_delay_seconds",
                    "headers"},
                   origin);
        e.base_url = j.at("base_url").get<std::string>();
        if (j.contains("timeout_seconds")) e.timeout_seconds = j.at("timeout_seconds").get<double>();
        if (j.contains("max_retries")) e.max_retries = j.at("max_retries").get<int>();
        if (j.contains("retry_base_delay_seconds"))
            e.retry_base_delay_seconds = j.at("retry_base_delay_seconds").get<double>();
        if (j.contains("headers"))
            e.headers = j.at("headers").get<std::map<std::string, std::string>>();
    } else {
        throw SchemaError(origin + ": endpoint must be a URL string or an object");
    }
    if (e.base_url.empty()) throw SchemaError(origin + ": endpoint base_url is empty");
    return e;
}

perturbation::PerturbationSpec parse_perturbation(const ordered_json& j,
                                                  const std::string& origin) {
    if (!j.is_object()) throw SchemaError(origin + ": perturbation must be an object");
    check_keys(j, {"kind", "rate", "seed", "typo_lexicon", "digit_lexicon"}, origin);
    perturbation::PerturbationSpec spec;
    spec.kind = perturbation_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("rate")) spec.rate = j.at("rate").get<double>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("typo_lexicon"))
        spec.typo_lexicon = perturbation::load_lexicon(j.at("typo_lexicon").get<std::string>());
    if (j.contains("digit_lexicon"))
        spec.digit_lexicon =
            perturbation::load_lexicon(j.at("digit_lexicon").get<std::string>());
    return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw SchemaError(origin + ": config must be a JSON object");
    check_keys(j,
               {"scenario", "dataset", "endpoint", "templates_dir", "template_id", "shots",
                "strength", "wrapper", "perturbations", "fairness", "easy_config",
                "bootstrap_iterations", "parallelism", "seed", "output_dir", "ir", "analysis"},
               origin);
    RunConfig cfg;
    try {
        cfg.scenario = corpus::scenario_from_string(j.at("scenario").get<std::string>());
        cfg.dataset_path = j.at("dataset").get<std::string>();
        cfg.endpoint = parse_endpoint(j.at("endpoint"), origin + ".endpoint");
        if (j.contains("templates_dir"))
            cfg.templates_dir = j.at("templates_dir").get<std::string>();
        if (j.contains("template_id")) cfg.template_id = j.at("template_id").get<std::string>();
        if (j.contains("shots")) cfg.shots = j.at("shots").get<std::size_t>();
        if (j.contains("strength"))
            cfg.strength = prompting::strength_from_string(j.at("strength").get<std::string>());
        if (j.contains("wrapper")) cfg.wrapper = j.at("wrapper").get<std::string>();
        if (j.contains("perturbations")) {
            if (!j.at("perturbations").is_array())
                throw SchemaError(origin + ": perturbations must be an array");
            for (const auto& p : j.at("perturbations"))
                cfg.perturbations.push_back(parse_perturbation(p, origin + ".perturbations"));
        }
        if (j.contains("fairness")) {
            const auto& f = j.at("fairness");
            check_keys(f, {"swap", "race_names", "term_groups"}, origin + ".fairness");
            for (const auto& s : f.at("swap")) {
                std::string kind = s.get<std::string>();
                if (kind == "race")
                    cfg.fairness.swap_race = true;
                else if (kind == "gender")
                    cfg.fairness.swap_gender = true;
                else
                    throw SchemaError(origin + ".fairness: unknown swap '" + kind + "'");
            }
            if (f.contains("race_names"))
                cfg.fairness.race_names_path = f.at("race_names").get<std::string>();
            if (f.contains("term_groups"))
                cfg.fairness.term_groups_path = f.at("term_groups").get<std::string>();
            if (cfg.fairness.swap_race && cfg.fairness.race_names_path.empty())
                throw SchemaError(origin + ".fairness: race swap needs race_names");
            if (cfg.fairness.swap_gender && cfg.fairness.term_groups_path.empty())
                throw SchemaError(origin + ".fairness: gender swap needs term_groups");
        }
        if (j.contains("easy_config")) cfg.easy_config = j.at("easy_config").get<bool>();
        if (j.contains("bootstrap_iterations"))
            cfg.bootstrap_iterations = j.at("bootstrap_iterations").get<std::size_t>();
        if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<std::size_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("ir")) {
            const auto& ir = j.at("ir");
            check_keys(ir, {"top_k", "boosted"}, origin + ".ir");
            if (ir.contains("top_k")) cfg.ir.top_k = ir.at("top_k").get<std::size_t>();
            if (ir.contains("boosted")) cfg.ir.boosted = ir.at("boosted").get<bool>();
        }
        if (j.contains("analysis")) {
            const auto& a = j.at("analysis");
            check_keys(a, {"toxicity_endpoint", "embedding_endpoint", "term_groups"},
                       origin + ".analysis");
            if (a.contains("toxicity_endpoint"))
                cfg.analysis.toxicity_endpoint =
                    parse_endpoint(a.at("toxicity_endpoint"), origin + ".analysis.toxicity");
            if (a.contains("embedding_endpoint"))
                cfg.analysis.embedding_endpoint =
                    parse_endpoint(a.at("embedding_endpoint"), origin + ".analysis.embedding");
            if (a.contains("term_groups"))
                cfg.analysis.term_groups_path = a.at("term_groups").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    if (cfg.parallelism < 1) throw SchemaError(origin + ": parallelism must be >= 1");
    if (cfg.bootstrap_iterations < 1)
        throw SchemaError(origin + ": bootstrap_iterations must be >= 1");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path), path);
}

std::string canonical_config(const RunConfig& cfg) {
    ordered_json j;
    j["scenario"] = corpus::scenario_to_string(cfg.scenario);
    j["dataset_path"] = cfg.dataset_path;
    j["endpoint"] = {{"base_url", cfg.endpoint.base_url},
                     {"timeout_seconds", cfg.endpoint.timeout_seconds},
                     {"max_retries", cfg.endpoint.max_retries},
                     {"retry_base_delay_seconds", cfg.endpoint.retry_base_delay_seconds}};
    j["templates_dir"] = cfg.templates_dir;
    j["template_id"] = cfg.template_id;
    j["shots"] = cfg.shots;
    j["strength"] = prompting::strength_to_string(cfg.strength);
    j["wrapper"] = cfg.wrapper;
    j["perturbations"] = ordered_json::array();
    for (const auto& p : cfg.perturbations) {
        j["perturbations"].push_back(
            {{"kind", perturbation_kind_to_string(p.kind)},
             {"rate", p.rate},
             {"seed", p.seed},
             {"typo_lexicon", hex64(lexicon_fingerprint(p.typo_lexicon))},
             {"digit_lexicon", hex64(lexicon_fingerprint(p.digit_lexicon))}});
    }
    j["fairness"] = {{"swap_race", cfg.fairness.swap_race},
                     {"swap_gender", cfg.fairness.swap_gender},
                     {"race_names", cfg.fairness.race_names_path},
                     {"term_groups", cfg.fairness.term_groups_path}};
    j["easy_config"] = cfg.easy_config;
    j["bootstrap_iterations"] = cfg.bootstrap_iterations;
    j["seed"] = cfg.seed;
    j["ir"] = {{"top_k", cfg.ir.top_k}, {"boosted", cfg.ir.boosted}};
    j["analysis"] = {
        {"toxicity_endpoint", cfg.analysis.toxicity_endpoint
                                  ? ordered_json(cfg.analysis.toxicity_endpoint->base_url)
                                  : ordered_json(nullptr)},
        {"embedding_endpoint", cfg.analysis.embedding_endpoint
                                   ? ordered_json(cfg.analysis.embedding_endpoint->base_url)
                                   : ordered_json(nullptr)},
        {"term_groups", cfg.analysis.term_groups_path}};
    return j.dump();
}

std::string run_id(const RunConfig& cfg) {
    std::string canon = canonical_config(cfg);
    std::uint64_t dataset_hash = rng::fnv1a(read_file(cfg.dataset_path));
    return hex64(rng::fnv1a(canon + "|" + hex64(dataset_hash)));
}

corpus::ScenarioDataset perturb_dataset(const corpus::ScenarioDataset& ds,
                                        const perturbation::PerturbationSpec& spec) {
    corpus::ScenarioDataset out = ds;
    for (auto& s : out.test) s = apply_perturbation(s, spec);
    return out;
}

// ---------------------------------------------------------------------------
// run_scenario

namespace {

/// Everything the worker loop needs, fixed before the pool starts.
struct RunState {
    const RunConfig* cfg = nullptr;
    corpus::Scenario scenario = corpus::Scenario::sentiment;
    const prompting::PromptTemplate* tmpl = nullptr;
    prompting::ChatWrapper wrapper;
    prompting::RenderEnv env;
    std::vector<corpus::EvalSample> shots;
    std::vector<std::string> label_names;
    int n_labels = 0;
    const std::map<std::string, std::string>* docs = nullptr;
    std::map<std::string, std::vector<std::string>> pools;  // retrieval candidates
    model_gateway::GenerationConfig gen_base;
    std::optional<model_gateway::EndpointSpec> embedding;
    std::atomic<bool> scoring_ok{true};
    std::atomic<bool> toxicity_ok{true};
    std::atomic<bool> embedding_ok{true};
};

void extract_answer(const RunState& st, SampleRecord& r) {
    const corpus::Scenario sc = st.scenario;
    const std::string key = answer_key(sc);
    auto parsed = extraction::extract_structured(r.text, {key, "confident_level"});
    r.parse_path = parse_path_to_string(parsed.parse_path);
    r.fields = parsed.fields;
    r.confidence = confidence_from(parsed.fields);

    if (sc == corpus::Scenario::reasoning_math) {
        // The boxed form in the raw text wins; the answer field is a fallback.
        auto boxed = extraction::extract_boxed(r.text);
        if (boxed) {
            r.prediction_text = *boxed;
            r.unparsed = false;
        } else {
            r.unparsed = true;
        }
        return;
    }
    if (is_label_scenario(sc)) {
        int n = sc == corpus::Scenario::knowledge_mcq
                    ? static_cast<int>(r.sample.choices ? r.sample.choices->size() : 0)
                    : st.n_labels;
        auto label = extraction::match_label(parsed, st.label_names, n);
        if (label) {
            r.predicted = *label;
            r.unparsed = false;
        } else {
            r.predicted = -1;
            r.confidence = 0.0;
            r.unparsed = true;
        }
        return;
    }
    auto it = parsed.fields.find(key);
    if (it != parsed.fields.end()) {
        r.prediction_text = scalar_to_string(it->second);
        r.unparsed = false;
    } else {
        r.unparsed = true;
    }
}

SampleRecord process_sample(RunState& st, model_gateway::HttpBackend& backend,
                            std::size_t ordinal, const corpus::EvalSample& sample) {
    SampleRecord r;
    r.ordinal = ordinal;
    r.sample = sample;
    const corpus::Scenario sc = st.scenario;

    if (sc == corpus::Scenario::information_retrieval) {
        auto pool_it = st.pools.find(sample.id);
        const std::vector<std::string>& pool =
            pool_it == st.pools.end() ? std::vector<std::string>{} : pool_it->second;
        std::vector<std::pair<std::string, double>> dp;
        dp.reserve(pool.size());
        for (const std::string& doc_id : pool) {
            corpus::EvalSample view = sample;
            view.context = st.docs->at(doc_id);
            std::string prompt = prompting::render(*st.tmpl, view, st.shots, st.wrapper, st.env);
            if (r.prompt.empty()) r.prompt = prompt;  // keep one prompt for audit
            if (!st.scoring_ok.load()) break;
            try {
                double lp_yes = backend.score_continuation(prompt, "Yes");
                double lp_no = backend.score_continuation(prompt, "No");
                auto scores = metrics_classification::option_probs({lp_yes, lp_no});
                dp.emplace_back(doc_id, scores.probs[0]);
            } catch (const CapabilityError&) {
                st.scoring_ok.store(false);
                break;
            }
        }
        if (st.scoring_ok.load() && dp.size() == pool.size()) {
            r.ranking = metrics_ranking::rerank_by_probability(dp);
            r.doc_probs = std::move(dp);
        }
        return r;
    }

    r.prompt = prompting::render(*st.tmpl, sample, st.shots, st.wrapper, st.env);
    model_gateway::GenerationConfig gc = st.gen_base;
    gc.seed = rng::derive_seed(st.cfg->seed, rng::fnv1a(sample.id));
    model_gateway::ModelOutput out = backend.generate(r.prompt, gc);
    r.has_generation = true;
    r.text = out.text;
    r.finish_reason = model_gateway::finish_reason_to_string(out.finish_reason);
    r.latency_seconds = out.latency_seconds;
    r.prediction_text = r.text;

    if (is_label_scenario(sc) && st.scoring_ok.load()) {
        std::vector<std::string> options;
        if (sc == corpus::Scenario::knowledge_mcq) {
            std::size_t n = sample.choices ? sample.choices->size() : 0;
            for (std::size_t i = 0; i < n; ++i) options.push_back(letter_option(i));
        } else {
            for (int i = 0; i < st.n_labels; ++i) options.push_back(std::to_string(i));
        }
        try {
            std::vector<double> logprobs;
            logprobs.reserve(options.size());
            for (const auto& opt : options)
                logprobs.push_back(backend.score_continuation(r.prompt, opt));
            auto scores = metrics_classification::option_probs(logprobs);
            r.option_logprobs = std::move(logprobs);
            r.option_probs = scores.probs;
        } catch (const CapabilityError&) {
            st.scoring_ok.store(false);
        }
    }

    if (is_language_modeling(sc) && st.scoring_ok.load()) {
        try {
            r.reference_logprobs = backend.score_tokens(r.prompt, sample.references.at(0));
        } catch (const CapabilityError&) {
            st.scoring_ok.store(false);
        }
    }

    if (uses_extraction(sc)) extract_answer(st, r);

    if (is_open_generation(sc) && st.cfg->analysis.toxicity_endpoint &&
        st.toxicity_ok.load()) {
        try {
            auto verdicts =
                analysis_services::classify_toxicity(*st.cfg->analysis.toxicity_endpoint,
                                                     {r.text});
            r.toxicity_prob = verdicts.at(0).p_toxic;
        } catch (const CapabilityError&) {
            st.toxicity_ok.store(false);
        }
    }

    if (sc == corpus::Scenario::summarization && st.embedding && st.embedding_ok.load()) {
        try {
            r.bert = analysis_services::bert_score(
                *st.embedding, metrics_text::TextPair{r.text, sample.references});
        } catch (const CapabilityError&) {
            st.embedding_ok.store(false);
        } catch (const UndefinedMetricError&) {
            // blank output or unusable references: this sample contributes nothing
        }
    }
    return r;
}

void validate_samples(const RunConfig& cfg, const std::vector<corpus::EvalSample>& tests) {
    const corpus::Scenario sc = cfg.scenario;
    for (const auto& s : tests) {
        if (is_label_scenario(sc) && !s.label)
            throw SchemaError("sample '" + s.id + "': missing gold label");
        if (sc == corpus::Scenario::knowledge_mcq &&
            (!s.choices || s.choices->size() < 2))
            throw SchemaError("sample '" + s.id + "': multiple-choice needs >= 2 choices");
        if (sc == corpus::Scenario::information_retrieval) {
            if (!s.query) throw SchemaError("sample '" + s.id + "': missing query");
            if (!s.relevance || s.relevance->empty())
                throw SchemaError("sample '" + s.id + "': missing relevance judgments");
        } else if (!is_label_scenario(sc) && s.references.empty()) {
            throw SchemaError("sample '" + s.id + "': missing references");
        }
    }
}

}  // namespace

report::MetricReport run_scenario(const RunConfig& cfg) {
    if (cfg.parallelism < 1) throw SchemaError("parallelism must be >= 1");
    if (cfg.bootstrap_iterations < 1) throw SchemaError("bootstrap_iterations must be >= 1");
    if (cfg.scenario == corpus::Scenario::information_retrieval && cfg.shots > 0)
        throw SchemaError("few-shot prompting is not supported for information_retrieval");

    const std::string started_at = iso8601_now();
    const auto wall_start = std::chrono::steady_clock::now();

    corpus::ScenarioDataset ds = corpus::load_dataset(cfg.dataset_path, cfg.scenario);
    if (ds.test.empty()) throw SchemaError(cfg.dataset_path + ": dataset has no test samples");
    const std::string rid = run_id(cfg);
    const std::string config_digest = hex64(rng::fnv1a(canonical_config(cfg)));
    const fs::path run_dir = fs::path(cfg.output_dir) / rid;
    std::error_code ec;
    fs::create_directories(run_dir / "samples", ec);
    if (ec)
        throw Error("cannot create run directory '" + (run_dir / "samples").string() +
                    "': " + ec.message());

    // --- input rewriting -----------------------------------------------------
    std::vector<corpus::EvalSample> tests = ds.test;
    for (const auto& spec : cfg.perturbations)
        for (auto& s : tests) s = apply_perturbation(s, spec);

    std::optional<std::map<std::string, std::string>> race_map;
    std::optional<std::map<std::string, std::string>> gender_map;
    if (cfg.fairness.swap_race)
        race_map = perturbation::load_lexicon(cfg.fairness.race_names_path);
    if (cfg.fairness.swap_gender)
        gender_map = fairness_bias::load_term_groups(cfg.fairness.term_groups_path).pair_map;
    if (race_map || gender_map)
        for (auto& s : tests)
            apply_fairness(s, race_map ? &*race_map : nullptr,
                           gender_map ? &*gender_map : nullptr);
    validate_samples(cfg, tests);

    // --- prompt machinery ----------------------------------------------------
    prompting::PromptLibrary library = prompting::PromptLibrary::load_directory(cfg.templates_dir);
    const prompting::PromptTemplate& tmpl = cfg.template_id.empty()
                                                ? library.find(cfg.scenario, cfg.strength)
                                                : library.by_id(cfg.template_id);
    if (tmpl.scenario != cfg.scenario)
        throw SchemaError("template '" + tmpl.id + "' targets scenario " +
                          corpus::scenario_to_string(tmpl.scenario) + ", not " +
                          corpus::scenario_to_string(cfg.scenario));

    RunState st;
    st.cfg = &cfg;
    st.scenario = cfg.scenario;
    st.tmpl = &tmpl;
    st.wrapper = prompting::wrapper_preset(cfg.wrapper);
    st.env.source_language = ds.source_language;
    st.env.target_language = ds.target_language;
    if (cfg.shots > 0) st.shots = corpus::sample_shots(ds, cfg.shots, cfg.seed);
    st.gen_base = model_gateway::default_config(cfg.scenario, cfg.easy_config);
    st.docs = &ds.docs;

    if (is_label_scenario(cfg.scenario)) {
        if (cfg.scenario == corpus::Scenario::knowledge_mcq) {
            std::size_t max_choices = 0;
            for (const auto& s : tests)
                max_choices = std::max(max_choices, s.choices ? s.choices->size() : 0);
            st.n_labels = static_cast<int>(max_choices);
        } else {
            if (!ds.label_names || ds.label_names->size() < 2)
                throw SchemaError(cfg.dataset_path +
                                  ": classification dataset needs label_names metadata");
            st.label_names = *ds.label_names;
            st.n_labels = static_cast<int>(st.label_names.size());
        }
    }

    if (cfg.scenario == corpus::Scenario::information_retrieval) {
        if (ds.docs.empty())
            throw SchemaError(cfg.dataset_path + ": retrieval dataset has no documents");
        std::vector<corpus::Query> queries;
        queries.reserve(tests.size());
        for (const auto& s : tests) queries.push_back({s.id, *s.query});
        st.pools = corpus::bm25_candidates(queries, ds.docs, cfg.ir.top_k);
        if (cfg.ir.boosted) {
            for (const auto& s : tests) {
                std::vector<std::string> relevant;
                for (const auto& [doc, grade] : *s.relevance)
                    if (grade > 0) relevant.push_back(doc);
                st.pools[s.id] = corpus::boost_candidates(st.pools[s.id], relevant);
            }
        }
    }

    if (cfg.scenario == corpus::Scenario::summarization)
        st.embedding = cfg.analysis.embedding_endpoint ? *cfg.analysis.embedding_endpoint
                                                       : cfg.endpoint;

    // --- generation / scoring over the worker pool ----------------------------
    model_gateway::HttpBackend backend(cfg.endpoint);
    const std::size_t n = tests.size();
    std::vector<SampleRecord> records(n);
    std::vector<char> done(n, 0);

    // Resume: reload any persisted record whose id still matches.
    for (std::size_t i = 0; i < n; ++i) {
        fs::path p = run_dir / "samples" / record_filename(i);
        if (!fs::exists(p)) continue;
        ordered_json j = ordered_json::parse(read_file(p.string()));
        SampleRecord r = record_from_json(j, cfg.scenario);
        if (r.sample.id != tests[i].id)
            throw Error("run directory " + run_dir.string() + " holds sample '" +
                        r.sample.id + "' at position " + std::to_string(i) + " but the "
                        "dataset has '" + tests[i].id + "'; delete the directory to rerun");
        records[i] = std::move(r);
        done[i] = 1;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) break;
            if (done[i]) continue;
            try {
                SampleRecord r = process_sample(st, backend, i, tests[i]);
                write_file(run_dir / "samples" / record_filename(i),
                           record_to_json(r).dump(2) + "\n");
                records[i] = std::move(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                break;
            }
        }
    };
    std::size_t n_workers = std::min(cfg.parallelism, n);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    // --- metrics + report ------------------------------------------------------
    ComputeMeta meta;
    meta.scenario = cfg.scenario;
    meta.label_names = st.label_names;
    meta.n_labels = st.n_labels;
    meta.bootstrap_iterations = cfg.bootstrap_iterations;
    meta.seed = cfg.seed;
    meta.scoring_supported = st.scoring_ok.load();
    meta.toxicity_configured =
        is_open_generation(cfg.scenario) && cfg.analysis.toxicity_endpoint.has_value();
    meta.toxicity_supported = meta.toxicity_configured && st.toxicity_ok.load();
    meta.embedding_supported = st.embedding.has_value() && st.embedding_ok.load();
    meta.term_groups_path = cfg.analysis.term_groups_path;
    meta.run_id = rid;
    meta.config_hash = config_digest;
    meta.dataset_path = cfg.dataset_path;
    meta.endpoint_url = cfg.endpoint.base_url;
    meta.template_id = tmpl.id;
    meta.shots = cfg.shots;
    meta.strength = prompting::strength_to_string(cfg.strength);
    meta.easy_config = cfg.easy_config;

    report::MetricReport rep = compute_report(records, meta);
    report::emit_report(
        rep, {report::Format::json, report::Format::csv, report::Format::markdown},
        run_dir.string());

    // Sidecar with the volatile run metadata (timestamps, wall time) plus
    // everything score_run needs to recompute the report offline.
    ordered_json meta_json;
    meta_json["run_id"] = rid;
    meta_json["config"] = ordered_json::parse(canonical_config(cfg));
    meta_json["resolved"] = {{"template_id", tmpl.id}};
    ordered_json ds_meta;
    if (ds.label_names) ds_meta["label_names"] = *ds.label_names;
    ds_meta["n_labels"] = st.n_labels;
    if (ds.source_language) ds_meta["source_language"] = *ds.source_language;
    if (ds.target_language) ds_meta["target_language"] = *ds.target_language;
    ds_meta["n_test"] = n;
    meta_json["dataset_meta"] = std::move(ds_meta);
    meta_json["notes"] = {{"scoring_supported", meta.scoring_supported},
                          {"toxicity_configured", meta.toxicity_configured},
                          {"toxicity_supported", meta.toxicity_supported},
                          {"embedding_supported", meta.embedding_supported}};
    meta_json["started_at"] = started_at;
    meta_json["completed_at"] = iso8601_now();
    meta_json["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    write_file(run_dir / "run_meta.json", meta_json.dump(2) + "\n");
    return rep;
}

report::MetricReport score_run(const std::string& run_dir) {
    const fs::path dir(run_dir);
    if (!fs::exists(dir / "run_meta.json"))
        throw Error(run_dir + ": run_meta.json missing (incomplete or not a run directory)");
    ordered_json meta_json;
    try {
        meta_json = ordered_json::parse(read_file((dir / "run_meta.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(run_dir + "/run_meta.json: " + e.what());
    }

    ComputeMeta meta;
    try {
        const auto& c = meta_json.at("config");
        meta.scenario = corpus::scenario_from_string(c.at("scenario").get<std::string>());
        meta.bootstrap_iterations = c.at("bootstrap_iterations").get<std::size_t>();
        meta.seed = c.at("seed").get<std::uint64_t>();
        meta.dataset_path = c.at("dataset_path").get<std::string>();
        meta.endpoint_url = c.at("endpoint").at("base_url").get<std::string>();
        meta.shots = c.at("shots").get<std::size_t>();
        meta.strength = c.at("strength").get<std::string>();
        meta.easy_config = c.at("easy_config").get<bool>();
        meta.term_groups_path = c.at("analysis").at("term_groups").get<std::string>();
        meta.template_id = meta_json.at("resolved").at("template_id").get<std::string>();
        meta.run_id = meta_json.at("run_id").get<std::string>();
        meta.config_hash = hex64(rng::fnv1a(c.dump()));
        const auto& dm = meta_json.at("dataset_meta");
        if (dm.contains("label_names"))
            meta.label_names = dm.at("label_names").get<std::vector<std::string>>();
        meta.n_labels = dm.at("n_labels").get<int>();
        const auto& notes = meta_json.at("notes");
        meta.scoring_supported = notes.at("scoring_supported").get<bool>();
        meta.toxicity_configured = notes.at("toxicity_configured").get<bool>();
        meta.toxicity_supported = notes.at("toxicity_supported").get<bool>();
        meta.embedding_supported = notes.at("embedding_supported").get<bool>();

        const std::size_t n = meta_json.at("dataset_meta").at("n_test").get<std::size_t>();
        std::vector<SampleRecord> records;
        records.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            fs::path p = dir / "samples" / record_filename(i);
            if (!fs::exists(p))
                throw Error(run_dir + ": sample record " + record_filename(i) +
                            " missing; the run is incomplete");
            records.push_back(
                record_from_json(ordered_json::parse(read_file(p.string())), meta.scenario));
        }
        report::MetricReport rep = compute_report(records, meta);
        report::emit_report(
            rep, {report::Format::json, report::Format::csv, report::Format::markdown},
            dir.string());
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(run_dir + "/run_meta.json: " + e.what());
    }
}

}  // namespace vieval::runner
