#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vieval/common.hpp"
#include "vieval/corpus.hpp"

namespace vieval::prompting {

/// Prompt strength tiers: `weak` omits instructions, `medium` carries a task
/// instruction, `normal` adds the full system constraints.
enum class Strength { weak, medium, normal };

Strength strength_from_string(const std::string& s);
std::string strength_to_string(Strength s);

/// A prompt template loaded from a template file.
///
/// File format — three sections separated by lines containing exactly "---":
///   1. front-matter: `key: value` lines (id, scenario, strength,
///      placeholders, optional shot_answer);
///   2. system text (may be empty = no system section);
///   3. body. The body's bytes are authoritative; exactly one trailing
///      newline is stripped at load.
///
/// Recognised placeholders: {context} {question} {document} {passage} {rule}
/// {problem} {list_answers} {few_shot} {source_language} {target_language}.
/// {few_shot} may appear at most once and only in the body.
struct PromptTemplate {
    std::string id;
    corpus::Scenario scenario = corpus::Scenario::question_answering;
    Strength strength = Strength::normal;
    std::string system_text;  // empty = no system section
    std::string body;
    /// Answer skeleton for few-shot turns; placeholders {answer} (first
    /// reference), {label} (label index), {letter} (A-Z by label index).
    std::string shot_answer = "{answer}";
    std::vector<std::string> placeholders;  // required placeholders
};

/// Chat-format affixes applied around the rendered prompt:
///   pre_turn + [pre_system + system + post_system] + body + post_turn.
struct ChatWrapper {
    std::string pre_system;
    std::string post_system;
    std::string pre_turn;
    std::string post_turn;
};

/// Presets: "llama2" ([INST] <<SYS>> ... <</SYS>> ... [/INST]), "plain"
/// (system + blank line + body), "none" (body only, system dropped).
ChatWrapper wrapper_preset(const std::string& name);

/// Per-dataset context for placeholder resolution (languages for
/// translation templates). Taken from ScenarioDataset metadata.
struct RenderEnv {
    std::optional<std::string> source_language;
    std::optional<std::string> target_language;
};

using Prompt = std::string;

/// Render a template for one sample. Few-shot exemplars expand at the
/// {few_shot} marker using the body text after the marker as the per-turn
/// format, with each shot's answer appended. Byte-deterministic; raises
/// RenderError naming any unsatisfiable placeholder.
Prompt render(const PromptTemplate& tmpl, const corpus::EvalSample& sample,
              const std::vector<corpus::EvalSample>& shots, const ChatWrapper& wrapper,
              const RenderEnv& env = {});

/// Format an option list as lettered lines:
///   A: ``` <choice> '''
/// Letters are positional; more than 26 choices is unsupported.
std::string render_mcq_answers(const std::vector<std::string>& choices);

/// Parse a template from file bytes; `origin` names the file in errors.
PromptTemplate parse_template(const std::string& text, const std::string& origin = "<memory>");

/// Load one template file.
PromptTemplate load_template(const std::string& path);

/// A set of templates indexed by id with (scenario, strength) lookup.
class PromptLibrary {
public:
    /// Load every *.tmpl file in a directory.
    static PromptLibrary load_directory(const std::string& dir);

    void add(PromptTemplate tmpl);
    const PromptTemplate& by_id(const std::string& id) const;
    /// Unique template for (scenario, strength). When several match, the one
    /// whose id equals the scenario name wins; otherwise ambiguity is an
    /// error that lists the candidate ids.
    const PromptTemplate& find(corpus::Scenario scenario, Strength strength) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate> by_id_;
};

}  // namespace vieval::prompting
