#include "vieval/prompting.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace vieval::prompting {

namespace {

const std::set<std::string> kKnownPlaceholders = {
    "context", "question", "document", "passage",         "rule",
    "problem", "few_shot", "list_answers", "source_language", "target_language",
};

/// Substitution values for one sample (few_shot handled separately).
std::map<std::string, std::string> placeholder_values(const corpus::EvalSample& s,
                                                      const RenderEnv& env) {
    std::map<std::string, std::string> v;
    if (s.context) {
        v["context"] = *s.context;
        v["document"] = *s.context;
        v["passage"] = *s.context;
    }
    if (s.query) {
        v["question"] = *s.query;
        v["rule"] = *s.query;
        v["problem"] = *s.query;
    }
    if (s.choices) v["list_answers"] = render_mcq_answers(*s.choices);
    if (env.source_language) v["source_language"] = *env.source_language;
    if (env.target_language) v["target_language"] = *env.target_language;
    return v;
}

/// Replace every {name} with its value; unknown names raise RenderError.
std::string substitute(const std::string& text,
                       const std::map<std::string, std::string>& values,
                       const std::string& template_id) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            out.push_back(text[i++]);
            continue;
        }
        std::size_t close = text.find('}', i + 1);
        std::string name =
            close == std::string::npos ? "" : text.substr(i + 1, close - i - 1);
        if (!kKnownPlaceholders.count(name)) {
            // Literal brace (JSON skeletons in instructions use { ... }).
            out.push_back(text[i++]);
            continue;
        }
        auto it = values.find(name);
        if (it == values.end())
            throw RenderError("template '" + template_id + "': placeholder {" + name +
                              "} cannot be filled from the sample");
        out += it->second;
        i = close + 1;
    }
    return out;
}

std::string render_shot_answer(const std::string& pattern, const corpus::EvalSample& shot,
                               const std::string& template_id) {
    std::string out;
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern.compare(i, 8, "{answer}") == 0) {
            if (shot.references.empty())
                throw RenderError("template '" + template_id +
                                  "': shot answer needs a reference but shot '" + shot.id +
                                  "' has none");
            out += shot.references.front();
            i += 8;
        } else if (pattern.compare(i, 7, "{label}") == 0) {
            if (!shot.label)
                throw RenderError("template '" + template_id +
                                  "': shot answer needs a label but shot '" + shot.id +
                                  "' has none");
            out += std::to_string(*shot.label);
            i += 7;
        } else if (pattern.compare(i, 8, "{letter}") == 0) {
            if (!shot.label || *shot.label < 0 || *shot.label >= 26)
                throw RenderError("template '" + template_id +
                                  "': shot answer needs a choice letter but shot '" +
                                  shot.id + "' has no label in [0, 26)");
            out.push_back(static_cast<char>('A' + *shot.label));
            i += 8;
        } else {
            out.push_back(pattern[i++]);
        }
    }
    return out;
}

}  // namespace

Strength strength_from_string(const std::string& s) {
    if (s == "weak") return Strength::weak;
    if (s == "medium") return Strength::medium;
    if (s == "normal") return Strength::normal;
    throw SchemaError("unknown prompt strength: '" + s + "'");
}

std::string strength_to_string(Strength s) {
    switch (s) {
        case Strength::weak: return "weak";
        case Strength::medium: return "medium";
        case Strength::normal: return "normal";
    }
    return "?";
}

ChatWrapper wrapper_preset(const std::string& name) {
    if (name == "llama2")
        return {"<<SYS>>\n", "\n<</SYS>>\n\n", "[INST] ", " [/INST]"};
    if (name == "plain") return {"", "\n\n", "", ""};
    if (name == "none") return {"", "", "", ""};
    throw SchemaError("unknown chat wrapper preset: '" + name + "'");
}

std::string render_mcq_answers(const std::vector<std::string>& choices) {
    if (choices.empty()) throw RenderError("render_mcq_answers: empty choice list");
    if (choices.size() > 26)
        throw RenderError("render_mcq_answers: " + std::to_string(choices.size()) +
                          " choices exceed the 26 option letters");
    std::string out;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        if (i) out.push_back('\n');
        out.push_back(static_cast<char>('A' + i));
        out += ": ``` " + choices[i] + " '''";
    }
    return out;
}

Prompt render(const PromptTemplate& tmpl, const corpus::EvalSample& sample,
              const std::vector<corpus::EvalSample>& shots, const ChatWrapper& wrapper,
              const RenderEnv& env) {
    const auto sample_values = placeholder_values(sample, env);

    // Expand {few_shot}: the body text after the marker is the turn format.
    std::string body = tmpl.body;
    const std::string marker = "{few_shot}";
    std::size_t pos = body.find(marker);
    if (pos == std::string::npos) {
        if (!shots.empty())
            throw RenderError("template '" + tmpl.id +
                              "' has no {few_shot} placeholder but " +
                              std::to_string(shots.size()) + " shots were supplied");
    } else {
        std::size_t after = pos + marker.size();
        if (after < body.size() && body[after] == '\n') ++after;  // marker line vanishes
        const std::string turn_format = body.substr(after);
        std::string block;
        for (const auto& shot : shots) {
            auto shot_values = placeholder_values(shot, env);
            block += substitute(turn_format, shot_values, tmpl.id);
            block += " " + render_shot_answer(tmpl.shot_answer, shot, tmpl.id) + "\n";
        }
        body = body.substr(0, pos) + block + body.substr(after);
    }

    std::string rendered_body = substitute(body, sample_values, tmpl.id);
    std::string out = wrapper.pre_turn;
    if (!tmpl.system_text.empty()) {
        out += wrapper.pre_system;
        out += substitute(tmpl.system_text, sample_values, tmpl.id);
        out += wrapper.post_system;
    }
    out += rendered_body;
    out += wrapper.post_turn;
    return out;
}

PromptTemplate parse_template(const std::string& text, const std::string& origin) {
    // Split into front-matter / system / body on lines equal to "---".
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    std::vector<std::size_t> seps;
    for (std::size_t i = 0; i < lines.size() && seps.size() < 2; ++i)
        if (lines[i] == "---") seps.push_back(i);
    if (seps.size() != 2)
        throw SchemaError(origin + ": template needs two --- separators "
                          "(front-matter / system / body)");

    PromptTemplate t;
    bool saw_id = false, saw_scenario = false, saw_strength = false;
    for (std::size_t i = 0; i < seps[0]; ++i) {
        const std::string& l = lines[i];
        if (l.empty()) continue;
        std::size_t colon = l.find(": ");
        if (colon == std::string::npos)
            throw SchemaError(origin + ":" + std::to_string(i + 1) +
                              ": front-matter line is not 'key: value'");
        std::string key = l.substr(0, colon), value = l.substr(colon + 2);
        if (key == "id") {
            t.id = value;
            saw_id = true;
        } else if (key == "scenario") {
            t.scenario = corpus::scenario_from_string(value);
            saw_scenario = true;
        } else if (key == "strength") {
            t.strength = strength_from_string(value);
            saw_strength = true;
        } else if (key == "shot_answer") {
            t.shot_answer = value;
        } else if (key == "placeholders") {
            std::istringstream ps(value);
            std::string p;
            while (std::getline(ps, p, ',')) {
                p.erase(0, p.find_first_not_of(' '));
                p.erase(p.find_last_not_of(' ') + 1);
                if (!p.empty()) t.placeholders.push_back(p);
            }
        } else {
            throw SchemaError(origin + ":" + std::to_string(i + 1) +
                              ": unknown front-matter key '" + key + "'");
        }
    }
    if (!saw_id || !saw_scenario || !saw_strength)
        throw SchemaError(origin + ": front-matter requires id, scenario and strength");

    auto join = [&](std::size_t from, std::size_t to) {
        std::string s;
        for (std::size_t i = from; i < to; ++i) {
            if (i > from) s.push_back('\n');
            s += lines[i];
        }
        return s;
    };
    t.system_text = join(seps[0] + 1, seps[1]);
    t.body = join(seps[1] + 1, lines.size());

    // Validate placeholders against the known set; {few_shot} at most once,
    // body only.
    auto scan = [&](const std::string& s, bool allow_few_shot) {
        std::size_t i = 0;
        int few_shot = 0;
        while ((i = s.find('{', i)) != std::string::npos) {
            std::size_t close = s.find('}', i + 1);
            if (close == std::string::npos) break;
            std::string name = s.substr(i + 1, close - i - 1);
            if (kKnownPlaceholders.count(name)) {
                if (name == "few_shot") {
                    if (!allow_few_shot)
                        throw SchemaError(origin + ": {few_shot} may only appear in the body");
                    if (++few_shot > 1)
                        throw SchemaError(origin + ": {few_shot} may appear at most once");
                }
                i = close + 1;
            } else {
                ++i;  // literal brace content (JSON examples)
            }
        }
    };
    scan(t.system_text, false);
    scan(t.body, true);
    for (const auto& p : t.placeholders)
        if (!kKnownPlaceholders.count(p))
            throw SchemaError(origin + ": unknown placeholder '" + p +
                              "' in placeholder list");
    return t;
}

PromptTemplate load_template(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open template file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string text = ss.str();
    // One trailing newline belongs to the file, not the body.
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return parse_template(text, path);
}

PromptLibrary PromptLibrary::load_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    PromptLibrary lib;
    if (!fs::is_directory(dir)) throw SchemaError("not a template directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".tmpl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) lib.add(load_template(p.string()));
    return lib;
}

void PromptLibrary::add(PromptTemplate tmpl) {
    std::string id = tmpl.id;
    if (by_id_.count(id)) throw SchemaError("duplicate template id '" + id + "'");
    by_id_.emplace(std::move(id), std::move(tmpl));
}

const PromptTemplate& PromptLibrary::by_id(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw SchemaError("no template with id '" + id + "'");
    return it->second;
}

const PromptTemplate& PromptLibrary::find(corpus::Scenario scenario,
                                          Strength strength) const {
    const PromptTemplate* hit = nullptr;
    std::vector<std::string> candidates;
    for (const auto& [id, t] : by_id_) {
        if (t.scenario == scenario && t.strength == strength) {
            hit = &t;
            candidates.push_back(id);
        }
    }
    if (candidates.empty())
        throw SchemaError("no template for scenario " + corpus::scenario_to_string(scenario) +
                          " at strength " + strength_to_string(strength));
    if (candidates.size() > 1) {
        // Deterministic tiebreak: the template named exactly after the
        // scenario is the default variant.
        for (const auto& c : candidates)
            if (c == corpus::scenario_to_string(scenario)) return by_id(c);
    }
    if (candidates.size() > 1) {
        std::string list;
        for (const auto& c : candidates) list += (list.empty() ? "" : ", ") + c;
        throw SchemaError("template for " + corpus::scenario_to_string(scenario) +
                          "/" + strength_to_string(strength) +
                          " is ambiguous; set template_id to one of: " + list);
    }
    return *hit;
}

std::vector<std::string> PromptLibrary::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : by_id_) out.push_back(id);
    return out;
}

}  // namespace vieval::prompting
