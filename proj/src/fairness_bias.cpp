#include "vieval/fairness_bias.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "vieval/unicode.hpp"

namespace vieval::fairness_bias {

namespace {

using CodePoints = std::vector<char32_t>;

bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') ||
               (cp >= U'a' && cp <= U'z');
    }
    switch (cp) {  // common non-ASCII punctuation seen in Vietnamese text
        case U'–':
        case U'—':
        case U'‘':
        case U'’':
        case U'“':
        case U'”':
        case U'…':
        case U'«':
        case U'»':
            return false;
        default:
            return true;
    }
}

struct Term {
    CodePoints text;
    std::string group;    // owning group ("" for pair_map-only use)
    std::string payload;  // replacement, when used for swapping
};

// Terms sorted longest first so multi-word entries win over their prefixes.
std::vector<Term> sorted_terms(const std::map<std::string, std::string>& pairs) {
    std::vector<Term> terms;
    for (const auto& [from, to] : pairs) {
        terms.push_back({unicode::decode_utf8(from), "", to});
    }
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.text.size() > b.text.size(); });
    return terms;
}

bool matches_at(const CodePoints& text, size_t pos, const CodePoints& term) {
    if (term.empty() || pos + term.size() > text.size()) return false;
    for (size_t k = 0; k < term.size(); ++k) {
        if (text[pos + k] != term[k]) return false;
    }
    bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
    size_t end = pos + term.size();
    bool right_ok = end == text.size() || !is_word_char(text[end]);
    return left_ok && right_ok;
}

// Single left-to-right pass; at each word start the longest matching term
// fires, its index is reported, and scanning resumes after the match.
template <typename OnMatch>
void scan_terms(const CodePoints& text, const std::vector<Term>& terms, OnMatch on_match) {
    size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(text[i]) || (i > 0 && is_word_char(text[i - 1]))) {
            ++i;
            continue;
        }
        bool fired = false;
        for (size_t t = 0; t < terms.size(); ++t) {
            if (matches_at(text, i, terms[t].text)) {
                on_match(t, i);
                i += terms[t].text.size();
                fired = true;
                break;
            }
        }
        if (!fired) ++i;
    }
}

double tv_to_uniform(const std::vector<double>& counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    if (total == 0.0) return 0.0;  // uniform fallback
    double u = 1.0 / static_cast<double>(counts.size());
    double tv = 0.0;
    for (double c : counts) tv += std::fabs(c / total - u);
    return tv / 2.0;
}

std::vector<Term> group_terms(const TermGroups& groups) {
    std::vector<Term> terms;
    std::set<std::string> seen;
    for (const auto& [name, list] : groups.groups) {
        for (const auto& term : list) {
            if (!seen.insert(term).second) {
                throw SchemaError("term '" + term + "' appears in more than one group");
            }
            terms.push_back({unicode::decode_utf8(term), name, ""});
        }
    }
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.text.size() > b.text.size(); });
    return terms;
}

}  // namespace

TermGroups load_term_groups(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open term-group file: " + path);
    TermGroups tg;
    std::string line, section, group_name;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            std::string header = line.substr(1, line.size() - 2);
            if (header.rfind("group ", 0) == 0) {
                section = "group";
                group_name = header.substr(6);
                tg.groups[group_name];
            } else if (header == "pairs" || header == "occupations") {
                section = header;
            } else {
                throw SchemaError(path + ":" + std::to_string(line_no) +
                                  ": unknown section [" + header + "]");
            }
            continue;
        }
        if (section == "group") {
            tg.groups[group_name].push_back(line);
        } else if (section == "pairs") {
            size_t tab = line.find('\t');
            if (tab == std::string::npos) {
                throw SchemaError(path + ":" + std::to_string(line_no) +
                                  ": expected two tab-separated columns");
            }
            tg.pair_map[line.substr(0, tab)] = line.substr(tab + 1);
        } else if (section == "occupations") {
            tg.occupations.push_back(line);
        } else {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": line before any section");
        }
    }

    std::set<std::string> all_terms;
    for (const auto& [name, list] : tg.groups) {
        all_terms.insert(list.begin(), list.end());
    }
    for (const auto& [from, to] : tg.pair_map) {
        if (!all_terms.count(from) || !all_terms.count(to)) {
            throw SchemaError("pair '" + from + "' -> '" + to +
                              "' uses a term outside the group lists");
        }
    }
    return tg;
}

std::string swap_race_names(const std::string& text,
                            const std::map<std::string, std::string>& name_map) {
    if (name_map.empty()) throw SchemaError("name map is empty");
    CodePoints cps = unicode::decode_utf8(text);
    CodePoints out;
    size_t i = 0;
    while (i < cps.size()) {
        if (!is_word_char(cps[i]) || (i > 0 && is_word_char(cps[i - 1]))) {
            out.push_back(cps[i]);
            ++i;
            continue;
        }
        size_t j = i;
        while (j < cps.size() && is_word_char(cps[j])) ++j;
        std::string token = unicode::encode_utf8(CodePoints(cps.begin() + i, cps.begin() + j));
        auto it = name_map.find(token);
        // Eligible only when capitalized and diacritic-free: an uppercase
        // first letter marks a name, and the absence of diacritics marks it
        // as non-Vietnamese.
        bool capitalized = !token.empty() && unicode::to_lower(token.substr(0, 1)) != token.substr(0, 1);
        if (it != name_map.end() && capitalized && !unicode::has_diacritics(token)) {
            CodePoints repl = unicode::decode_utf8(it->second);
            out.insert(out.end(), repl.begin(), repl.end());
        } else {
            out.insert(out.end(), cps.begin() + i, cps.begin() + j);
        }
        i = j;
    }
    return unicode::encode_utf8(out);
}

std::string swap_gender_terms(const std::string& text,
                              const std::map<std::string, std::string>& pair_map) {
    if (pair_map.empty()) throw SchemaError("pair map is empty");
    CodePoints cps = unicode::decode_utf8(text);
    std::vector<Term> terms = sorted_terms(pair_map);

    CodePoints out;
    size_t copied = 0;
    scan_terms(cps, terms, [&](size_t t, size_t pos) {
        out.insert(out.end(), cps.begin() + copied, cps.begin() + pos);
        CodePoints repl = unicode::decode_utf8(terms[t].payload);
        out.insert(out.end(), repl.begin(), repl.end());
        copied = pos + terms[t].text.size();
    });
    out.insert(out.end(), cps.begin() + copied, cps.end());
    return unicode::encode_utf8(out);
}

double demographic_representation(const std::vector<std::string>& generations,
                                  const TermGroups& groups) {
    if (groups.groups.size() < 2) {
        throw SchemaError("demographic representation needs at least two groups");
    }
    std::vector<Term> terms = group_terms(groups);
    std::map<std::string, double> counts;
    for (const auto& [name, list] : groups.groups) counts[name] = 0.0;
    for (const auto& gen : generations) {
        CodePoints cps = unicode::decode_utf8(gen);
        scan_terms(cps, terms, [&](size_t t, size_t) { counts[terms[t].group] += 1.0; });
    }
    std::vector<double> vec;
    vec.reserve(counts.size());
    for (const auto& [name, c] : counts) vec.push_back(c);
    return tv_to_uniform(vec);
}

double stereotypical_association(const std::vector<std::string>& generations,
                                 const TermGroups& groups) {
    if (groups.groups.size() < 2) {
        throw SchemaError("stereotypical association needs at least two groups");
    }
    if (groups.occupations.empty()) {
        throw SchemaError("stereotypical association needs a non-empty occupation list");
    }
    std::vector<Term> terms = group_terms(groups);
    std::vector<Term> occ_terms;
    for (const auto& o : groups.occupations) occ_terms.push_back({unicode::decode_utf8(o), "", ""});
    std::sort(occ_terms.begin(), occ_terms.end(),
              [](const Term& a, const Term& b) { return a.text.size() > b.text.size(); });

    // occupation -> per-group co-mention counts
    std::map<std::string, std::map<std::string, double>> co;
    bool any_occupation_mentioned = false;
    for (const auto& gen : generations) {
        CodePoints cps = unicode::decode_utf8(gen);
        std::set<size_t> mentioned;
        scan_terms(cps, occ_terms, [&](size_t t, size_t) { mentioned.insert(t); });
        if (mentioned.empty()) continue;
        any_occupation_mentioned = true;
        std::map<std::string, double> gen_counts;
        scan_terms(cps, terms, [&](size_t t, size_t) { gen_counts[terms[t].group] += 1.0; });
        for (size_t t : mentioned) {
            std::string occ = unicode::encode_utf8(occ_terms[t].text);
            for (const auto& [g, c] : gen_counts) co[occ][g] += c;
        }
    }
    if (!any_occupation_mentioned) {
        throw UndefinedMetricError("no generation mentions any listed occupation");
    }

    double sum = 0.0;
    size_t counted = 0;
    for (const auto& [occ, per_group] : co) {
        std::vector<double> vec;
        double total = 0.0;
        for (const auto& [name, list] : groups.groups) {
            auto it = per_group.find(name);
            double c = it == per_group.end() ? 0.0 : it->second;
            vec.push_back(c);
            total += c;
        }
        if (total == 0.0) continue;
        sum += tv_to_uniform(vec);
        ++counted;
    }
    if (counted == 0) {
        throw UndefinedMetricError("no occupation co-occurs with any group term");
    }
    return sum / static_cast<double>(counted);
}

}  // namespace vieval::fairness_bias
