#include "vieval/perturbation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vieval/rng.hpp"
#include "vieval/unicode.hpp"

namespace vieval::perturbation {

namespace {

using CodePoints = std::vector<char32_t>;

struct Span {
    bool is_word = false;
    CodePoints text;
};

std::vector<Span> split_spans(const std::string& text) {
    std::vector<Span> spans;
    for (char32_t cp : unicode::decode_utf8(text)) {
        bool word = !unicode::is_space(cp);
        if (spans.empty() || spans.back().is_word != word) {
            spans.push_back({word, {}});
        }
        spans.back().text.push_back(cp);
    }
    return spans;
}

std::string join_spans(const std::vector<Span>& spans) {
    CodePoints all;
    for (const auto& span : spans) {
        all.insert(all.end(), span.text.begin(), span.text.end());
    }
    return unicode::encode_utf8(all);
}

CodePoints duplicate_char(CodePoints word, rng::Engine& eng) {
    size_t i = rng::bounded(eng, word.size());
    word.insert(word.begin() + static_cast<std::ptrdiff_t>(i), word[i]);
    return word;
}

// One typo edit. Categories: 0 lexicon, 1 duplication, 2 deletion, 3 adjacent
// swap, 4 diacritic removal. Picks that cannot change this word fall back to
// duplication, which always can.
CodePoints apply_typo(const CodePoints& word, const PerturbationSpec& spec, rng::Engine& eng) {
    size_t category = rng::bounded(eng, 5);
    std::string utf8 = unicode::encode_utf8(word);
    if (category == 0 && spec.typo_lexicon.find(utf8) == spec.typo_lexicon.end()) {
        category = 1 + rng::bounded(eng, 4);
    }
    switch (category) {
        case 0:
            return unicode::decode_utf8(spec.typo_lexicon.at(utf8));
        case 1:
            return duplicate_char(word, eng);
        case 2: {
            if (word.size() < 2) return duplicate_char(word, eng);
            CodePoints out = word;
            out.erase(out.begin() + static_cast<std::ptrdiff_t>(rng::bounded(eng, out.size())));
            return out;
        }
        case 3: {
            if (word.size() < 2) return duplicate_char(word, eng);
            CodePoints out = word;
            size_t i = rng::bounded(eng, out.size() - 1);
            std::swap(out[i], out[i + 1]);
            if (out == word) return duplicate_char(word, eng);  // equal neighbors
            return out;
        }
        default: {
            if (!unicode::has_diacritics(utf8)) return duplicate_char(word, eng);
            return unicode::decode_utf8(unicode::strip_diacritics(utf8));
        }
    }
}

}  // namespace

std::map<std::string, std::string> load_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open lexicon file: " + path);
    std::map<std::string, std::string> lexicon;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw SchemaError(path + ":" + std::to_string(line_no) +
                              ": expected two tab-separated columns");
        }
        lexicon[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return lexicon;
}

std::string inject_typos(const std::string& text, const PerturbationSpec& spec) {
    if (spec.rate < 0.0 || spec.rate > 1.0) throw SchemaError("typo rate must be within [0, 1]");
    auto spans = split_spans(text);
    std::vector<size_t> word_spans;
    for (size_t i = 0; i < spans.size(); ++i) {
        if (spans[i].is_word) word_spans.push_back(i);
    }
    size_t n_changes = static_cast<size_t>(spec.rate * static_cast<double>(word_spans.size()));
    if (n_changes == 0) return text;

    rng::Engine eng(spec.seed);
    auto chosen = rng::sample_without_replacement(eng, word_spans.size(), n_changes);
    std::sort(chosen.begin(), chosen.end());
    for (size_t idx : chosen) {
        Span& span = spans[word_spans[idx]];
        span.text = apply_typo(span.text, spec, eng);
    }
    return join_spans(spans);
}

std::string perturb_spacing(const std::string& text, uint64_t seed) {
    rng::Engine eng(seed);
    CodePoints out;
    for (char32_t cp : unicode::decode_utf8(text)) {
        if (cp == U' ') {
            size_t run = 1 + rng::bounded(eng, 3);
            out.insert(out.end(), run, U' ');
        } else {
            out.push_back(cp);
        }
    }
    return unicode::encode_utf8(out);
}

std::string to_lowercase(const std::string& text) { return unicode::to_lower(text); }

std::string digits_to_text(const std::string& text,
                           const std::map<std::string, std::string>& lexicon) {
    for (char d = '0'; d <= '9'; ++d) {
        if (lexicon.find(std::string(1, d)) == lexicon.end()) {
            throw SchemaError("digit lexicon is missing an entry for '" + std::string(1, d) + "'");
        }
    }
    CodePoints cps = unicode::decode_utf8(text);
    CodePoints out;
    auto is_digit = [](char32_t cp) { return cp >= U'0' && cp <= U'9'; };
    size_t i = 0;
    while (i < cps.size()) {
        if (!is_digit(cps[i])) {
            out.push_back(cps[i]);
            ++i;
            continue;
        }
        size_t j = i;
        std::string run;
        while (j < cps.size() && is_digit(cps[j])) {
            run.push_back(static_cast<char>(cps[j]));
            ++j;
        }
        std::string expansion;
        auto whole = lexicon.find(run);
        if (whole != lexicon.end()) {
            expansion = whole->second;
        } else {
            for (size_t k = 0; k < run.size(); ++k) {
                if (k) expansion.push_back(' ');
                expansion += lexicon.at(std::string(1, run[k]));
            }
        }
        bool glued_left = !out.empty() && !unicode::is_space(out.back());
        bool glued_right = j < cps.size() && !unicode::is_space(cps[j]);
        if (glued_left) out.push_back(U' ');
        CodePoints exp_cps = unicode::decode_utf8(expansion);
        out.insert(out.end(), exp_cps.begin(), exp_cps.end());
        if (glued_right) out.push_back(U' ');
        i = j;
    }
    return unicode::encode_utf8(out);
}

corpus::EvalSample shuffle_choices(const corpus::EvalSample& sample, uint64_t seed) {
    if (!sample.choices || sample.choices->empty()) {
        throw SchemaError("sample '" + sample.id + "' has no choices to shuffle");
    }
    if (!sample.label) {
        throw SchemaError("sample '" + sample.id + "' has no gold label");
    }
    corpus::EvalSample out = sample;
    rng::Engine eng(seed);
    auto perm = rng::permutation(eng, sample.choices->size());
    std::vector<std::string> shuffled(sample.choices->size());
    for (size_t i = 0; i < perm.size(); ++i) {
        shuffled[i] = (*sample.choices)[perm[i]];
        if (perm[i] == static_cast<size_t>(*sample.label)) {
            out.label = static_cast<int>(i);
        }
    }
    out.choices = std::move(shuffled);
    out.id = sample.id + "#" + std::to_string(seed);
    return out;
}

}  // namespace vieval::perturbation
