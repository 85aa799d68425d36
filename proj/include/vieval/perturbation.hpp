#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vieval/common.hpp"
#include "vieval/corpus.hpp"

namespace vieval::perturbation {

enum class Kind { typo, spacing, lowercase, digits_to_text, shuffle_choices };

struct PerturbationSpec {
    Kind kind = Kind::typo;
    double rate = 0.10;  // fraction of words altered by typo injection
    uint64_t seed = 0;
    std::map<std::string, std::string> typo_lexicon;   // word -> common misspelling
    std::map<std::string, std::string> digit_lexicon;  // numeral string -> spelled form
};

// Load a two-column lexicon: one "surface<TAB>replacement" pair per line;
// blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> load_lexicon(const std::string& path);

// Alter exactly floor(rate * word_count) words, chosen uniformly without
// replacement. Each chosen word gets one of five edits picked uniformly:
// lexicon replacement, character duplication, character deletion, swap of two
// adjacent characters, or diacritic removal; inapplicable picks fall back to
// duplication so every chosen word really changes.
std::string inject_typos(const std::string& text, const PerturbationSpec& spec);

// Replace every single space character with a uniform-random run of 1-3
// spaces; all other characters pass through.
std::string perturb_spacing(const std::string& text, uint64_t seed);

// Unicode-aware lowercasing.
std::string to_lowercase(const std::string& text);

// Replace maximal digit runs: a whole-run lexicon entry wins, otherwise the
// run expands digit by digit joined with spaces. The expansion is separated
// by a space from any adjacent non-space character.
std::string digits_to_text(const std::string& text, const std::map<std::string, std::string>& lexicon);

// Permute the multiple-choice options with the seeded uniform permutation,
// remap the gold label to follow its text, and suffix the id with the seed.
corpus::EvalSample shuffle_choices(const corpus::EvalSample& sample, uint64_t seed);

}  // namespace vieval::perturbation
