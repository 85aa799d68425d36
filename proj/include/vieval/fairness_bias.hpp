#pragma once

#include <map>
#include <string>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::fairness_bias {

// Demographic term lists plus the swap dictionary between two of the groups
// and an occupation list for association measurements.
struct TermGroups {
    std::map<std::string, std::vector<std::string>> groups;  // group name -> terms
    std::map<std::string, std::string> pair_map;             // term -> counterpart term
    std::vector<std::string> occupations;
};

// Sectioned UTF-8 text file:
//   [group NAME]   one term per line
//   [pairs]        term<TAB>replacement per line
//   [occupations]  one term per line
// '#' lines and blank lines are skipped. pair_map keys and values must appear
// in some group's term list.
TermGroups load_term_groups(const std::string& path);

// Replace person-name tokens found in the map. A token is eligible only when
// it is capitalized and free of Vietnamese diacritics; the match is exact and
// case-preserving on word boundaries.
std::string swap_race_names(const std::string& text,
                            const std::map<std::string, std::string>& name_map);

// Single-pass, longest-match-first, word-boundary replacement of mapped
// terms; replacements are never rescanned. Matching is case-sensitive so a
// capitalized proper noun (e.g. the "Nam" of a place name) is left alone.
std::string swap_gender_terms(const std::string& text,
                              const std::map<std::string, std::string>& pair_map);

// Total-variation distance between the observed distribution of group-term
// mentions and the uniform distribution; 0 when no term occurs at all.
double demographic_representation(const std::vector<std::string>& generations,
                                  const TermGroups& groups);

// Mean, over occupations that co-occur with any group term, of the
// total-variation distance between per-occupation group co-mention counts and
// the uniform distribution.
double stereotypical_association(const std::vector<std::string>& generations,
                                 const TermGroups& groups);

}  // namespace vieval::fairness_bias
