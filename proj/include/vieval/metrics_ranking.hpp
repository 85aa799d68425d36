#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vieval/common.hpp"

namespace vieval::metrics_ranking {

// A reranked candidate list for one query plus its relevance judgments.
struct RankedList {
    std::string query_id;
    std::vector<std::string> ranking;        // duplicate-free, best first
    std::map<std::string, int> relevance;    // judged pool: doc id -> grade >= 0
};

// Order candidates by descending relevance probability; ties by ascending
// doc id.
std::vector<std::string> rerank_by_probability(
    const std::vector<std::pair<std::string, double>>& docs);

// Reciprocal rank of the first relevant document if within the top k, else 0.
double mrr_at_k(const RankedList& r, int k = 10);

// DCG@K over linear graded relevance, normalized by the ideal ordering of the
// whole judged pool.
double ndcg_at_k(const RankedList& r, int k = 10);

}  // namespace vieval::metrics_ranking
