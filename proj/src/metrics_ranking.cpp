#include "vieval/metrics_ranking.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace vieval::metrics_ranking {

namespace {

void require_duplicate_free(const RankedList& r) {
    std::unordered_set<std::string> seen;
    for (const auto& id : r.ranking) {
        if (!seen.insert(id).second) {
            throw SchemaError("ranking for query '" + r.query_id + "' repeats doc id '" + id + "'");
        }
    }
}

int grade(const RankedList& r, const std::string& id) {
    auto it = r.relevance.find(id);
    return it == r.relevance.end() ? 0 : it->second;
}

}  // namespace

std::vector<std::string> rerank_by_probability(
    const std::vector<std::pair<std::string, double>>& docs) {
    for (const auto& [id, p] : docs) {
        if (!std::isfinite(p)) {
            throw SchemaError("non-finite relevance probability for doc '" + id + "'");
        }
    }
    std::vector<std::pair<std::string, double>> sorted = docs;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> order;
    order.reserve(sorted.size());
    for (auto& [id, p] : sorted) order.push_back(std::move(id));
    return order;
}

double mrr_at_k(const RankedList& r, int k) {
    if (k < 1) throw SchemaError("rank cutoff must be at least 1");
    require_duplicate_free(r);
    for (size_t i = 0; i < r.ranking.size(); ++i) {
        if (grade(r, r.ranking[i]) > 0) {
            size_t rank = i + 1;
            return rank <= static_cast<size_t>(k) ? 1.0 / static_cast<double>(rank) : 0.0;
        }
    }
    return 0.0;
}

double ndcg_at_k(const RankedList& r, int k) {
    if (k < 1) throw SchemaError("rank cutoff must be at least 1");
    require_duplicate_free(r);

    std::vector<int> judged;
    judged.reserve(r.relevance.size());
    bool any_relevant = false;
    for (const auto& [id, rel] : r.relevance) {
        judged.push_back(rel);
        any_relevant = any_relevant || rel > 0;
    }
    if (!any_relevant) {
        throw UndefinedMetricError("NDCG undefined when no judged document is relevant");
    }

    double dcg = 0.0;
    size_t limit = std::min<size_t>(static_cast<size_t>(k), r.ranking.size());
    for (size_t i = 0; i < limit; ++i) {
        dcg += static_cast<double>(grade(r, r.ranking[i])) /
               std::log2(static_cast<double>(i) + 2.0);
    }

    std::sort(judged.begin(), judged.end(), std::greater<int>());
    double idcg = 0.0;
    size_t ideal_limit = std::min<size_t>(static_cast<size_t>(k), judged.size());
    for (size_t i = 0; i < ideal_limit; ++i) {
        idcg += static_cast<double>(judged[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

}  // namespace vieval::metrics_ranking
