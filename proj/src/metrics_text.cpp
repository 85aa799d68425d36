#include "vieval/metrics_text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "vieval/unicode.hpp"

namespace vieval::metrics_text {

namespace {

bool is_terminal_punct(char32_t cp) {
    switch (cp) {
        case U'.':
        case U',':
        case U'!':
        case U'?':
        case U';':
        case U':':
        case U'…':  // horizontal ellipsis
            return true;
        default:
            return false;
    }
}

std::vector<char32_t> collapse_ws(const std::vector<char32_t>& cps) {
    std::vector<char32_t> out;
    bool in_space = false;
    for (char32_t cp : cps) {
        if (unicode::is_space(cp)) {
            in_space = !out.empty();
            continue;
        }
        if (in_space) out.push_back(U' ');
        in_space = false;
        out.push_back(cp);
    }
    return out;
}

std::vector<std::string> split_ws(const std::vector<char32_t>& cps) {
    std::vector<std::string> tokens;
    std::vector<char32_t> cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(unicode::encode_utf8(cur));
            cur.clear();
        }
    };
    for (char32_t cp : cps) {
        if (unicode::is_space(cp)) {
            flush();
        } else {
            cur.push_back(cp);
        }
    }
    flush();
    return tokens;
}

void require_references(const TextPair& p) {
    if (p.references.empty()) throw SchemaError("text pair has no references");
}

// Multiset intersection size of n-gram counts; n-grams are joined with an
// unambiguous separator so a flat hash map suffices.
using Counts = std::unordered_map<std::string, int64_t>;

Counts ngram_counts(const std::vector<std::string>& tokens, size_t n) {
    Counts counts;
    if (tokens.size() < n || n == 0) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (size_t j = 0; j < n; ++j) {
            if (j) key.push_back('\x1f');
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

int64_t overlap_count(const Counts& a, const Counts& b) {
    int64_t total = 0;
    for (const auto& [key, count] : a) {
        auto it = b.find(key);
        if (it != b.end()) total += std::min(count, it->second);
    }
    return total;
}

int64_t total_count(const Counts& c) {
    int64_t total = 0;
    for (const auto& [key, count] : c) total += count;
    return total;
}

double f_measure(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

template <typename Seq>
double levenshtein(const Seq& a, const Seq& b) {
    const size_t n = a.size(), m = b.size();
    if (n == 0) return static_cast<double>(m);
    if (m == 0) return static_cast<double>(n);
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[m]);
}

}  // namespace

std::string normalize_answer(const std::string& text) {
    std::vector<char32_t> cps = unicode::decode_utf8(unicode::to_lower(unicode::to_nfc(text)));
    cps = collapse_ws(cps);
    while (!cps.empty() && (is_terminal_punct(cps.back()) || unicode::is_space(cps.back()))) {
        cps.pop_back();
    }
    return unicode::encode_utf8(cps);
}

std::vector<std::string> tokenize(const std::string& text) {
    return split_ws(unicode::decode_utf8(unicode::to_nfc(text)));
}

std::vector<std::string> tokenize_lower(const std::string& text) {
    return split_ws(unicode::decode_utf8(unicode::to_lower(unicode::to_nfc(text))));
}

int exact_match(const TextPair& p) {
    require_references(p);
    const std::string pred = normalize_answer(p.prediction);
    for (const auto& ref : p.references) {
        if (pred == normalize_answer(ref)) return 1;
    }
    return 0;
}

double token_f1(const TextPair& p) {
    require_references(p);
    const auto pred_tokens = tokenize(normalize_answer(p.prediction));
    const Counts pred_counts = ngram_counts(pred_tokens, 1);
    double best = 0.0;
    for (const auto& ref : p.references) {
        const auto ref_tokens = tokenize(normalize_answer(ref));
        if (pred_tokens.empty() && ref_tokens.empty()) {
            best = std::max(best, 1.0);
            continue;
        }
        if (pred_tokens.empty() || ref_tokens.empty()) continue;
        int64_t overlap = overlap_count(pred_counts, ngram_counts(ref_tokens, 1));
        double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
        double recall = static_cast<double>(overlap) / static_cast<double>(ref_tokens.size());
        best = std::max(best, f_measure(precision, recall));
    }
    return best;
}

double rouge(const TextPair& p, RougeVariant variant) {
    require_references(p);
    const auto pred_tokens = tokenize_lower(p.prediction);
    double best = 0.0;
    for (const auto& ref : p.references) {
        const auto ref_tokens = tokenize_lower(ref);
        if (pred_tokens.empty() && ref_tokens.empty()) {
            best = std::max(best, 1.0);
            continue;
        }
        double score = 0.0;
        if (variant == RougeVariant::RL) {
            if (!pred_tokens.empty() && !ref_tokens.empty()) {
                double lcs = static_cast<double>(lcs_length(pred_tokens, ref_tokens));
                score = f_measure(lcs / pred_tokens.size(), lcs / ref_tokens.size());
            }
        } else {
            size_t n = variant == RougeVariant::R1 ? 1 : 2;
            Counts pc = ngram_counts(pred_tokens, n);
            Counts rc = ngram_counts(ref_tokens, n);
            int64_t pt = total_count(pc), rt = total_count(rc);
            if (pt > 0 && rt > 0) {
                double overlap = static_cast<double>(overlap_count(pc, rc));
                score = f_measure(overlap / pt, overlap / rt);
            }
        }
        best = std::max(best, score);
    }
    return best;
}

FragmentStats fragment_stats(const std::string& article, const std::string& summary) {
    const auto a = tokenize(article);
    const auto s = tokenize(summary);
    if (s.empty()) throw UndefinedMetricError("fragment stats undefined for an empty summary");

    // Greedy extractive-fragment matching: scan the summary left to right and,
    // at each position, take the longest span shared with the article.
    std::vector<size_t> fragment_lengths;
    size_t i = 0;
    while (i < s.size()) {
        size_t best_len = 0;
        for (size_t j = 0; j < a.size();) {
            if (a[j] == s[i]) {
                size_t ii = i, jj = j;
                while (ii < s.size() && jj < a.size() && a[jj] == s[ii]) {
                    ++ii;
                    ++jj;
                }
                best_len = std::max(best_len, ii - i);
                j = jj;
            } else {
                ++j;
            }
        }
        if (best_len > 0) fragment_lengths.push_back(best_len);
        i += std::max<size_t>(best_len, 1);
    }

    FragmentStats stats;
    double sum = 0.0, sum_sq = 0.0;
    for (size_t len : fragment_lengths) {
        sum += static_cast<double>(len);
        sum_sq += static_cast<double>(len) * static_cast<double>(len);
    }
    stats.coverage = sum / static_cast<double>(s.size());
    stats.density = sum_sq / static_cast<double>(s.size());
    stats.compression = static_cast<double>(a.size()) / static_cast<double>(s.size());
    return stats;
}

EditMetrics edit_metrics(const std::string& reference, const std::string& hypothesis) {
    // Normalize both sides the same way: NFC plus collapsed whitespace, so
    // that canonically equivalent encodings have distance zero.
    const std::vector<char32_t> ref_cps = collapse_ws(unicode::decode_utf8(unicode::to_nfc(reference)));
    const std::vector<char32_t> hyp_cps = collapse_ws(unicode::decode_utf8(unicode::to_nfc(hypothesis)));
    const auto ref_words = split_ws(ref_cps);
    const auto hyp_words = split_ws(hyp_cps);

    EditMetrics m;
    m.ced = levenshtein(ref_cps, hyp_cps);
    m.wed = levenshtein(ref_words, hyp_words);
    if (!ref_cps.empty()) m.cer = m.ced / static_cast<double>(ref_cps.size());
    if (!ref_words.empty()) m.wer = m.wed / static_cast<double>(ref_words.size());
    return m;
}

double perplexity(const std::vector<double>& token_logprobs) {
    if (token_logprobs.empty()) {
        throw UndefinedMetricError("perplexity undefined for an empty token sequence");
    }
    double sum = 0.0;
    for (double lp : token_logprobs) sum += lp;
    return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

double bleu(const std::vector<TextPair>& corpus) {
    if (corpus.empty()) throw UndefinedMetricError("corpus-level score undefined for an empty corpus");
    constexpr size_t kMaxOrder = 4;
    int64_t matches[kMaxOrder] = {0, 0, 0, 0};
    int64_t totals[kMaxOrder] = {0, 0, 0, 0};
    int64_t hyp_len = 0, ref_len = 0;

    for (const auto& pair : corpus) {
        require_references(pair);
        const auto hyp_tokens = tokenize(pair.prediction);
        hyp_len += static_cast<int64_t>(hyp_tokens.size());

        // Effective reference length: the reference closest in length to the
        // hypothesis, ties resolved toward the shorter one.
        int64_t best_ref = -1;
        std::vector<std::vector<std::string>> ref_token_lists;
        for (const auto& ref : pair.references) {
            ref_token_lists.push_back(tokenize(ref));
            int64_t len = static_cast<int64_t>(ref_token_lists.back().size());
            if (best_ref < 0 ||
                std::llabs(len - static_cast<int64_t>(hyp_tokens.size())) <
                    std::llabs(best_ref - static_cast<int64_t>(hyp_tokens.size())) ||
                (std::llabs(len - static_cast<int64_t>(hyp_tokens.size())) ==
                     std::llabs(best_ref - static_cast<int64_t>(hyp_tokens.size())) &&
                 len < best_ref)) {
                best_ref = len;
            }
        }
        ref_len += best_ref;

        for (size_t n = 1; n <= kMaxOrder; ++n) {
            Counts hyp_counts = ngram_counts(hyp_tokens, n);
            // Clip each n-gram count by its maximum count over the references.
            Counts max_ref;
            for (const auto& ref_tokens : ref_token_lists) {
                for (const auto& [key, count] : ngram_counts(ref_tokens, n)) {
                    auto& slot = max_ref[key];
                    slot = std::max(slot, count);
                }
            }
            matches[n - 1] += overlap_count(hyp_counts, max_ref);
            totals[n - 1] += total_count(hyp_counts);
        }
    }

    if (hyp_len == 0) return 0.0;
    // Add-one smoothing on orders >= 2; order 1 is left exact so an empty
    // unigram overlap still yields zero.
    double log_sum = 0.0;
    for (size_t n = 1; n <= kMaxOrder; ++n) {
        double num = static_cast<double>(matches[n - 1]);
        double den = static_cast<double>(totals[n - 1]);
        if (n >= 2) {
            num += 1.0;
            den += 1.0;
        }
        if (num == 0.0 || den == 0.0) return 0.0;
        log_sum += std::log(num / den);
    }
    double geo_mean = std::exp(log_sum / static_cast<double>(kMaxOrder));
    double bp = hyp_len >= ref_len
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return bp * geo_mean;
}

namespace {

// Single-reference score: weighted harmonic mean of the enhanced length
// penalty, the n-gram position-difference penalty, and harmonic
// precision/recall.
double hlepor_single(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                     const HleporParams& params) {
    if (hyp.empty() && ref.empty()) return 1.0;
    if (hyp.empty() || ref.empty()) return 0.0;
    const double c = static_cast<double>(hyp.size());
    const double r = static_cast<double>(ref.size());

    double elp = c == r ? 1.0 : (c < r ? std::exp(1.0 - r / c) : std::exp(1.0 - c / r));

    // One-to-one word alignment, hypothesis left to right. Multiple candidate
    // positions are disambiguated first by matching neighbor words, then by
    // nearest position.
    std::vector<bool> used(ref.size(), false);
    double npd_sum = 0.0;
    int64_t aligned = 0;
    for (size_t i = 0; i < hyp.size(); ++i) {
        int best_j = -1;
        int best_context = -1;
        size_t best_dist = 0;
        for (size_t j = 0; j < ref.size(); ++j) {
            if (used[j] || ref[j] != hyp[i]) continue;
            int context = 0;
            if (i > 0 && j > 0 && hyp[i - 1] == ref[j - 1]) ++context;
            if (i + 1 < hyp.size() && j + 1 < ref.size() && hyp[i + 1] == ref[j + 1]) ++context;
            size_t dist = i > j ? i - j : j - i;
            if (best_j < 0 || context > best_context ||
                (context == best_context && dist < best_dist)) {
                best_j = static_cast<int>(j);
                best_context = context;
                best_dist = dist;
            }
        }
        if (best_j >= 0) {
            used[static_cast<size_t>(best_j)] = true;
            ++aligned;
            double pos_hyp = static_cast<double>(i + 1) / c;
            double pos_ref = static_cast<double>(best_j + 1) / r;
            npd_sum += std::fabs(pos_hyp - pos_ref);
        }
    }
    double npd = npd_sum / c;
    double pos_penalty = std::exp(-npd);

    double precision = static_cast<double>(aligned) / c;
    double recall = static_cast<double>(aligned) / r;
    if (precision == 0.0 || recall == 0.0) return 0.0;
    double hpr = (params.alpha + params.beta) /
                 (params.alpha / recall + params.beta / precision);

    double weight_sum = params.weight_elp + params.weight_pos + params.weight_pr;
    return weight_sum /
           (params.weight_elp / elp + params.weight_pos / pos_penalty + params.weight_pr / hpr);
}

}  // namespace

double hlepor(const TextPair& p, const HleporParams& params) {
    require_references(p);
    const auto hyp = tokenize(p.prediction);
    double best = 0.0;
    for (const auto& ref : p.references) {
        best = std::max(best, hlepor_single(hyp, tokenize(ref), params));
    }
    return best;
}

}  // namespace vieval::metrics_text
