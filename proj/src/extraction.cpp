#include "vieval/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vieval/unicode.hpp"

namespace vieval::extraction {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool scalar_fields_from(const json& obj, std::map<std::string, Scalar>& fields) {
    if (!obj.is_object()) return false;
    for (const auto& [key, value] : obj.items()) {
        if (value.is_number_integer()) {
            fields[key] = value.get<int64_t>();
        } else if (value.is_number_unsigned()) {
            fields[key] = static_cast<int64_t>(value.get<uint64_t>());
        } else if (value.is_number_float()) {
            fields[key] = value.get<double>();
        } else if (value.is_string()) {
            fields[key] = value.get<std::string>();
        } else if (value.is_boolean()) {
            fields[key] = static_cast<int64_t>(value.get<bool>() ? 1 : 0);
        }
    }
    return !fields.empty();
}

// Parse a candidate object region, applying increasingly aggressive repairs:
// backtick quotes, trailing commas, unquoted keys, then single quotes.
bool tolerant_parse(const std::string& region, std::map<std::string, Scalar>& fields) {
    std::vector<std::string> attempts;
    attempts.push_back(region);

    std::string repaired = region;
    std::replace(repaired.begin(), repaired.end(), '`', '"');
    repaired = std::regex_replace(repaired, std::regex(R"(,\s*([}\]]))"), "$1");
    repaired = std::regex_replace(
        repaired, std::regex(R"(([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)(\s*:))"), "$1\"$2\"$3");
    attempts.push_back(repaired);

    std::string single_quoted = repaired;
    std::replace(single_quoted.begin(), single_quoted.end(), '\'', '"');
    attempts.push_back(single_quoted);

    for (const auto& attempt : attempts) {
        json parsed = json::parse(attempt, nullptr, false);
        if (parsed.is_discarded()) continue;
        std::map<std::string, Scalar> out;
        if (scalar_fields_from(parsed, out)) {
            fields = std::move(out);
            return true;
        }
    }
    return false;
}

// Byte range of the first balanced {...} starting at `open`; npos when the
// braces never balance. Quote-unaware by design: generations are too messy
// for string-literal tracking to pay off.
size_t balanced_close(const std::string& text, size_t open) {
    int depth = 0;
    for (size_t i = open; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') {
            --depth;
            if (depth == 0) return i;
        }
    }
    return std::string::npos;
}

bool try_fenced_block(const std::string& text, ParsedAnswer& answer) {
    size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string::npos) {
        size_t tag_begin = pos + 3;
        size_t nl = text.find('\n', tag_begin);
        size_t brace = text.find('{', tag_begin);
        std::string tag = trim(text.substr(tag_begin, std::min(nl, brace) == std::string::npos
                                                          ? std::string::npos
                                                          : std::min(nl, brace) - tag_begin));
        std::transform(tag.begin(), tag.end(), tag.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (tag != "json") {
            pos = tag_begin;
            continue;
        }
        size_t content_begin = nl != std::string::npos && (brace == std::string::npos || nl < brace)
                                   ? nl + 1
                                   : brace;
        if (content_begin == std::string::npos) return false;
        size_t fence_end = text.find("```", content_begin);
        std::string content = fence_end == std::string::npos
                                  ? text.substr(content_begin)
                                  : text.substr(content_begin, fence_end - content_begin);
        if (tolerant_parse(trim(content), answer.fields)) {
            answer.span_begin = content_begin;
            answer.span_end = fence_end == std::string::npos ? text.size() : fence_end;
            answer.parse_path = ParsePath::fenced_block;
            return true;
        }
        pos = fence_end == std::string::npos ? text.size() : fence_end + 3;
    }
    return false;
}

bool try_bare_object(const std::string& text, const std::vector<std::string>& expected_keys,
                     ParsedAnswer& answer) {
    for (size_t open = text.find('{'); open != std::string::npos;
         open = text.find('{', open + 1)) {
        size_t close = balanced_close(text, open);
        if (close == std::string::npos) continue;
        std::string region = text.substr(open, close - open + 1);
        bool mentions_key = false;
        for (const auto& key : expected_keys) {
            if (region.find(key) != std::string::npos) {
                mentions_key = true;
                break;
            }
        }
        if (!mentions_key) continue;
        if (tolerant_parse(region, answer.fields)) {
            answer.span_begin = open;
            answer.span_end = close + 1;
            answer.parse_path = ParsePath::bare_object;
            return true;
        }
    }
    return false;
}

// Scan a value starting at `pos`: quoted, backtick-quoted, or bare up to the
// next delimiter. Returns the value text and advances `end` past it.
std::optional<std::string> scan_value(const std::string& text, size_t pos, size_t& end) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) return std::nullopt;
    auto quoted = [&](char q, size_t skip) -> std::optional<std::string> {
        size_t start = pos + skip;
        size_t close = text.find(std::string(skip, q), start);
        if (close == std::string::npos) return std::nullopt;
        end = close + skip;
        return text.substr(start, close - start);
    };
    if (text.compare(pos, 3, "```") == 0) return quoted('`', 3);
    if (text[pos] == '`') return quoted('`', 1);
    if (text[pos] == '"') return quoted('"', 1);
    if (text[pos] == '\'') return quoted('\'', 1);
    size_t stop = pos;
    while (stop < text.size() && text[stop] != ',' && text[stop] != '}' && text[stop] != '\n' &&
           text[stop] != '\r') {
        ++stop;
    }
    end = stop;
    std::string bare = trim(text.substr(pos, stop - pos));
    if (bare.empty()) return std::nullopt;
    return bare;
}

Scalar classify_scalar(const std::string& value) {
    static const std::regex int_re(R"(^[+-]?\d+$)");
    static const std::regex real_re(R"(^[+-]?(\d+\.\d*|\.\d+)([eE][+-]?\d+)?$)");
    if (std::regex_match(value, int_re)) {
        try {
            return static_cast<int64_t>(std::stoll(value));
        } catch (const std::exception&) {
            return value;
        }
    }
    if (std::regex_match(value, real_re)) {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            return value;
        }
    }
    return value;
}

bool try_regex_fallback(const std::string& text, const std::vector<std::string>& expected_keys,
                        ParsedAnswer& answer) {
    size_t span_begin = std::string::npos, span_end = 0;
    for (const auto& key : expected_keys) {
        std::string escaped = std::regex_replace(key, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)");
        std::regex key_re("[\"'`]?" + escaped + "[\"'`]?\\s*[:=]");
        std::smatch m;
        if (!std::regex_search(text, m, key_re)) continue;
        size_t value_pos = static_cast<size_t>(m.position(0) + m.length(0));
        size_t value_end = value_pos;
        auto value = scan_value(text, value_pos, value_end);
        if (!value) continue;
        answer.fields[key] = classify_scalar(*value);
        span_begin = std::min(span_begin, static_cast<size_t>(m.position(0)));
        span_end = std::max(span_end, value_end);
    }
    if (answer.fields.empty()) return false;
    answer.span_begin = span_begin;
    answer.span_end = span_end;
    answer.parse_path = ParsePath::regex_fallback;
    return true;
}

// ---- math equivalence ----

struct Rational {
    // value = num / den, den > 0, reduced
    long long num = 0;
    long long den = 1;
};

std::optional<Rational> make_rational(long long num, long long den) {
    if (den == 0) return std::nullopt;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational{num, den};
}

bool rational_equal(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
}

std::optional<long long> parse_ll(const std::string& s) {
    static const std::regex int_re(R"(^[+-]?\d+$)");
    if (!std::regex_match(s, int_re)) return std::nullopt;
    try {
        return std::stoll(s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<Rational> parse_rational(const std::string& s) {
    static const std::regex frac_re(R"(^([+-]?\d+)\s*/\s*([+-]?\d+)$)");
    static const std::regex latex_frac_re(R"(^[+-]?\\[dt]?frac\{([+-]?\d+)\}\{([+-]?\d+)\}$)");
    static const std::regex dec_re(R"(^([+-]?)(\d*)\.(\d+)$)");
    std::smatch m;
    if (auto i = parse_ll(s)) return make_rational(*i, 1);
    if (std::regex_match(s, m, frac_re)) {
        auto n = parse_ll(m[1]), d = parse_ll(m[2]);
        if (n && d) return make_rational(*n, *d);
        return std::nullopt;
    }
    if (std::regex_match(s, m, latex_frac_re)) {
        auto n = parse_ll(m[1]), d = parse_ll(m[2]);
        if (n && d) {
            long long sign = s[0] == '-' ? -1 : 1;
            return make_rational(sign * *n, *d);
        }
        return std::nullopt;
    }
    if (std::regex_match(s, m, dec_re)) {
        std::string digits = m[2].str() + m[3].str();
        if (digits.size() > 17) return std::nullopt;  // exactness not guaranteed
        long long num = 0, den = 1;
        for (char c : digits) num = num * 10 + (c - '0');
        for (size_t i = 0; i < m[3].str().size(); ++i) den *= 10;
        if (m[1].str() == "-") num = -num;
        return make_rational(num, den);
    }
    return std::nullopt;
}

std::string last_boxed_content(const std::string& text) {
    std::vector<size_t> starts;
    for (size_t pos = text.find("\\boxed{"); pos != std::string::npos;
         pos = text.find("\\boxed{", pos + 1)) {
        starts.push_back(pos);
    }
    for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
        size_t open = *it + 6;  // at '{'
        size_t close = balanced_close(text, open);
        if (close != std::string::npos) return text.substr(open + 1, close - open - 1);
    }
    return text;
}

std::string normalize_math(const std::string& text) {
    std::string s = last_boxed_content(trim(text));
    // surrounding \( \), $ $, and stray \left \right
    s = std::regex_replace(s, std::regex(R"(\\\(|\\\)|\$)"), "");
    s = std::regex_replace(s, std::regex(R"(\\left|\\right)"), "");
    // \text{...} is unit/annotation text: drop it entirely
    s = std::regex_replace(s, std::regex(R"(\\text\{[^{}]*\})"), "");
    // thousands separators and percent-to-nothing are NOT equivalent; only
    // commas are stripped
    s.erase(std::remove(s.begin(), s.end(), ','), s.end());
    s = unicode::to_lower(trim(s));
    // trailing unit words after a number
    static const std::regex unit_re(
        R"((\d)\s*(mm|cm|km|m|kg|g|ml|l|s|h|%|độ|giờ|phút|giây|đồng|usd|vnd)\s*$)");
    s = std::regex_replace(s, unit_re, "$1");
    // collapse internal whitespace
    std::string out;
    bool in_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = !out.empty();
            continue;
        }
        if (in_space) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

}  // namespace

ParsedAnswer extract_structured(const std::string& generation,
                                const std::vector<std::string>& expected_keys) {
    ParsedAnswer answer;
    try {
        if (try_fenced_block(generation, answer)) return answer;
        if (try_bare_object(generation, expected_keys, answer)) return answer;
        if (try_regex_fallback(generation, expected_keys, answer)) return answer;
    } catch (const std::regex_error&) {
        // fall through to the empty answer: extraction never throws
    }
    answer = ParsedAnswer{};
    return answer;
}

std::optional<std::string> extract_boxed(const std::string& generation) {
    std::vector<size_t> starts;
    for (size_t pos = generation.find("\\boxed{"); pos != std::string::npos;
         pos = generation.find("\\boxed{", pos + 1)) {
        starts.push_back(pos);
    }
    for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
        size_t open = *it + 6;
        size_t close = balanced_close(generation, open);
        if (close != std::string::npos) {
            return generation.substr(open + 1, close - open - 1);
        }
    }
    ParsedAnswer parsed = extract_structured(generation, {"answer"});
    auto it = parsed.fields.find("answer");
    if (it == parsed.fields.end()) return std::nullopt;
    if (auto* s = std::get_if<std::string>(&it->second)) return *s;
    if (auto* i = std::get_if<int64_t>(&it->second)) return std::to_string(*i);
    if (auto* d = std::get_if<double>(&it->second)) {
        std::ostringstream os;
        os << *d;
        return os.str();
    }
    return std::nullopt;
}

bool math_equivalent(const std::string& a, const std::string& b) {
    std::string na = normalize_math(a);
    std::string nb = normalize_math(b);
    auto ra = parse_rational(na);
    auto rb = parse_rational(nb);
    if (ra && rb) return rational_equal(*ra, *rb);
    return na == nb;
}

std::optional<int> match_label(const ParsedAnswer& parsed,
                               const std::vector<std::string>& label_names, int n_labels) {
    if (n_labels < 2) throw SchemaError("label matching needs at least two labels");

    auto in_range = [&](long long v) { return v >= 0 && v < n_labels; };
    auto from_scalar = [&](const Scalar& value) -> std::optional<int> {
        if (const auto* i = std::get_if<int64_t>(&value)) {
            if (in_range(*i)) return static_cast<int>(*i);
            return std::nullopt;
        }
        if (const auto* d = std::get_if<double>(&value)) {
            if (*d == std::floor(*d) && in_range(static_cast<long long>(*d))) {
                return static_cast<int>(*d);
            }
            return std::nullopt;
        }
        std::string text = trim(std::get<std::string>(value));
        while (!text.empty() && (text.back() == '.' || text.back() == ')')) text.pop_back();
        if (text.empty()) return std::nullopt;
        if (text.size() == 1 && std::isalpha(static_cast<unsigned char>(text[0]))) {
            int pos = std::toupper(static_cast<unsigned char>(text[0])) - 'A';
            if (in_range(pos)) return pos;
            return std::nullopt;
        }
        if (auto num = parse_ll(text)) {
            if (in_range(*num)) return static_cast<int>(*num);
            return std::nullopt;
        }
        auto normalize = [](const std::string& s) {
            return unicode::strip_diacritics(unicode::to_lower(s));
        };
        std::string norm = normalize(text);
        for (size_t i = 0; i < label_names.size() && i < static_cast<size_t>(n_labels); ++i) {
            if (norm == normalize(label_names[i])) return static_cast<int>(i);
        }
        return std::nullopt;
    };

    // Answer-bearing keys first, then anything else; confidence fields never
    // decide the label.
    static const std::vector<std::string> kPreferred = {"sentiment",       "tag",   "choice",
                                                        "toxicity_level",  "label", "answer",
                                                        "translation"};
    for (const auto& key : kPreferred) {
        auto it = parsed.fields.find(key);
        if (it == parsed.fields.end()) continue;
        if (auto v = from_scalar(it->second)) return v;
    }
    for (const auto& [key, value] : parsed.fields) {
        if (key == "confident_level" || key == "confidence") continue;
        if (std::find(kPreferred.begin(), kPreferred.end(), key) != kPreferred.end()) continue;
        if (auto v = from_scalar(value)) return v;
    }
    return std::nullopt;
}

}  // namespace vieval::extraction
