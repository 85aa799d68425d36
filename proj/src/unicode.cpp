#include "vieval/unicode.hpp"

#include <algorithm>

namespace vieval::unicode {

#include "unicode_tables.inc"

namespace {

unsigned char combining_class(char32_t cp) {
    auto it = std::lower_bound(std::begin(kCombiningClass), std::end(kCombiningClass), cp,
                               [](const CccRow& r, char32_t v) { return r.cp < v; });
    if (it != std::end(kCombiningClass) && it->cp == cp) return it->ccc;
    return 0;
}

const DecompRow* find_decomp(char32_t cp) {
    auto it = std::lower_bound(std::begin(kFullDecomp), std::end(kFullDecomp), cp,
                               [](const DecompRow& r, char32_t v) { return r.cp < v; });
    if (it != std::end(kFullDecomp) && it->cp == cp) return &*it;
    return nullptr;
}

char32_t compose_pair(char32_t first, char32_t second) {
    auto it = std::lower_bound(std::begin(kComposePairs), std::end(kComposePairs),
                               std::pair<char32_t, char32_t>{first, second},
                               [](const ComposePair& r, const std::pair<char32_t, char32_t>& v) {
                                   return r.first != v.first ? r.first < v.first
                                                             : r.second < v.second;
                               });
    if (it != std::end(kComposePairs) && it->first == first && it->second == second)
        return it->composed;
    return 0;
}

std::vector<char32_t> nfd_codepoints(const std::vector<char32_t>& in) {
    std::vector<char32_t> out;
    out.reserve(in.size());
    for (char32_t cp : in) {
        if (const DecompRow* row = find_decomp(cp)) {
            // Rows are fully decomposed already (base + up to two marks).
            for (char32_t c : row->seq)
                if (c) out.push_back(c);
        } else {
            out.push_back(cp);
        }
    }
    // Canonical ordering: stable-sort maximal runs of nonzero-ccc marks.
    std::size_t i = 0;
    while (i < out.size()) {
        if (combining_class(out[i]) == 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < out.size() && combining_class(out[j]) != 0) ++j;
        std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(i),
                         out.begin() + static_cast<std::ptrdiff_t>(j),
                         [](char32_t a, char32_t b) {
                             return combining_class(a) < combining_class(b);
                         });
        i = j;
    }
    return out;
}

std::vector<char32_t> nfc_codepoints(const std::vector<char32_t>& in) {
    std::vector<char32_t> d = nfd_codepoints(in);
    std::vector<char32_t> out;
    out.reserve(d.size());
    // Pairwise canonical composition: try to merge each mark with the last
    // starter unless a mark of the same or higher class blocks it.
    std::ptrdiff_t last_starter = -1;
    unsigned char last_ccc = 0;
    for (char32_t cp : d) {
        unsigned char ccc = combining_class(cp);
        if (last_starter >= 0 && ccc != 0 && last_ccc < ccc) {
            if (char32_t composed =
                    compose_pair(out[static_cast<std::size_t>(last_starter)], cp)) {
                out[static_cast<std::size_t>(last_starter)] = composed;
                continue;  // last_ccc unchanged: the mark was absorbed
            }
        }
        if (ccc == 0 && last_starter >= 0 && !out.empty() &&
            static_cast<std::size_t>(last_starter) == out.size() - 1) {
            // Adjacent starter pair (e.g. base + precomposed accent char).
            if (char32_t composed =
                    compose_pair(out[static_cast<std::size_t>(last_starter)], cp)) {
                out[static_cast<std::size_t>(last_starter)] = composed;
                last_ccc = 0;
                continue;
            }
        }
        out.push_back(cp);
        if (ccc == 0) {
            last_starter = static_cast<std::ptrdiff_t>(out.size()) - 1;
            last_ccc = 0;
        } else {
            last_ccc = ccc;
        }
    }
    return out;
}

}  // namespace

std::vector<char32_t> decode_utf8(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    const auto* b = reinterpret_cast<const unsigned char*>(s.data());
    const std::size_t n = s.size();
    while (i < n) {
        unsigned char c = b[i];
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6 && i + 1 < n && (b[i + 1] & 0xC0) == 0x80) {
            cp = static_cast<char32_t>((c & 0x1F) << 6 | (b[i + 1] & 0x3F));
            len = 2;
            if (cp < 0x80) cp = 0xFFFD;
        } else if ((c >> 4) == 0xE && i + 2 < n && (b[i + 1] & 0xC0) == 0x80 &&
                   (b[i + 2] & 0xC0) == 0x80) {
            cp = static_cast<char32_t>((c & 0x0F) << 12 | (b[i + 1] & 0x3F) << 6 |
                                       (b[i + 2] & 0x3F));
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((c >> 3) == 0x1E && i + 3 < n && (b[i + 1] & 0xC0) == 0x80 &&
                   (b[i + 2] & 0xC0) == 0x80 && (b[i + 3] & 0xC0) == 0x80) {
            cp = static_cast<char32_t>((c & 0x07) << 18 | (b[i + 1] & 0x3F) << 12 |
                                       (b[i + 2] & 0x3F) << 6 | (b[i + 3] & 0x3F));
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::string to_nfd(const std::string& s) { return encode_utf8(nfd_codepoints(decode_utf8(s))); }

std::string to_nfc(const std::string& s) { return encode_utf8(nfc_codepoints(decode_utf8(s))); }

std::string to_lower(const std::string& s) {
    std::vector<char32_t> cps = decode_utf8(s);
    for (char32_t& cp : cps) {
        if (cp >= 'A' && cp <= 'Z') {
            cp += 0x20;
            continue;
        }
        auto it = std::lower_bound(std::begin(kLowerMap), std::end(kLowerMap), cp,
                                   [](const CasePair& r, char32_t v) { return r.upper < v; });
        if (it != std::end(kLowerMap) && it->upper == cp) cp = it->lower;
    }
    return encode_utf8(cps);
}

std::string strip_diacritics(const std::string& s) {
    std::vector<char32_t> cps = nfd_codepoints(decode_utf8(s));
    std::vector<char32_t> out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (combining_class(cp) != 0) continue;  // drop marks
        switch (cp) {
            case 0x0111: cp = 'd'; break;  // đ
            case 0x0110: cp = 'D'; break;  // Đ
            case 0x00F8: cp = 'o'; break;  // ø
            case 0x00D8: cp = 'O'; break;  // Ø
            case 0x0142: cp = 'l'; break;  // ł
            case 0x0141: cp = 'L'; break;  // Ł
            default: break;
        }
        out.push_back(cp);
    }
    return encode_utf8(out);
}

bool has_diacritics(const std::string& s) {
    std::vector<char32_t> cps = nfd_codepoints(decode_utf8(s));
    for (char32_t cp : cps) {
        if (combining_class(cp) != 0) return true;
        if (cp == 0x0111 || cp == 0x0110) return true;  // đ/Đ
    }
    return false;
}

bool is_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680: case 0x2000: case 0x2001: case 0x2002:
        case 0x2003: case 0x2004: case 0x2005: case 0x2006: case 0x2007:
        case 0x2008: case 0x2009: case 0x200A: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return false;
    }
}

std::size_t length(const std::string& s) { return decode_utf8(s).size(); }

}  // namespace vieval::unicode
