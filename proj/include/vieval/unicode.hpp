#pragma once

#include <cstdint>
#include <string>
#include <vector>

/// Minimal Unicode support for Vietnamese (and general Latin) text.
///
/// Covers exactly what evaluation needs: UTF-8 <-> codepoint conversion,
/// canonical normalization (NFC/NFD) for the Latin repertoire, lowercasing,
/// diacritic stripping ("Việt" -> "Viet", "đ" -> "d") and diacritic
/// detection. Codepoints outside the covered ranges pass through unchanged.
namespace vieval::unicode {

/// Decode UTF-8 into codepoints. Invalid bytes decode to U+FFFD.
std::vector<char32_t> decode_utf8(const std::string& s);

/// Encode codepoints back to UTF-8.
std::string encode_utf8(const std::vector<char32_t>& cps);

/// Canonical decomposition + canonical ordering of combining marks.
std::string to_nfd(const std::string& s);

/// Canonical composition; the normal form used before text comparison.
std::string to_nfc(const std::string& s);

/// Full lowercase for ASCII + Latin Extended (handles "Đ" -> "đ", "Ẵ" -> "ẵ").
std::string to_lower(const std::string& s);

/// Remove diacritics: decompose, drop combining marks, and map the handful
/// of Latin letters whose "plain" form is not reached by decomposition
/// (đ/Đ -> d/D). "Việt" -> "Viet".
std::string strip_diacritics(const std::string& s);

/// True when the string contains at least one combining mark after NFD or a
/// letter such as đ whose plain form differs.
bool has_diacritics(const std::string& s);

/// ASCII + Unicode space characters recognised as whitespace by tokenizers.
bool is_space(char32_t cp);

/// Number of Unicode codepoints in the UTF-8 string.
std::size_t length(const std::string& s);

}  // namespace vieval::unicode
