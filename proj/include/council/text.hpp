#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace council::text {

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

/// Whitespace tokenization (space, tab, CR, LF, FF, VT).
std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

/// Strips Latin diacritics (Latin-1 Supplement and Latin Extended-A) and
/// lowercases ASCII. Code points outside those blocks pass through.
std::string fold_diacritics_lower(std::string_view s);

/// Canonical form of a personal-name string for comparisons: diacritics
/// folded, lowercase, apostrophes and periods removed, any other character
/// that is not a letter, digit or hyphen turned into a space, whitespace
/// collapsed.
std::string fold_name(std::string_view s);

/// Word tokens of free text under the same folding as fold_name (hyphens
/// also split words).
std::vector<std::string> word_tokens(std::string_view s);

}  // namespace council::text
