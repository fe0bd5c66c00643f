#pragma once

#include <string>
#include <string_view>

namespace council::similarity {

/// Jaro similarity over code points. Two empty strings score 1.
double jaro(std::string_view a, std::string_view b);

/// Jaro-Winkler: the common prefix (at most `max_prefix` code points) boosts
/// the Jaro score by `prefix_scale` when the Jaro score exceeds
/// `boost_threshold`.
double jaro_winkler(std::string_view a, std::string_view b, double prefix_scale = 0.1, int max_prefix = 4,
                    double boost_threshold = 0.7);

/// Normalized indel similarity scaled to 0..100 (the "ratio" of fuzzy
/// string matching): 100 * (1 - indel_distance / (len_a + len_b)).
double ratio(std::string_view a, std::string_view b);

/// `ratio` after sorting whitespace tokens of each string and rejoining
/// them with single spaces.
double token_sort_ratio(std::string_view a, std::string_view b);

/// Classic Metaphone code (uppercase, unbounded length). Non-letters are
/// ignored; input should be ASCII-folded.
std::string metaphone(std::string_view word);

}  // namespace council::similarity
