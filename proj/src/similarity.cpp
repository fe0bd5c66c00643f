#include "council/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "council/text.hpp"

namespace council::similarity {

namespace {

double jaro_u32(const std::u32string& a, const std::u32string& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const std::size_t la = a.size(), lb = b.size();
  const std::size_t window = std::max<std::size_t>(std::max(la, lb) / 2, 1) - 1;
  std::vector<char> ma(la, 0), mb(lb, 0);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < la; ++i) {
    std::size_t lo = i > window ? i - window : 0;
    std::size_t hi = std::min(lb, i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!mb[j] && a[i] == b[j]) {
        ma[i] = mb[j] = 1;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t transpositions = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < la; ++i) {
    if (!ma[i]) continue;
    while (!mb[k]) ++k;
    if (a[i] != b[k]) ++transpositions;
    ++k;
  }
  const double m = static_cast<double>(matches);
  return (m / static_cast<double>(la) + m / static_cast<double>(lb) +
          (m - static_cast<double>(transpositions) / 2.0) / m) /
         3.0;
}

// Length of the longest common subsequence.
std::size_t lcs_length(const std::u32string& a, const std::u32string& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double jaro(std::string_view a, std::string_view b) { return jaro_u32(text::utf8_decode(a), text::utf8_decode(b)); }

double jaro_winkler(std::string_view a, std::string_view b, double prefix_scale, int max_prefix,
                    double boost_threshold) {
  auto ua = text::utf8_decode(a), ub = text::utf8_decode(b);
  double sim = jaro_u32(ua, ub);
  if (sim <= boost_threshold) return sim;
  std::size_t limit = std::min({ua.size(), ub.size(), static_cast<std::size_t>(std::max(max_prefix, 0))});
  std::size_t prefix = 0;
  while (prefix < limit && ua[prefix] == ub[prefix]) ++prefix;
  return sim + static_cast<double>(prefix) * prefix_scale * (1.0 - sim);
}

double ratio(std::string_view a, std::string_view b) {
  auto ua = text::utf8_decode(a), ub = text::utf8_decode(b);
  const std::size_t total = ua.size() + ub.size();
  if (total == 0) return 100.0;
  const std::size_t dist = total - 2 * lcs_length(ua, ub);
  return 100.0 * (1.0 - static_cast<double>(dist) / static_cast<double>(total));
}

double token_sort_ratio(std::string_view a, std::string_view b) {
  auto sorted = [](std::string_view s) {
    auto toks = text::split_ws(s);
    std::sort(toks.begin(), toks.end());
    return text::join(toks, " ");
  };
  return ratio(sorted(a), sorted(b));
}

// Rule set follows the classic Metaphone as ported in commons-codec, with
// no cap on code length.
std::string metaphone(std::string_view word) {
  std::string w;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (w.empty()) return "";
  if (w.size() == 1) return w;

  // Initial-letter exceptions.
  switch (w[0]) {
    case 'K':
    case 'G':
    case 'P':
      if (w[1] == 'N') w.erase(0, 1);
      break;
    case 'A':
      if (w[1] == 'E') w.erase(0, 1);
      break;
    case 'W':
      if (w[1] == 'R') {
        w.erase(0, 1);
      } else if (w[1] == 'H') {
        w.erase(0, 1);
        w[0] = 'W';
      }
      break;
    case 'X':
      w[0] = 'S';
      break;
    default:
      break;
  }

  const std::size_t n = w.size();
  auto at = [&](std::size_t i) -> char { return i < n ? w[i] : '\0'; };
  auto is_vowel = [&](std::size_t i) {
    char c = at(i);
    return c == 'A' || c == 'E' || c == 'I' || c == 'O' || c == 'U';
  };
  auto front_vowel = [&](std::size_t i) {
    char c = at(i);
    return c == 'E' || c == 'I' || c == 'Y';
  };
  auto prev_is = [&](std::size_t i, char c) { return i > 0 && w[i - 1] == c; };
  auto next_is = [&](std::size_t i, char c) { return i + 1 < n && w[i + 1] == c; };
  auto region = [&](std::size_t i, std::string_view s) { return i + s.size() <= n && w.compare(i, s.size(), s) == 0; };
  auto is_last = [&](std::size_t i) { return i + 1 == n; };

  std::string code;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = w[i];
    if (c != 'C' && prev_is(i, c)) continue;
    switch (c) {
      case 'A':
      case 'E':
      case 'I':
      case 'O':
      case 'U':
        if (i == 0) code.push_back(c);
        break;
      case 'B':
        if (!(prev_is(i, 'M') && is_last(i))) code.push_back('B');
        break;
      case 'C':
        if (prev_is(i, 'S') && !is_last(i) && front_vowel(i + 1)) break;  // SCI, SCE, SCY
        if (region(i, "CIA")) {
          code.push_back('X');
          break;
        }
        if (!is_last(i) && front_vowel(i + 1)) {
          code.push_back('S');
          break;
        }
        if (prev_is(i, 'S') && next_is(i, 'H')) {
          code.push_back('K');
          break;
        }
        if (next_is(i, 'H')) {
          code.push_back('X');
          break;
        }
        code.push_back('K');
        break;
      case 'D':
        if (i + 2 < n && next_is(i, 'G') && front_vowel(i + 2)) {
          code.push_back('J');
          i += 2;
        } else {
          code.push_back('T');
        }
        break;
      case 'G': {
        if (i + 2 == n && next_is(i, 'H')) break;                  // terminal GH
        if (i + 2 < n && next_is(i, 'H') && !is_vowel(i + 2)) break;  // GH before consonant
        if (i > 0 && (region(i, "GN") || region(i, "GNED"))) break;
        const bool hard = prev_is(i, 'G');
        if (!is_last(i) && front_vowel(i + 1) && !hard) {
          code.push_back('J');
        } else {
          code.push_back('K');
        }
        break;
      }
      case 'H':
        if (is_last(i)) break;
        if (i > 0) {
          char p = w[i - 1];
          if (p == 'C' || p == 'S' || p == 'P' || p == 'T' || p == 'G') break;
        }
        if (is_vowel(i + 1)) code.push_back('H');
        break;
      case 'F':
      case 'J':
      case 'L':
      case 'M':
      case 'N':
      case 'R':
        code.push_back(c);
        break;
      case 'K':
        if (i == 0 || !prev_is(i, 'C')) code.push_back('K');
        break;
      case 'P':
        code.push_back(next_is(i, 'H') ? 'F' : 'P');
        break;
      case 'Q':
        code.push_back('K');
        break;
      case 'S':
        code.push_back(region(i, "SH") || region(i, "SIO") || region(i, "SIA") ? 'X' : 'S');
        break;
      case 'T':
        if (region(i, "TIA") || region(i, "TIO")) {
          code.push_back('X');
        } else if (region(i, "TCH")) {
          // silent
        } else if (region(i, "TH")) {
          code.push_back('0');
        } else {
          code.push_back('T');
        }
        break;
      case 'V':
        code.push_back('F');
        break;
      case 'W':
      case 'Y':
        if (!is_last(i) && is_vowel(i + 1)) code.push_back(c);
        break;
      case 'X':
        code.append("KS");
        break;
      case 'Z':
        code.push_back('S');
        break;
      default:
        break;
    }
  }
  return code;
}

}  // namespace council::similarity
