#pragma once

// Brute-force linkage reference: scans every voter, evaluates each class
// predicate on its own, then applies the resolution rules literally.

#include <algorithm>
#include <cctype>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "council/linkage.hpp"
#include "council/similarity.hpp"
#include "council/text.hpp"

namespace council::testing {

struct OracleVerdict {
  bool matched = false;
  std::string voter_id;
  int lattice = 0;  // 0 full name, 1 first + initial; -1 when no class was hit
  int rank = 0;     // 1-based; 0 when no class was hit
};

inline bool meta_eq(const std::string& a, const std::string& b) {
  auto ca = similarity::metaphone(a);
  auto cb = similarity::metaphone(b);
  return !ca.empty() && ca == cb;
}

inline OracleVerdict oracle_resolve(const linkage::NameCandidate& c, const std::vector<linkage::VoterRecord>& voters,
                                    const linkage::NicknameTable& nick) {
  OracleVerdict out;
  out.lattice = -1;
  const std::string first = text::fold_name(c.first);
  const std::string last = text::fold_name(c.last);
  if (first.empty() || last.empty()) return out;

  const bool initial = c.last_is_initial;
  const int n_classes = initial ? 6 : 12;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_classes));

  for (std::size_t i = 0; i < voters.size(); ++i) {
    const std::string vf = text::fold_name(voters[i].first);
    const std::string vm = text::fold_name(voters[i].middle);
    const std::string vl = text::fold_name(voters[i].last);
    const bool has_m = !vm.empty();

    if (initial) {
      // last initial must agree in every class
      if (vl.empty() || vl[0] != last[0]) continue;
      bool cls[6];
      cls[0] = first == vf;
      cls[1] = nick.related(first, vf);
      cls[2] = has_m && first == vm;
      cls[3] = has_m && nick.related(first, vm);
      cls[4] = meta_eq(first, vf);
      cls[5] = has_m && meta_eq(first, vm);
      for (int r = 0; r < 6; ++r) {
        if (cls[r]) members[static_cast<std::size_t>(r)].push_back(i);
      }
      continue;
    }

    const bool last_exact = last == vl;
    const bool last_meta = meta_eq(last, vl);
    bool cls[12];
    // 1. exact first and last
    cls[0] = first == vf && last_exact;
    // 2. exact last, first by nickname or metaphone
    cls[1] = last_exact && (nick.related(first, vf) || meta_eq(first, vf));
    // 3. exact first, metaphone last
    cls[2] = first == vf && last_meta;
    // 4. nickname first, metaphone last
    cls[3] = nick.related(first, vf) && last_meta;
    // 5-8. first name against the middle name
    cls[4] = has_m && first == vm && last_exact;
    cls[5] = has_m && nick.related(first, vm) && last_exact;
    cls[6] = has_m && first == vm && last_meta;
    cls[7] = has_m && nick.related(first, vm) && last_meta;
    // 9. metaphone first and last
    cls[8] = meta_eq(first, vf) && last_meta;
    // 10-11. metaphone first against middle
    cls[9] = has_m && meta_eq(first, vm) && last_exact;
    cls[10] = has_m && meta_eq(first, vm) && last_meta;
    // 12. last name only
    cls[11] = last_exact || last_meta;
    for (int r = 0; r < 12; ++r) {
      if (cls[r]) members[static_cast<std::size_t>(r)].push_back(i);
    }
  }

  int best = -1;
  for (int r = 0; r < n_classes; ++r) {
    if (!members[static_cast<std::size_t>(r)].empty()) {
      best = r;
      break;
    }
  }
  if (best < 0) return out;
  out.lattice = initial ? 1 : 0;
  out.rank = best + 1;
  const auto& hits = members[static_cast<std::size_t>(best)];
  if (hits.size() == 1) {
    out.matched = true;
    out.voter_id = voters[hits[0]].voter_id;
    return out;
  }
  const bool given_name_hit = !initial && best < 11;
  if (!given_name_hit) return out;

  double top = -1.0;
  int n_top = 0;
  std::size_t win = 0;
  for (auto i : hits) {
    const std::string vl = text::fold_name(voters[i].last);
    if (vl.empty() || vl[0] != last[0]) continue;
    const double s = 0.8 * similarity::jaro_winkler(last, vl) +
                     0.2 * similarity::jaro_winkler(first, text::fold_name(voters[i].first));
    if (s > top) {
      top = s;
      n_top = 1;
      win = i;
    } else if (s == top) {
      ++n_top;
    }
  }
  if (n_top != 1) return out;
  out.matched = true;
  out.voter_id = voters[win].voter_id;
  return out;
}

struct LinkageCase {
  linkage::NameCandidate candidate;
  std::vector<linkage::VoterRecord> voters;
};

inline linkage::NicknameTable oracle_nicknames() {
  linkage::NicknameTable t;
  const char* pairs[][2] = {{"john", "jon"},     {"john", "jack"},      {"katherine", "kate"}, {"katherine", "kathy"},
                            {"catherine", "cathy"}, {"robert", "bob"},   {"robert", "rob"},     {"william", "bill"},
                            {"william", "will"},  {"stephen", "steve"},  {"steven", "steve"},   {"michael", "mike"},
                            {"patricia", "pat"},  {"patrick", "pat"},    {"elizabeth", "liz"},  {"elizabeth", "beth"},
                            {"ann", "annie"},     {"margaret", "peggy"}, {"richard", "dick"},   {"james", "jim"}};
  for (auto& p : pairs) t.add(p[0], p[1]);
  return t;
}

/// Random case from name pools rich in nickname and sound-alike variants.
inline LinkageCase random_linkage_case(std::mt19937_64& rng) {
  static const std::vector<std::string> firsts = {
      "john",  "jon",     "jack",  "katherine", "catherine", "kate",  "kathy",   "cathy", "robert", "bob",
      "rob",   "roberto", "william", "bill",    "will",      "steven", "stephen", "steve", "michael", "micheal",
      "mike",  "ann",     "anne",  "annie",     "pat",       "patricia", "patrick", "liz", "elizabeth", "beth",
      "james", "jim",     "jaime", "margaret",  "peggy",     "richard", "dick",    "rick", "maria",   "mariah"};
  static const std::vector<std::string> lasts = {"smith", "smyth",   "schmidt", "lopez",    "lopes",   "kim",
                                                 "kym",   "chen",    "chan",    "johnson",  "jonson",  "martinez",
                                                 "martines", "lee",  "li",      "nguyen",   "reyes",   "rice",
                                                 "brown", "braun",   "white",   "wight",    "clark",   "clarke"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };

  LinkageCase lc;
  lc.candidate.first = pick(firsts);
  const std::string cand_last = pick(lasts);
  if (coin(0.3)) {
    lc.candidate.last = cand_last.substr(0, 1);
    lc.candidate.last_is_initial = true;
  } else {
    lc.candidate.last = cand_last;
  }
  const int n = std::uniform_int_distribution<int>(1, 14)(rng);
  for (int i = 0; i < n; ++i) {
    linkage::VoterRecord v;
    v.voter_id = "V" + std::to_string(i);
    v.first = coin(0.35) ? lc.candidate.first : pick(firsts);
    v.middle = coin(0.4) ? (coin(0.5) ? lc.candidate.first : pick(firsts)) : "";
    v.last = coin(0.45) ? cand_last : pick(lasts);
    lc.voters.push_back(v);
    if (coin(0.08)) {  // same name, different person
      auto d = v;
      d.voter_id = "V" + std::to_string(i) + "d";
      lc.voters.push_back(d);
    }
  }
  if (coin(0.2)) lc.candidate.first[0] = static_cast<char>(std::toupper(lc.candidate.first[0]));
  return lc;
}

/// Case built so that one voter sits in class `target` (0-11 full name,
/// 12-17 first + initial), surrounded by unrelated voters and occasional
/// same-class rivals.
inline LinkageCase targeted_linkage_case(std::mt19937_64& rng, int target) {
  struct Given {
    const char* name;
    const char* nick;
    const char* sound;  // same Metaphone code, not a listed nickname
  };
  static const Given givens[] = {{"katherine", "kate", "catherine"},
                                 {"steven", "steve", "stephen"},
                                 {"michael", "mike", "micheal"},
                                 {"ann", "annie", "anne"}};
  struct Family {
    const char* name;
    const char* sound;
  };
  static const Family families[] = {{"smith", "smyth"},   {"lopez", "lopes"},       {"kim", "kym"},
                                    {"johnson", "jonson"}, {"martinez", "martines"}, {"brown", "braun"},
                                    {"clark", "clarke"}};
  static const std::vector<std::string> other_first = {"george", "harold", "oscar", "victor", "walter",
                                                       "frank",  "henry",  "louis", "dorothy", "gladys"};
  static const std::vector<std::string> other_last = {"quimby", "fairweather", "ortega", "dubois",
                                                      "sato",   "kowalski",    "abara",  "lindqvist"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  const Given& g = givens[std::uniform_int_distribution<int>(0, 3)(rng)];
  const Family& fam = families[std::uniform_int_distribution<int>(0, 6)(rng)];

  LinkageCase lc;
  lc.candidate.first = g.name;
  const bool initial = target >= 12;
  lc.candidate.last = initial ? std::string(1, fam.name[0]) : fam.name;
  lc.candidate.last_is_initial = initial;

  linkage::VoterRecord t;
  t.voter_id = "T";
  const std::string unrel = pick(other_first);
  const std::string L = fam.name, ML = fam.sound;
  switch (target) {
    case 0: t.first = g.name; t.last = L; break;
    case 1: t.first = coin(0.5) ? g.nick : g.sound; t.last = L; break;
    case 2: t.first = g.name; t.last = ML; break;
    case 3: t.first = g.nick; t.last = ML; break;
    case 4: t.first = unrel; t.middle = g.name; t.last = L; break;
    case 5: t.first = unrel; t.middle = g.nick; t.last = L; break;
    case 6: t.first = unrel; t.middle = g.name; t.last = ML; break;
    case 7: t.first = unrel; t.middle = g.nick; t.last = ML; break;
    case 8: t.first = g.sound; t.last = ML; break;
    case 9: t.first = unrel; t.middle = g.sound; t.last = L; break;
    case 10: t.first = unrel; t.middle = g.sound; t.last = ML; break;
    case 11: t.first = unrel; t.last = coin(0.5) ? L : ML; break;
    case 12: t.first = g.name; break;
    case 13: t.first = g.nick; break;
    case 14: t.first = unrel; t.middle = g.name; break;
    case 15: t.first = unrel; t.middle = g.nick; break;
    case 16: t.first = g.sound; break;
    default: t.first = unrel; t.middle = g.sound; break;
  }
  if (initial) t.last = coin(0.5) ? L : L + "son";
  lc.voters.push_back(t);
  if (coin(0.25)) {  // rival in the same class
    auto r = t;
    r.voter_id = "R";
    if (coin(0.5) && !initial) r.last = (r.last == L) ? L : ML;
    if (coin(0.5)) r.first = (r.first == g.name) ? g.name : r.first;
    lc.voters.push_back(r);
  }
  const int n = std::uniform_int_distribution<int>(0, 10)(rng);
  for (int i = 0; i < n; ++i) {
    linkage::VoterRecord v;
    v.voter_id = "D" + std::to_string(i);
    v.first = pick(other_first);
    v.middle = coin(0.3) ? pick(other_first) : "";
    v.last = coin(0.3) ? L : pick(other_last);
    lc.voters.push_back(v);
  }
  std::shuffle(lc.voters.begin(), lc.voters.end(), rng);
  return lc;
}

/// Alternates targeted and random cases.
inline LinkageCase generate_linkage_case(std::mt19937_64& rng, int index) {
  if (index % 3 == 2) return random_linkage_case(rng);
  return targeted_linkage_case(rng, (index / 3 * 2 + index % 3) % 18);
}

}  // namespace council::testing
