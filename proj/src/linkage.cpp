#include "council/linkage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "council/csv.hpp"
#include "council/similarity.hpp"
#include "council/text.hpp"

namespace council::linkage {

using similarity::metaphone;

std::string_view to_string(Lattice l) { return l == Lattice::full_name ? "full_name" : "first_plus_initial"; }

std::string_view to_string(Ownership o) {
  switch (o) {
    case Ownership::owner: return "owner";
    case Ownership::non_owner: return "non_owner";
    case Ownership::unknown: return "unknown";
  }
  return "";
}

NameCandidate candidate_from_name(std::string_view name, std::string city, int year, std::string source_speaker_id) {
  static const std::set<std::string> kSuffixes = {"jr", "sr", "ii", "iii", "iv"};
  NameCandidate c;
  c.city = std::move(city);
  c.year = year;
  c.source_speaker_id = std::move(source_speaker_id);
  auto tokens = text::split_ws(name);
  while (tokens.size() > 1 && kSuffixes.count(text::fold_name(tokens.back()))) tokens.pop_back();
  if (tokens.empty()) return c;
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '.' || s.back() == ',')) s.pop_back();
    return s;
  };
  c.first = strip(tokens.front());
  if (tokens.size() >= 2) {
    c.last = strip(tokens.back());
    c.last_is_initial = text::utf8_decode(c.last).size() == 1;
  }
  return c;
}

void NicknameTable::add(std::string_view formal, std::string_view nickname) {
  auto a = text::fold_name(formal), b = text::fold_name(nickname);
  if (a.empty() || b.empty() || a == b) return;
  if (b < a) std::swap(a, b);
  pairs_.emplace(std::move(a), std::move(b));
}

bool NicknameTable::related(std::string_view x, std::string_view y) const {
  auto a = text::fold_name(x), b = text::fold_name(y);
  if (a.empty() || b.empty() || a == b) return false;
  if (b < a) std::swap(a, b);
  return pairs_.count({a, b}) > 0;
}

NicknameTable NicknameTable::load_csv(const std::string& path) {
  auto t = csv::read_file(path);
  auto fc = t.require("formal"), nc = t.require("nickname");
  NicknameTable out;
  for (const auto& row : t.rows()) out.add(row[fc], row[nc]);
  return out;
}

TranscriptIndex::TranscriptIndex(std::string_view text) : tokens_(text::word_tokens(text)) {
  set_.insert(tokens_.begin(), tokens_.end());
}

bool TranscriptIndex::adjacent(std::string_view first, std::string_view second) const {
  for (std::size_t i = 0; i + 1 < tokens_.size(); ++i) {
    if (tokens_[i] == first && tokens_[i + 1] == second) return true;
  }
  return false;
}

std::optional<NameCandidate> verify_in_transcript(const NameCandidate& c, const TranscriptIndex& transcript) {
  auto first = text::word_tokens(c.first);
  auto last = text::word_tokens(c.last);
  if (first.empty() || last.empty()) return std::nullopt;
  auto all_present = [&](const std::vector<std::string>& toks) {
    return std::all_of(toks.begin(), toks.end(), [&](const std::string& t) { return transcript.contains(t); });
  };
  if (c.last_is_initial) {
    if (!all_present(first)) return std::nullopt;
    if (!transcript.adjacent(first.back(), last.front())) return std::nullopt;
    return c;
  }
  if (!all_present(first)) return std::nullopt;
  if (all_present(last)) return c;
  NameCandidate out = c;
  auto folded = text::utf8_decode(text::trim(c.last));
  out.last = text::utf8_encode(folded.substr(0, 1));
  out.last_is_initial = true;
  return out;
}

double weighted_jw(std::string_view first_a, std::string_view last_a, std::string_view first_b,
                   std::string_view last_b) {
  return 0.8 * similarity::jaro_winkler(last_a, last_b) + 0.2 * similarity::jaro_winkler(first_a, first_b);
}

namespace {

struct Prepared {
  std::string first, last;
  std::string first_code, last_code;
  bool initial = false;
};

Prepared prepare(const NameCandidate& c) {
  Prepared p;
  p.first = text::fold_name(c.first);
  p.last = text::fold_name(c.last);
  p.first_code = metaphone(p.first);
  p.last_code = metaphone(p.last);
  p.initial = c.last_is_initial;
  return p;
}

VoterSlice::Entry make_entry(VoterRecord r) {
  VoterSlice::Entry e;
  e.first = text::fold_name(r.first);
  e.middle = text::fold_name(r.middle);
  e.last = text::fold_name(r.last);
  e.first_code = metaphone(e.first);
  e.middle_code = metaphone(e.middle);
  e.last_code = metaphone(e.last);
  e.record = std::move(r);
  return e;
}

bool codes_match(const std::string& a, const std::string& b) { return !a.empty() && a == b; }

std::optional<MatchPriority> rank_of(const Prepared& c, const VoterSlice::Entry& v, const NicknameTable& nick) {
  if (c.first.empty() || c.last.empty()) return std::nullopt;
  const bool has_middle = !v.middle.empty();
  const bool exF = c.first == v.first;
  const bool nickF = nick.related(c.first, v.first);
  const bool metaF = codes_match(c.first_code, v.first_code);
  const bool exM = has_middle && c.first == v.middle;
  const bool nickM = has_middle && nick.related(c.first, v.middle);
  const bool metaM = has_middle && codes_match(c.first_code, v.middle_code);

  if (c.initial) {
    if (v.last.empty() || v.last[0] != c.last[0]) return std::nullopt;
    const bool classes[kInitialRanks] = {exF, nickF, exM, nickM, metaF, metaM};
    for (int r = 0; r < kInitialRanks; ++r) {
      if (classes[r]) return MatchPriority{Lattice::first_plus_initial, r + 1};
    }
    return std::nullopt;
  }

  const bool exL = c.last == v.last;
  const bool metaL = codes_match(c.last_code, v.last_code);
  const bool classes[kFullNameRanks] = {
      exF && exL,
      exL && (nickF || metaF),
      exF && metaL,
      nickF && metaL,
      exM && exL,
      nickM && exL,
      exM && metaL,
      nickM && metaL,
      metaF && metaL,
      metaM && exL,
      metaM && metaL,
      exL || metaL,
  };
  for (int r = 0; r < kFullNameRanks; ++r) {
    if (classes[r]) return MatchPriority{Lattice::full_name, r + 1};
  }
  return std::nullopt;
}

MatchResult resolve_prepared(const NameCandidate& c, const Prepared& p, const VoterSlice& slice,
                             const NicknameTable& nick) {
  MatchResult out;
  out.candidate = c;
  if (p.first.empty() || p.last.empty()) return out;

  std::span<const std::size_t> pool;
  if (p.initial) {
    pool = slice.by_initial(p.last[0]);
  } else if (!p.last_code.empty()) {
    pool = slice.by_last_code(p.last_code);
  } else {
    pool = slice.by_last(p.last);
  }

  int best = 1 << 20;
  Lattice lattice = Lattice::full_name;
  std::vector<std::size_t> hits;
  for (std::size_t idx : pool) {
    auto pr = rank_of(p, slice.entry(idx), nick);
    if (!pr) continue;
    if (pr->rank < best) {
      best = pr->rank;
      lattice = pr->lattice;
      hits.assign(1, idx);
    } else if (pr->rank == best) {
      hits.push_back(idx);
    }
  }
  if (hits.empty()) return out;
  if (hits.size() == 1) {
    out.voter = slice.entry(hits.front()).record;
    out.priority = MatchPriority{lattice, best};
    return out;
  }

  out.ambiguous = true;
  out.priority = MatchPriority{lattice, best};
  const bool given_name_match = lattice == Lattice::full_name && best < kFullNameRanks;
  if (p.initial || !given_name_match) return out;

  double top = -1.0;
  std::size_t n_top = 0;
  std::size_t winner = 0;
  for (std::size_t idx : hits) {
    const auto& e = slice.entry(idx);
    if (e.last.empty() || e.last[0] != p.last[0]) continue;
    double s = weighted_jw(p.first, p.last, e.first, e.last);
    if (s > top) {
      top = s;
      n_top = 1;
      winner = idx;
    } else if (s == top) {
      ++n_top;
    }
  }
  if (n_top != 1) return out;
  out.ambiguous = false;
  out.voter = slice.entry(winner).record;
  out.tie_break_score = top;
  return out;
}

}  // namespace

std::optional<MatchPriority> assign_priority(const NameCandidate& c, const VoterRecord& v,
                                             const NicknameTable& nicknames) {
  return rank_of(prepare(c), make_entry(v), nicknames);
}

VoterSlice::VoterSlice(std::vector<VoterRecord> voters) {
  entries_.reserve(voters.size());
  for (auto& r : voters) entries_.push_back(make_entry(std::move(r)));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    by_last_[e.last].push_back(i);
    if (!e.last_code.empty()) by_code_[e.last_code].push_back(i);
    if (!e.last.empty()) by_initial_[e.last[0]].push_back(i);
  }
}

namespace {
template <typename Map, typename Key>
std::span<const std::size_t> lookup(const Map& m, const Key& k) {
  auto it = m.find(k);
  if (it == m.end()) return {};
  return it->second;
}
}  // namespace

std::span<const std::size_t> VoterSlice::by_last_code(const std::string& code) const { return lookup(by_code_, code); }
std::span<const std::size_t> VoterSlice::by_last(const std::string& last) const { return lookup(by_last_, last); }
std::span<const std::size_t> VoterSlice::by_initial(char initial) const { return lookup(by_initial_, initial); }

MatchResult resolve_match(const NameCandidate& c, const VoterSlice& slice, const NicknameTable& nicknames) {
  return resolve_prepared(c, prepare(c), slice, nicknames);
}

MatchResult adjacent_year_fallback(const NameCandidate& c, const VoterSlice* previous_year,
                                   const VoterSlice* next_year, const NicknameTable& nicknames) {
  MatchResult none;
  none.candidate = c;
  const Prepared p = prepare(c);
  MatchResult prev = previous_year ? resolve_prepared(c, p, *previous_year, nicknames) : none;
  MatchResult next = next_year ? resolve_prepared(c, p, *next_year, nicknames) : none;
  prev.fallback_year = -1;
  next.fallback_year = 1;
  if (prev.matched() && !next.matched()) return prev;
  if (next.matched() && !prev.matched()) return next;
  if (!prev.matched()) {
    none.ambiguous = prev.ambiguous || next.ambiguous;
    return none;
  }
  const int rp = prev.priority->rank, rn = next.priority->rank;
  if (prev.voter->voter_id == next.voter->voter_id) return rn < rp ? next : prev;
  if (rp < rn) return prev;
  if (rn < rp) return next;
  none.ambiguous = true;
  return none;
}

VoterFile::VoterFile(const std::vector<VoterRecord>& voters) : records_(voters) {
  std::map<std::pair<std::string, int>, std::vector<VoterRecord>> groups;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& v : records_) {
    if (text::trim(v.city).empty()) throw SchemaError("voter " + v.voter_id + " has an empty city");
    if (!seen.emplace(v.voter_id, v.year).second) {
      throw SchemaError("duplicate voter (voter_id, year): (" + v.voter_id + ", " + std::to_string(v.year) + ")");
    }
    groups[{text::fold_name(v.city), v.year}].push_back(v);
  }
  for (auto& [key, recs] : groups) slices_.emplace(key, VoterSlice(std::move(recs)));
}

std::vector<VoterRecord> VoterFile::read_csv(const std::string& path) {
  auto t = csv::read_file(path);
  const std::vector<std::string> cols = {"voter_id", "first", "middle", "last",      "city",   "year",
                                         "age",      "gender", "party", "ethnicity", "address"};
  if (t.header() != cols) {
    throw SchemaError("voter CSV header must be " + text::join(cols, ","));
  }
  std::vector<VoterRecord> out;
  out.reserve(t.size());
  for (const auto& row : t.rows()) {
    VoterRecord v;
    v.voter_id = row[0];
    v.first = row[1];
    v.middle = row[2];
    v.last = row[3];
    v.city = row[4];
    v.year = static_cast<int>(csv::parse_int(row[5]));
    double age = csv::parse_double(row[6]);
    if (!std::isnan(age)) v.age = age;
    v.gender = row[7];
    v.party = row[8];
    v.ethnicity = row[9];
    v.address = row[10];
    out.push_back(std::move(v));
  }
  return out;
}

VoterFile VoterFile::load_csv(const std::string& path) { return VoterFile(read_csv(path)); }

const VoterSlice* VoterFile::slice(std::string_view city, int year) const {
  auto it = slices_.find({text::fold_name(city), year});
  return it == slices_.end() ? nullptr : &it->second;
}

namespace {

LinkOutcome link_one(const LinkTask& task, const VoterFile& voters, const NicknameTable& nicknames,
                     const LinkOptions& options) {
  LinkOutcome out;
  out.speaker_key = task.speaker_key;
  NameCandidate c = candidate_from_name(task.raw_name, task.city, task.year, task.speaker_key);
  out.result.candidate = c;
  if (task.transcript) {
    auto v = verify_in_transcript(c, *task.transcript);
    if (!v) return out;
    c = *v;
  } else if (c.first.empty() || c.last.empty()) {
    return out;
  }
  out.verified = c;
  static const VoterSlice kEmpty;
  const VoterSlice* primary = voters.slice(task.city, task.year);
  out.result = resolve_match(c, primary ? *primary : kEmpty, nicknames);
  if (!out.result.matched() && options.adjacent_year_fallback) {
    auto fb = adjacent_year_fallback(c, voters.slice(task.city, task.year - 1), voters.slice(task.city, task.year + 1),
                                     nicknames);
    if (fb.matched()) {
      out.result = std::move(fb);
    } else {
      out.result.ambiguous = out.result.ambiguous || fb.ambiguous;
    }
  }
  return out;
}

}  // namespace

std::vector<LinkOutcome> link_batch(std::span<const LinkTask> tasks, const VoterFile& voters,
                                    const NicknameTable& nicknames, const LinkOptions& options, Exec exec) {
  std::vector<LinkOutcome> out(tasks.size());
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = link_one(tasks[static_cast<std::size_t>(i)], voters, nicknames, options);
  } else {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = link_one(tasks[static_cast<std::size_t>(i)], voters, nicknames, options);
    }
  }
  return out;
}

std::string normalize_address(std::string_view address) {
  static const std::map<std::string, std::string> kCanon = {
      {"STREET", "ST"},    {"AVENUE", "AVE"},  {"AV", "AVE"},        {"BOULEVARD", "BLVD"}, {"ROAD", "RD"},
      {"DRIVE", "DR"},     {"LANE", "LN"},     {"COURT", "CT"},      {"PLACE", "PL"},       {"TERRACE", "TER"},
      {"CIRCLE", "CIR"},   {"HIGHWAY", "HWY"}, {"PARKWAY", "PKWY"},  {"SQUARE", "SQ"},      {"TRAIL", "TRL"},
      {"NORTH", "N"},      {"SOUTH", "S"},     {"EAST", "E"},        {"WEST", "W"},         {"NORTHEAST", "NE"},
      {"NORTHWEST", "NW"}, {"SOUTHEAST", "SE"}, {"SOUTHWEST", "SW"},
  };
  static const std::set<std::string> kUnit = {"APT", "APARTMENT", "UNIT", "STE", "SUITE", "#"};

  std::string up = text::to_upper_ascii(text::fold_diacritics_lower(address));
  std::string cleaned;
  for (char c : up) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '#') {
      cleaned.push_back(c);
    } else if (c == '.' || c == '\'') {
      // dropped
    } else {
      cleaned.push_back(' ');
    }
  }
  // Separate '#' from what follows so "#4" and "# 4" agree.
  std::string spaced;
  for (char c : cleaned) {
    if (c == '#') {
      spaced += " # ";
    } else {
      spaced.push_back(c);
    }
  }
  auto toks = text::split_ws(spaced);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (kUnit.count(t)) {
      if (i + 1 < toks.size()) {
        std::size_t j = i + 1;
        if (toks[j] == "#" && j + 1 < toks.size()) ++j;
        out.push_back("#" + toks[j]);
        i = j;
      }
      continue;
    }
    auto it = kCanon.find(t);
    out.push_back(it == kCanon.end() ? t : it->second);
  }
  return text::join(out, " ");
}

void PropertyTable::add(std::string_view address, bool owner_occupied) {
  auto key = normalize_address(address);
  if (!key.empty()) table_[key] = owner_occupied;
}

PropertyTable PropertyTable::load_csv(const std::string& path) {
  auto t = csv::read_file(path);
  auto ac = t.require("address"), oc = t.require("owner_occupied");
  PropertyTable out;
  for (const auto& row : t.rows()) {
    auto v = text::to_lower_ascii(text::trim(row[oc]));
    bool owner;
    if (v == "1" || v == "true" || v == "y" || v == "yes") {
      owner = true;
    } else if (v == "0" || v == "false" || v == "n" || v == "no") {
      owner = false;
    } else {
      throw SchemaError("owner_occupied must be 1/0, true/false or Y/N, got '" + row[oc] + "'");
    }
    out.add(row[ac], owner);
  }
  return out;
}

Ownership PropertyTable::lookup(std::string_view voter_address) const {
  auto key = normalize_address(voter_address);
  if (key.empty()) return Ownership::unknown;
  auto it = table_.find(key);
  if (it == table_.end()) return Ownership::unknown;
  return it->second ? Ownership::owner : Ownership::non_owner;
}

Ownership match_address(std::string_view voter_address, const PropertyTable& properties) {
  return properties.lookup(voter_address);
}

double standardized_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw UndefinedError("standardized_difference: each sample needs two values");
  auto moments = [](std::span<const double> x) {
    double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(x.size() - 1)};
  };
  auto [ma, va] = moments(a);
  auto [mb, vb] = moments(b);
  double pooled = (va + vb) / 2.0;
  if (!(pooled > 0.0) || !std::isfinite(pooled)) throw UndefinedError("standardized_difference: zero pooled variance");
  return (ma - mb) / std::sqrt(pooled);
}

}  // namespace council::linkage
