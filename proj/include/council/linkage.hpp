#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "council/common.hpp"

namespace council::linkage {

struct NameCandidate {
  std::string first;
  std::string last;
  bool last_is_initial = false;
  std::string city;
  int year = 0;
  std::string source_speaker_id;
};

/// Splits an extracted name ("Maria Lopez", "Olivia M.", "Dr. Ann Lee Jr.")
/// into first and last tokens. Generational suffixes are dropped; a
/// one-letter last token becomes an initial. Single-token names yield a
/// candidate with an empty last name.
NameCandidate candidate_from_name(std::string_view name, std::string city = {}, int year = 0,
                                  std::string source_speaker_id = {});

struct VoterRecord {
  std::string voter_id;
  std::string first;
  std::string middle;
  std::string last;
  std::string city;
  int year = 0;
  std::optional<double> age;
  std::string gender;
  std::string party;
  std::string ethnicity;
  std::string address;
};

enum class Lattice { full_name, first_plus_initial };
std::string_view to_string(Lattice l);

struct MatchPriority {
  Lattice lattice = Lattice::full_name;
  int rank = 0;  // 1 is best
  friend bool operator==(const MatchPriority&, const MatchPriority&) = default;
};

inline constexpr int kFullNameRanks = 12;
inline constexpr int kInitialRanks = 6;

struct MatchResult {
  NameCandidate candidate;
  std::optional<VoterRecord> voter;
  std::optional<MatchPriority> priority;  // best nonempty class, also when ambiguous
  std::optional<double> tie_break_score;
  int fallback_year = 0;  // -1, 0 or +1
  bool ambiguous = false;  // a best class existed but could not be resolved

  bool matched() const { return voter.has_value(); }
};

/// Symmetric, case-insensitive formal-name <-> nickname relation.
class NicknameTable {
 public:
  void add(std::string_view formal, std::string_view nickname);
  /// True when the two names differ and one is listed as a nickname of the other.
  bool related(std::string_view a, std::string_view b) const;
  std::size_t size() const { return pairs_.size(); }

  /// CSV with header `formal,nickname`.
  static NicknameTable load_csv(const std::string& path);

 private:
  std::set<std::pair<std::string, std::string>> pairs_;
};

/// Word tokens of a meeting transcript, for hallucination checks.
class TranscriptIndex {
 public:
  explicit TranscriptIndex(std::string_view text);
  bool contains(std::string_view token) const { return set_.count(std::string(token)) > 0; }
  /// True when `first` is immediately followed by `second` somewhere.
  bool adjacent(std::string_view first, std::string_view second) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_set<std::string> set_;
};

/// Confirms an extracted name against its transcript. Full names need both
/// parts present (anywhere); when only the first name is present the last
/// name is cut to its initial. First name + initial must appear
/// consecutively. Returns nullopt on rejection.
std::optional<NameCandidate> verify_in_transcript(const NameCandidate& c, const TranscriptIndex& transcript);

/// 0.8 * JW(last) + 0.2 * JW(first).
double weighted_jw(std::string_view first_a, std::string_view last_a, std::string_view first_b,
                   std::string_view last_b);

/// Best lattice class linking the candidate to the voter, if any.
std::optional<MatchPriority> assign_priority(const NameCandidate& c, const VoterRecord& v,
                                             const NicknameTable& nicknames);

/// Voters of one (city, year), indexed for lookup by last name, last-name
/// Metaphone code and last initial. Read-only after construction.
class VoterSlice {
 public:
  struct Entry {
    VoterRecord record;
    std::string first, middle, last;                 // folded
    std::string first_code, middle_code, last_code;  // Metaphone
  };

  VoterSlice() = default;
  explicit VoterSlice(std::vector<VoterRecord> voters);

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Entries that could fall in some full-name class (exact or phonetic last).
  std::span<const std::size_t> by_last_code(const std::string& code) const;
  std::span<const std::size_t> by_last(const std::string& last) const;
  /// Entries whose folded last name starts with `initial`.
  std::span<const std::size_t> by_initial(char initial) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_last_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_code_;
  std::unordered_map<char, std::vector<std::size_t>> by_initial_;
};

/// Resolves a verified candidate against one slice: the best nonempty class
/// wins when it has one voter; several voters are disambiguated by
/// weighted_jw only for complete last names with a given-name match (ranks
/// 1-11), after requiring the last-name initial to agree. Exact score ties
/// stay unmatched.
MatchResult resolve_match(const NameCandidate& c, const VoterSlice& slice, const NicknameTable& nicknames);

/// Adjacent-year retry for an unmatched candidate. Either slice may be null.
MatchResult adjacent_year_fallback(const NameCandidate& c, const VoterSlice* previous_year,
                                   const VoterSlice* next_year, const NicknameTable& nicknames);

/// All voters keyed by (folded city, year).
class VoterFile {
 public:
  VoterFile() = default;
  explicit VoterFile(const std::vector<VoterRecord>& voters);

  /// CSV header: voter_id,first,middle,last,city,year,age,gender,party,ethnicity,address
  static VoterFile load_csv(const std::string& path);
  static std::vector<VoterRecord> read_csv(const std::string& path);

  const VoterSlice* slice(std::string_view city, int year) const;
  const std::vector<VoterRecord>& records() const { return records_; }

 private:
  std::vector<VoterRecord> records_;
  std::map<std::pair<std::string, int>, VoterSlice> slices_;
};

struct LinkTask {
  std::string speaker_key;
  std::string raw_name;
  std::string city;
  int year = 0;
  const TranscriptIndex* transcript = nullptr;  // null skips verification
};

struct LinkOptions {
  bool adjacent_year_fallback = true;
};

struct LinkOutcome {
  std::string speaker_key;
  std::optional<NameCandidate> verified;  // nullopt: rejected before matching
  MatchResult result;
};

/// Parse, verify, resolve and (optionally) fall back for every task. The
/// parallel path distributes tasks over OpenMP threads; output order and
/// content are identical to the serial path.
std::vector<LinkOutcome> link_batch(std::span<const LinkTask> tasks, const VoterFile& voters,
                                    const NicknameTable& nicknames, const LinkOptions& options = {},
                                    Exec exec = Exec::parallel);

// ---- property matching ----

/// Uppercase, punctuation stripped, street suffixes and directionals
/// abbreviated, unit designators rewritten as `#<unit>`.
std::string normalize_address(std::string_view address);

enum class Ownership { owner, non_owner, unknown };
std::string_view to_string(Ownership o);

class PropertyTable {
 public:
  void add(std::string_view address, bool owner_occupied);
  /// CSV header: address,owner_occupied (1/0, true/false, Y/N).
  static PropertyTable load_csv(const std::string& path);
  Ownership lookup(std::string_view voter_address) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, bool> table_;
};

Ownership match_address(std::string_view voter_address, const PropertyTable& properties);

// ---- balance ----

/// (mean_a - mean_b) / sqrt((var_a + var_b) / 2) with n-1 variances.
/// Throws UndefinedError for zero pooled variance or samples under two.
double standardized_difference(std::span<const double> a, std::span<const double> b);

}  // namespace council::linkage
