#pragma once

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "council/common.hpp"
#include "council/transcript.hpp"

namespace council::annotations {

using transcript::TimeStamp;

enum class GovStatus { G, NG };
enum class Group { I, L, A, E, B, O, NA };

struct SpeakerAnnotation {
  std::string speaker_id;
  std::optional<std::string> name;  // nullopt for the literal "NA"
  GovStatus gov = GovStatus::NG;
  Group group = Group::I;
};

struct VoteTally {
  int yea = 0;
  int nay = 0;
  int abstain = 0;

  std::string to_string() const;  // "y-n-a"
  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

enum class VoteStage { final, procedural, unclear, none };

struct IssueAnnotation {
  std::string issue;
  std::string summary;
  bool is_public = false;
  bool vote = false;
  std::optional<VoteTally> vote_res;
  std::string vote_outcome;
  VoteStage vote_stage = VoteStage::none;
  std::optional<TimeStamp> timestamp_start;
  std::optional<TimeStamp> timestamp_end;
  bool agendized = false;
  std::optional<int> topic_id;
};

struct TopicEntry {
  int topic_id = 0;
  std::string title;
  std::string description;
  std::vector<std::string> examples;
};

/// Exactly ten topics, ids 0..9, five examples each.
struct TopicTaxonomy {
  std::vector<TopicEntry> entries;
};

struct StanceScore {
  std::string comment_id;
  double score = 0.0;
};

std::string_view to_string(GovStatus g);
std::string_view to_string(Group g);
std::string_view to_string(VoteStage s);

// ---- ingestion (throw SchemaError) ----

/// Speaker map object keyed by speaker id. Keys are returned sorted.
std::vector<SpeakerAnnotation> parse_speaker_map(std::string_view json);
/// "y-n-a" or "None".
std::optional<VoteTally> parse_vote_result(std::string_view s);
/// Issue array. `agendized` and `topic_id` are optional extra keys; when
/// `agendized` is absent it defaults to vote_stage != none.
std::vector<IssueAnnotation> parse_issues(std::string_view json);
TopicTaxonomy parse_taxonomy(std::string_view json);
/// Topic classification output: issue id (string) -> topic id.
std::map<std::string, int> parse_topic_assignments(std::string_view json);
/// Stance output: list of [id, score] pairs.
std::vector<StanceScore> parse_stance(std::string_view json);

// ---- vote logic ----

/// Whether abstentions count against unanimity.
enum class AbstentionPolicy { neutral, breaks_unanimity };

/// nay == 0 and yea > 0 (abstain == 0 as well under breaks_unanimity).
/// Throws std::invalid_argument for a missing tally.
bool is_unanimous(const std::optional<VoteTally>& t, AbstentionPolicy policy = AbstentionPolicy::neutral);

/// Passes iff yea > nay. Close iff tied, or moving a single vote between
/// yea and nay ties it or changes the outcome.
bool is_close_vote(const std::optional<VoteTally>& t);

/// Issue, summary and vote outcome joined by spaces.
std::string ceremonial_text(const IssueAnnotation& issue);
bool is_ceremonial_text(std::string_view text);
bool classify_ceremonial(const IssueAnnotation& issue);

/// Collapses each maximal run of consecutive consent-calendar items (vote
/// outcome mentioning "consent", identical tally) into its first item.
std::vector<IssueAnnotation> collapse_consent_calendar(const std::vector<IssueAnnotation>& issues);

struct ShareCount {
  std::size_t unanimous = 0;
  std::size_t votes = 0;
  double share() const;  // NaN when votes == 0
};

struct UnanimityAudit {
  ShareCount raw;
  ShareCount consent_collapsed;
  ShareCount ceremonial_excluded;
  ShareCount ceremonial_only;
  ShareCount final_votes;
  ShareCount procedural_votes;
  std::size_t close_votes = 0;
  std::size_t failed_votes = 0;
};

/// Unanimity shares over issues with a recorded tally, per meeting list.
UnanimityAudit unanimity_audit(const std::vector<std::vector<IssueAnnotation>>& meetings,
                               AbstentionPolicy policy = AbstentionPolicy::neutral);

// ---- keyword rates ----

enum class KeywordTopic { parking, traffic, affordability, crime, schools, infrastructure, aesthetics, environment };

const std::array<KeywordTopic, 8>& keyword_topics();
std::string_view to_string(KeywordTopic t);
/// Case-insensitive, word-bounded pattern for the topic.
const std::string& keyword_pattern(KeywordTopic t);

std::size_t keyword_count(std::string_view text, KeywordTopic topic);
/// Matches per 1,000 whitespace-delimited words. Throws UndefinedError on
/// text with no words.
double keyword_rate(std::string_view text, KeywordTopic topic);

// ---- topic shares ----

/// Share of issue time per topic. When `agendized_only`, unagendized issues
/// are skipped. Issues without both timestamps or a topic are skipped and
/// noted in `warnings`. Empty map when nothing qualifies.
std::map<int, double> topic_shares(const std::vector<IssueAnnotation>& issues, bool agendized_only,
                                   Warnings* warnings = nullptr);

/// Fraction of agendized issues (with a topic) per topic.
std::map<int, double> agenda_topic_proportions(const std::vector<IssueAnnotation>& issues);

// ---- output ----

/// Normalized issue table, one row per issue, with a leading meeting column.
void write_issue_table_header(std::ostream& out);
void write_issue_rows(std::ostream& out, std::string_view meeting_id, const std::vector<IssueAnnotation>& issues);

}  // namespace council::annotations
