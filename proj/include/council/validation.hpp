#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "council/annotations.hpp"
#include "council/common.hpp"

namespace council::validation {

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

/// Overlap over union span; 0 when the union has zero length.
double interval_iou(Interval a, Interval b);

struct LabeledIssue {
  std::string title;
  std::optional<Interval> span;  // both timestamps present
  std::optional<bool> agendized;
  std::optional<bool> vote;
  std::optional<annotations::VoteTally> vote_res;
  std::optional<annotations::VoteStage> vote_stage;
};

struct IssuePair {
  std::size_t ra = 0;
  std::size_t llm = 0;
  double iou = 0.0;
  double title_sim = 0.0;  // token-sort ratio / 100
  double score = 0.0;      // 0.7 * iou + 0.3 * title_sim
};

struct IssueMatching {
  std::vector<IssuePair> pairs;  // in acceptance order
  std::vector<std::size_t> ra_only;
  std::vector<std::size_t> llm_only;
};

inline constexpr double kIouGate = 0.3;
inline constexpr double kTitleGate = 60.0;

/// IoU >= 0.3 or title ratio (0..100) >= 60.
bool passes_gate(double iou, double title_ratio);

IssuePair score_pair(const LabeledIssue& ra, std::size_t ra_index, const LabeledIssue& llm, std::size_t llm_index);

/// Scores every cross pair, sorts by score descending with (ra, llm) index
/// ascending as the tie-break, then accepts one-to-one pairs that pass the gate.
IssueMatching greedy_issue_match(std::span<const LabeledIssue> ra, std::span<const LabeledIssue> llm);

// ---- confusion matrices ----

class ConfusionMatrix {
 public:
  ConfusionMatrix(std::vector<std::string> truth_labels, std::vector<std::string> predicted_labels);

  void add(const std::string& truth, const std::string& predicted, std::size_t count = 1);

  std::size_t cell(const std::string& truth, const std::string& predicted) const;
  std::size_t row_total(const std::string& truth) const;
  std::size_t column_total(const std::string& predicted) const;
  std::size_t total() const { return total_; }

  /// Diagonal (same label on both sides) over all rows.
  double agreement() const;
  /// Diagonal over the rows whose truth label is in `truth_subset`.
  double agreement_over(std::span<const std::string> truth_subset) const;
  std::size_t agreeing() const;

  const std::vector<std::string>& truth_labels() const { return truth_; }
  const std::vector<std::string>& predicted_labels() const { return predicted_; }

 private:
  std::size_t index_of(const std::vector<std::string>& labels, const std::string& label, const char* side) const;

  std::vector<std::string> truth_;
  std::vector<std::string> predicted_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

/// Builds a matrix from (truth, predicted) pairs. Throws std::invalid_argument
/// on empty input or undeclared labels.
ConfusionMatrix confusion_matrix(std::span<const std::pair<std::string, std::string>> labels,
                                 std::vector<std::string> truth_labels, std::vector<std::string> predicted_labels);

// ---- names ----

enum class NameMode { full, last };

struct SetPrecisionRecall {
  std::size_t llm_matched = 0;
  std::size_t llm_total = 0;
  std::size_t ra_matched = 0;
  std::size_t ra_total = 0;
  double precision() const;  // NaN when llm_total == 0
  double recall() const;     // NaN when ra_total == 0
};

/// Name similarity used for set matching: token-sort ratio on full names, or
/// plain ratio on the last whitespace token.
double name_similarity(std::string_view a, std::string_view b, NameMode mode);

/// Per-meeting name sets (duplicates removed). A name matches when some name
/// in the other set of the same meeting scores >= threshold.
SetPrecisionRecall set_precision_recall(const std::vector<std::vector<std::string>>& ra,
                                        const std::vector<std::vector<std::string>>& llm, double threshold = 70.0,
                                        NameMode mode = NameMode::full);

enum class GovLabel { G, NG, NA };
std::string_view to_string(GovLabel g);

struct LabeledSpeaker {
  std::string meeting;
  std::string speaker_id;
  std::optional<std::string> ra_name;
  std::optional<std::string> llm_name;
  GovLabel ra_gov = GovLabel::NA;
  GovLabel llm_gov = GovLabel::NA;
};

/// A name label is absent when empty, "NONE"/"NA", or listing several names
/// (slash or semicolon separated).
std::optional<std::string> clean_name_label(std::string_view raw);

struct NameAgreement {
  std::size_t both_named = 0;
  std::size_t exact = 0;
  std::size_t fuzzy = 0;  // token-sort ratio >= threshold
  double mean_similarity = 0.0;
  double median_similarity = 0.0;
  std::size_t last_exact = 0;
  double mean_last_similarity = 0.0;
  double median_last_similarity = 0.0;
};

/// Agreement among rows where both sides named the speaker. Names are
/// compared after folding (lowercase, punctuation dropped).
NameAgreement name_agreement(std::span<const LabeledSpeaker> speakers, double threshold = 70.0);

ConfusionMatrix gov_status_matrix(std::span<const LabeledSpeaker> speakers);
ConfusionMatrix name_presence_matrix(std::span<const LabeledSpeaker> speakers);

struct IssueValidationSummary {
  std::size_t meetings = 0;
  std::size_t ra_issues = 0;
  std::size_t llm_issues = 0;
  std::size_t matched = 0;
  std::size_t ra_only = 0;
  std::size_t llm_only = 0;
  double recall = 0.0;
  double precision = 0.0;
  double mean_iou = 0.0;
  double median_iou = 0.0;
  std::size_t agendized_compared = 0, agendized_agree = 0;
  std::size_t vote_compared = 0, vote_agree = 0;
  std::size_t tally_compared = 0, tally_agree = 0;
  std::size_t stage_compared = 0, stage_agree = 0;
};

struct MeetingIssues {
  std::string meeting;
  std::vector<LabeledIssue> ra;
  std::vector<LabeledIssue> llm;
};

IssueValidationSummary summarize_issue_validation(std::span<const MeetingIssues> meetings,
                                                  std::vector<IssueMatching>* matchings = nullptr);

// ---- label files ----

/// Header: meeting,speaker_id,ra_name,llm_name,ra_gov,llm_gov
std::vector<LabeledSpeaker> read_speaker_labels(const std::string& path);
/// Header: meeting,source,title,start,end,agendized,vote,vote_res,vote_stage.
/// Meetings are returned sorted by id, issues in file order per source.
std::vector<MeetingIssues> read_issue_labels(const std::string& path);

}  // namespace council::validation
