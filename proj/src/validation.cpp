#include "council/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "council/csv.hpp"
#include "council/similarity.hpp"
#include "council/text.hpp"
#include "council/transcript.hpp"

namespace council::validation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio_of(std::size_t num, std::size_t den) {
  return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string last_token(std::string_view s) {
  auto toks = text::split_ws(s);
  return toks.empty() ? std::string() : toks.back();
}

}  // namespace

double interval_iou(Interval a, Interval b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  if (!(uni > 0.0)) return 0.0;
  return inter / uni;
}

bool passes_gate(double iou, double title_ratio) { return iou >= kIouGate || title_ratio >= kTitleGate; }

IssuePair score_pair(const LabeledIssue& ra, std::size_t ra_index, const LabeledIssue& llm, std::size_t llm_index) {
  IssuePair p;
  p.ra = ra_index;
  p.llm = llm_index;
  p.iou = (ra.span && llm.span) ? interval_iou(*ra.span, *llm.span) : 0.0;
  p.title_sim = similarity::token_sort_ratio(ra.title, llm.title) / 100.0;
  p.score = 0.7 * p.iou + 0.3 * p.title_sim;
  return p;
}

IssueMatching greedy_issue_match(std::span<const LabeledIssue> ra, std::span<const LabeledIssue> llm) {
  std::vector<IssuePair> all;
  all.reserve(ra.size() * llm.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    for (std::size_t j = 0; j < llm.size(); ++j) all.push_back(score_pair(ra[i], i, llm[j], j));
  }
  std::stable_sort(all.begin(), all.end(), [](const IssuePair& a, const IssuePair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.ra != b.ra) return a.ra < b.ra;
    return a.llm < b.llm;
  });

  IssueMatching out;
  std::vector<bool> ra_used(ra.size(), false), llm_used(llm.size(), false);
  for (const auto& p : all) {
    if (ra_used[p.ra] || llm_used[p.llm]) continue;
    const double title_ratio = similarity::token_sort_ratio(ra[p.ra].title, llm[p.llm].title);
    if (!passes_gate(p.iou, title_ratio)) continue;
    ra_used[p.ra] = llm_used[p.llm] = true;
    out.pairs.push_back(p);
  }
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (!ra_used[i]) out.ra_only.push_back(i);
  }
  for (std::size_t j = 0; j < llm.size(); ++j) {
    if (!llm_used[j]) out.llm_only.push_back(j);
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> truth_labels, std::vector<std::string> predicted_labels)
    : truth_(std::move(truth_labels)), predicted_(std::move(predicted_labels)) {
  if (truth_.empty() || predicted_.empty()) throw std::invalid_argument("confusion matrix needs declared labels");
  counts_.assign(truth_.size() * predicted_.size(), 0);
}

std::size_t ConfusionMatrix::index_of(const std::vector<std::string>& labels, const std::string& label,
                                      const char* side) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::invalid_argument(std::string("undeclared ") + side + " label '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

void ConfusionMatrix::add(const std::string& truth, const std::string& predicted, std::size_t count) {
  const auto r = index_of(truth_, truth, "truth");
  const auto c = index_of(predicted_, predicted, "predicted");
  counts_[r * predicted_.size() + c] += count;
  total_ += count;
}

std::size_t ConfusionMatrix::cell(const std::string& truth, const std::string& predicted) const {
  return counts_[index_of(truth_, truth, "truth") * predicted_.size() + index_of(predicted_, predicted, "predicted")];
}

std::size_t ConfusionMatrix::row_total(const std::string& truth) const {
  const auto r = index_of(truth_, truth, "truth");
  std::size_t s = 0;
  for (std::size_t c = 0; c < predicted_.size(); ++c) s += counts_[r * predicted_.size() + c];
  return s;
}

std::size_t ConfusionMatrix::column_total(const std::string& predicted) const {
  const auto c = index_of(predicted_, predicted, "predicted");
  std::size_t s = 0;
  for (std::size_t r = 0; r < truth_.size(); ++r) s += counts_[r * predicted_.size() + c];
  return s;
}

std::size_t ConfusionMatrix::agreeing() const {
  std::size_t s = 0;
  for (std::size_t r = 0; r < truth_.size(); ++r) {
    auto it = std::find(predicted_.begin(), predicted_.end(), truth_[r]);
    if (it != predicted_.end()) s += counts_[r * predicted_.size() + static_cast<std::size_t>(it - predicted_.begin())];
  }
  return s;
}

double ConfusionMatrix::agreement() const {
  if (total_ == 0) throw std::invalid_argument("agreement of an empty confusion matrix");
  return static_cast<double>(agreeing()) / static_cast<double>(total_);
}

double ConfusionMatrix::agreement_over(std::span<const std::string> truth_subset) const {
  std::size_t num = 0, den = 0;
  for (const auto& t : truth_subset) {
    const auto r = index_of(truth_, t, "truth");
    den += row_total(t);
    auto it = std::find(predicted_.begin(), predicted_.end(), t);
    if (it != predicted_.end()) num += counts_[r * predicted_.size() + static_cast<std::size_t>(it - predicted_.begin())];
  }
  if (den == 0) throw std::invalid_argument("no rows with the requested truth labels");
  return static_cast<double>(num) / static_cast<double>(den);
}

ConfusionMatrix confusion_matrix(std::span<const std::pair<std::string, std::string>> labels,
                                 std::vector<std::string> truth_labels, std::vector<std::string> predicted_labels) {
  if (labels.empty()) throw std::invalid_argument("confusion_matrix: empty input");
  ConfusionMatrix m(std::move(truth_labels), std::move(predicted_labels));
  for (const auto& [t, p] : labels) m.add(t, p);
  return m;
}

double SetPrecisionRecall::precision() const { return ratio_of(llm_matched, llm_total); }
double SetPrecisionRecall::recall() const { return ratio_of(ra_matched, ra_total); }

double name_similarity(std::string_view a, std::string_view b, NameMode mode) {
  if (mode == NameMode::full) return similarity::token_sort_ratio(a, b);
  return similarity::ratio(last_token(a), last_token(b));
}

SetPrecisionRecall set_precision_recall(const std::vector<std::vector<std::string>>& ra,
                                        const std::vector<std::vector<std::string>>& llm, double threshold,
                                        NameMode mode) {
  if (ra.size() != llm.size()) throw std::invalid_argument("set_precision_recall: meeting counts differ");
  SetPrecisionRecall out;
  auto unique = [](const std::vector<std::string>& names) {
    std::set<std::string> s;
    for (const auto& n : names) {
      auto t = text::trim(n);
      if (!t.empty()) s.insert(std::string(t));
    }
    return std::vector<std::string>(s.begin(), s.end());
  };
  auto any_match = [&](const std::string& name, const std::vector<std::string>& other) {
    return std::any_of(other.begin(), other.end(),
                       [&](const std::string& o) { return name_similarity(name, o, mode) >= threshold; });
  };
  for (std::size_t m = 0; m < ra.size(); ++m) {
    auto r = unique(ra[m]);
    auto l = unique(llm[m]);
    out.ra_total += r.size();
    out.llm_total += l.size();
    for (const auto& n : r) out.ra_matched += any_match(n, l) ? 1 : 0;
    for (const auto& n : l) out.llm_matched += any_match(n, r) ? 1 : 0;
  }
  return out;
}

std::string_view to_string(GovLabel g) {
  switch (g) {
    case GovLabel::G: return "G";
    case GovLabel::NG: return "NG";
    case GovLabel::NA: return "NA";
  }
  return "";
}

namespace {

GovLabel parse_gov(std::string_view s) {
  auto t = text::to_upper_ascii(text::trim(s));
  if (t == "G") return GovLabel::G;
  if (t == "NG") return GovLabel::NG;
  if (t == "NA" || t.empty()) return GovLabel::NA;
  throw SchemaError("government label must be G, NG or NA, got '" + std::string(s) + "'");
}

}  // namespace

std::optional<std::string> clean_name_label(std::string_view raw) {
  auto t = std::string(text::trim(raw));
  if (t.empty()) return std::nullopt;
  auto up = text::to_upper_ascii(t);
  if (up == "NONE" || up == "NA" || up == "N/A") return std::nullopt;
  if (t.find('/') != std::string::npos || t.find(';') != std::string::npos) return std::nullopt;
  return t;
}

NameAgreement name_agreement(std::span<const LabeledSpeaker> speakers, double threshold) {
  NameAgreement out;
  std::vector<double> sims, last_sims;
  for (const auto& s : speakers) {
    if (!s.ra_name || !s.llm_name) continue;
    const auto a = text::fold_name(*s.ra_name);
    const auto b = text::fold_name(*s.llm_name);
    ++out.both_named;
    if (a == b) ++out.exact;
    const double sim = similarity::token_sort_ratio(a, b);
    if (sim >= threshold) ++out.fuzzy;
    sims.push_back(sim);
    const auto la = last_token(a), lb = last_token(b);
    if (la == lb) ++out.last_exact;
    last_sims.push_back(similarity::ratio(la, lb));
  }
  out.mean_similarity = mean_of(sims);
  out.median_similarity = median_of(sims);
  out.mean_last_similarity = mean_of(last_sims);
  out.median_last_similarity = median_of(last_sims);
  return out;
}

ConfusionMatrix gov_status_matrix(std::span<const LabeledSpeaker> speakers) {
  ConfusionMatrix m({"G", "NG", "NA"}, {"G", "NG", "NA"});
  for (const auto& s : speakers) m.add(std::string(to_string(s.ra_gov)), std::string(to_string(s.llm_gov)));
  return m;
}

ConfusionMatrix name_presence_matrix(std::span<const LabeledSpeaker> speakers) {
  ConfusionMatrix m({"named", "none"}, {"named", "none"});
  for (const auto& s : speakers) m.add(s.ra_name ? "named" : "none", s.llm_name ? "named" : "none");
  return m;
}

IssueValidationSummary summarize_issue_validation(std::span<const MeetingIssues> meetings,
                                                  std::vector<IssueMatching>* matchings) {
  IssueValidationSummary out;
  std::vector<double> ious;
  for (const auto& m : meetings) {
    ++out.meetings;
    out.ra_issues += m.ra.size();
    out.llm_issues += m.llm.size();
    auto res = greedy_issue_match(m.ra, m.llm);
    out.matched += res.pairs.size();
    out.ra_only += res.ra_only.size();
    out.llm_only += res.llm_only.size();
    for (const auto& p : res.pairs) {
      const auto& a = m.ra[p.ra];
      const auto& b = m.llm[p.llm];
      ious.push_back(p.iou);
      if (a.agendized && b.agendized) {
        ++out.agendized_compared;
        out.agendized_agree += *a.agendized == *b.agendized ? 1 : 0;
      }
      if (a.vote && b.vote) {
        ++out.vote_compared;
        out.vote_agree += *a.vote == *b.vote ? 1 : 0;
        if (*a.vote && *b.vote) {
          if (a.vote_res && b.vote_res) {
            ++out.tally_compared;
            out.tally_agree += *a.vote_res == *b.vote_res ? 1 : 0;
          }
          if (a.vote_stage && b.vote_stage) {
            ++out.stage_compared;
            out.stage_agree += *a.vote_stage == *b.vote_stage ? 1 : 0;
          }
        }
      }
    }
    if (matchings) matchings->push_back(std::move(res));
  }
  out.recall = ratio_of(out.matched, out.ra_issues);
  out.precision = ratio_of(out.matched, out.llm_issues);
  out.mean_iou = mean_of(ious);
  out.median_iou = median_of(ious);
  return out;
}

std::vector<LabeledSpeaker> read_speaker_labels(const std::string& path) {
  auto t = csv::read_file(path);
  const auto mc = t.require("meeting"), sc = t.require("speaker_id"), rn = t.require("ra_name"),
             ln = t.require("llm_name"), rg = t.require("ra_gov"), lg = t.require("llm_gov");
  std::vector<LabeledSpeaker> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& row = t.rows()[i];
    LabeledSpeaker s;
    s.meeting = row[mc];
    s.speaker_id = row[sc];
    s.ra_name = clean_name_label(row[rn]);
    s.llm_name = clean_name_label(row[ln]);
    s.ra_gov = parse_gov(row[rg]);
    s.llm_gov = parse_gov(row[lg]);
    if (text::trim(row[rn]).empty() && text::trim(row[ln]).empty() && text::trim(row[rg]).empty() &&
        text::trim(row[lg]).empty()) {
      throw SchemaError("speaker label row " + std::to_string(i + 2) + " has neither an RA nor an LLM label");
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::optional<bool> parse_opt_bool(std::string_view s, std::size_t line) {
  auto t = text::to_lower_ascii(text::trim(s));
  if (t.empty() || t == "na") return std::nullopt;
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw SchemaError("line " + std::to_string(line) + ": expected a boolean, got '" + std::string(s) + "'");
}

std::optional<annotations::VoteStage> parse_opt_stage(std::string_view s, std::size_t line) {
  auto t = text::to_lower_ascii(text::trim(s));
  if (t.empty() || t == "na") return std::nullopt;
  if (t == "final") return annotations::VoteStage::final;
  if (t == "procedural") return annotations::VoteStage::procedural;
  if (t == "unclear") return annotations::VoteStage::unclear;
  if (t == "none") return annotations::VoteStage::none;
  throw SchemaError("line " + std::to_string(line) + ": unknown vote stage '" + std::string(s) + "'");
}

std::optional<double> parse_opt_time(std::string_view s, std::size_t line) {
  auto t = text::trim(s);
  if (t.empty()) return std::nullopt;
  auto ts = transcript::TimeStamp::parse(t);
  if (!ts) throw SchemaError("line " + std::to_string(line) + ": bad timestamp '" + std::string(s) + "'");
  return static_cast<double>(ts->seconds());
}

}  // namespace

std::vector<MeetingIssues> read_issue_labels(const std::string& path) {
  auto t = csv::read_file(path);
  const auto mc = t.require("meeting"), sc = t.require("source"), tc = t.require("title"), st = t.require("start"),
             en = t.require("end"), ag = t.require("agendized"), vo = t.require("vote"), vr = t.require("vote_res"),
             vs = t.require("vote_stage");
  std::map<std::string, MeetingIssues> by_meeting;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& row = t.rows()[i];
    const std::size_t line = i + 2;
    LabeledIssue issue;
    issue.title = row[tc];
    auto s = parse_opt_time(row[st], line);
    auto e = parse_opt_time(row[en], line);
    if (s && e) {
      if (*e < *s) throw SchemaError("line " + std::to_string(line) + ": issue ends before it starts");
      issue.span = Interval{*s, *e};
    }
    issue.agendized = parse_opt_bool(row[ag], line);
    issue.vote = parse_opt_bool(row[vo], line);
    if (!text::trim(row[vr]).empty()) issue.vote_res = annotations::parse_vote_result(text::trim(row[vr]));
    issue.vote_stage = parse_opt_stage(row[vs], line);
    auto& m = by_meeting[row[mc]];
    m.meeting = row[mc];
    auto src = text::to_lower_ascii(text::trim(row[sc]));
    if (src == "ra") {
      m.ra.push_back(std::move(issue));
    } else if (src == "llm") {
      m.llm.push_back(std::move(issue));
    } else {
      throw SchemaError("line " + std::to_string(line) + ": source must be ra or llm");
    }
  }
  std::vector<MeetingIssues> out;
  for (auto& [k, v] : by_meeting) out.push_back(std::move(v));
  return out;
}

}  // namespace council::validation
