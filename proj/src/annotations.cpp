#include "council/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "council/csv.hpp"
#include "council/text.hpp"

namespace council::annotations {

using nlohmann::json;

std::string VoteTally::to_string() const {
  return std::to_string(yea) + "-" + std::to_string(nay) + "-" + std::to_string(abstain);
}

std::string_view to_string(GovStatus g) { return g == GovStatus::G ? "G" : "NG"; }

std::string_view to_string(Group g) {
  switch (g) {
    case Group::I: return "I";
    case Group::L: return "L";
    case Group::A: return "A";
    case Group::E: return "E";
    case Group::B: return "B";
    case Group::O: return "O";
    case Group::NA: return "NA";
  }
  return "";
}

std::string_view to_string(VoteStage s) {
  switch (s) {
    case VoteStage::final: return "final";
    case VoteStage::procedural: return "procedural";
    case VoteStage::unclear: return "unclear";
    case VoteStage::none: return "none";
  }
  return "";
}

namespace {

json parse_json(std::string_view s) {
  try {
    return json::parse(s);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

const std::string& require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing key '" + key + "'");
  if (!it->is_string()) throw SchemaError(where + ": '" + key + "' must be a string");
  return it->get_ref<const std::string&>();
}

bool require_bool(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing key '" + key + "'");
  if (!it->is_boolean()) throw SchemaError(where + ": '" + key + "' must be true/false");
  return it->get<bool>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw SchemaError(where + ": unknown key '" + it.key() + "'");
  }
}

GovStatus parse_gov(const std::string& s, const std::string& where) {
  if (s == "G") return GovStatus::G;
  if (s == "NG") return GovStatus::NG;
  throw SchemaError(where + ": gov must be \"G\" or \"NG\", got \"" + s + "\"");
}

Group parse_group(const std::string& s, const std::string& where) {
  static const std::map<std::string, Group> kGroups = {{"I", Group::I}, {"L", Group::L}, {"A", Group::A},
                                                       {"E", Group::E}, {"B", Group::B}, {"O", Group::O},
                                                       {"NA", Group::NA}};
  auto it = kGroups.find(s);
  if (it == kGroups.end()) throw SchemaError(where + ": group \"" + s + "\" is not one of I/L/A/E/B/O/NA");
  return it->second;
}

VoteStage parse_stage(const std::string& s, const std::string& where) {
  if (s == "final") return VoteStage::final;
  if (s == "procedural") return VoteStage::procedural;
  if (s == "unclear") return VoteStage::unclear;
  if (s == "none") return VoteStage::none;
  throw SchemaError(where + ": vote_stage \"" + s + "\" is not final/procedural/unclear/none");
}

std::optional<TimeStamp> parse_ts_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing key '" + key + "'");
  if (it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(where + ": '" + key + "' must be \"HH:MM:SS\" or null");
  auto ts = TimeStamp::parse(it->get<std::string>());
  if (!ts) throw SchemaError(where + ": '" + key + "' is not HH:MM:SS: \"" + it->get<std::string>() + "\"");
  return ts;
}

}  // namespace

std::vector<SpeakerAnnotation> parse_speaker_map(std::string_view text) {
  json doc = parse_json(text);
  if (!doc.is_object()) throw SchemaError("speaker map must be a JSON object keyed by speaker id");
  std::vector<SpeakerAnnotation> out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string where = "speaker " + it.key();
    const json& v = it.value();
    if (!v.is_object()) throw SchemaError(where + ": value must be an object");
    reject_unknown(v, {"name", "gov", "group"}, where);
    SpeakerAnnotation a;
    a.speaker_id = it.key();
    const auto& name = require_string(v, "name", where);
    if (name != "NA") {
      std::string t = text::trim(name);
      if (t.empty()) throw SchemaError(where + ": empty name (use \"NA\")");
      a.name = t;
    }
    a.gov = parse_gov(require_string(v, "gov", where), where);
    a.group = parse_group(require_string(v, "group", where), where);
    if ((a.gov == GovStatus::G) != (a.group == Group::NA)) {
      throw SchemaError(where + ": group must be \"NA\" exactly when gov is \"G\"");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::optional<VoteTally> parse_vote_result(std::string_view s) {
  std::string t = text::trim(s);
  if (t == "None") return std::nullopt;
  auto parts = text::split(t, '-');
  if (parts.size() != 3) throw SchemaError("vote result \"" + t + "\" is not yea-nay-abstain");
  int vals[3];
  for (int i = 0; i < 3; ++i) {
    const auto& p = parts[static_cast<std::size_t>(i)];
    if (p.empty() || !std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        p.size() > 6) {
      throw SchemaError("vote result \"" + t + "\" has a non-numeric count");
    }
    vals[i] = std::stoi(p);
  }
  return VoteTally{vals[0], vals[1], vals[2]};
}

std::vector<IssueAnnotation> parse_issues(std::string_view text) {
  json doc = parse_json(text);
  if (!doc.is_array()) throw SchemaError("issue list must be a JSON array");
  static const std::set<std::string> kAllowed = {
      "issue",      "summary",         "public",        "vote",      "vote_res", "vote_outcome",
      "vote_stage", "timestamp_start", "timestamp_end", "agendized", "topic_id"};
  std::vector<IssueAnnotation> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "issue " + std::to_string(i);
    const json& v = doc[i];
    if (!v.is_object()) throw SchemaError(where + ": must be an object");
    reject_unknown(v, kAllowed, where);
    IssueAnnotation a;
    a.issue = require_string(v, "issue", where);
    a.summary = require_string(v, "summary", where);
    a.is_public = require_bool(v, "public", where);
    a.vote = require_bool(v, "vote", where);
    auto vr = v.find("vote_res");
    if (vr == v.end()) throw SchemaError(where + ": missing key 'vote_res'");
    if (vr->is_string()) {
      try {
        a.vote_res = parse_vote_result(vr->get<std::string>());
      } catch (const SchemaError& e) {
        throw SchemaError(where + ": " + e.what());
      }
    } else if (!vr->is_null()) {
      throw SchemaError(where + ": 'vote_res' must be a string");
    }
    a.vote_outcome = require_string(v, "vote_outcome", where);
    a.vote_stage = parse_stage(require_string(v, "vote_stage", where), where);
    a.timestamp_start = parse_ts_field(v, "timestamp_start", where);
    a.timestamp_end = parse_ts_field(v, "timestamp_end", where);
    if (a.timestamp_start && a.timestamp_end && *a.timestamp_end < *a.timestamp_start) {
      throw SchemaError(where + ": timestamp_end precedes timestamp_start");
    }
    if (!a.vote && (a.vote_res || a.vote_stage != VoteStage::none)) {
      throw SchemaError(where + ": vote is false but vote_res/vote_stage record a vote");
    }
    if (auto ag = v.find("agendized"); ag != v.end()) {
      if (!ag->is_boolean()) throw SchemaError(where + ": 'agendized' must be true/false");
      a.agendized = ag->get<bool>();
    } else {
      a.agendized = a.vote_stage != VoteStage::none;
    }
    if (auto tp = v.find("topic_id"); tp != v.end() && !tp->is_null()) {
      if (!tp->is_number_integer() || tp->get<int>() < 0 || tp->get<int>() > 9) {
        throw SchemaError(where + ": 'topic_id' must be an integer 0-9");
      }
      a.topic_id = tp->get<int>();
    }
    out.push_back(std::move(a));
  }
  return out;
}

TopicTaxonomy parse_taxonomy(std::string_view text) {
  json doc = parse_json(text);
  if (!doc.is_array()) throw SchemaError("taxonomy must be a JSON array");
  if (doc.size() != 10) throw SchemaError("taxonomy must have exactly 10 topics, got " + std::to_string(doc.size()));
  TopicTaxonomy tax;
  std::set<int> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "topic " + std::to_string(i);
    const json& v = doc[i];
    if (!v.is_object()) throw SchemaError(where + ": must be an object");
    reject_unknown(v, {"topicID", "topicTitle", "description", "representativeExamples"}, where);
    TopicEntry e;
    auto id = v.find("topicID");
    if (id == v.end() || !id->is_number_integer()) throw SchemaError(where + ": 'topicID' must be an integer");
    e.topic_id = id->get<int>();
    if (e.topic_id < 0 || e.topic_id > 9) throw SchemaError(where + ": topicID out of range 0-9");
    if (!ids.insert(e.topic_id).second) throw SchemaError(where + ": duplicate topicID " + std::to_string(e.topic_id));
    e.title = require_string(v, "topicTitle", where);
    e.description = require_string(v, "description", where);
    auto ex = v.find("representativeExamples");
    if (ex == v.end() || !ex->is_array()) throw SchemaError(where + ": 'representativeExamples' must be an array");
    if (ex->size() != 5) throw SchemaError(where + ": needs exactly 5 representative examples");
    for (const auto& s : *ex) {
      if (!s.is_string()) throw SchemaError(where + ": examples must be strings");
      e.examples.push_back(s.get<std::string>());
    }
    tax.entries.push_back(std::move(e));
  }
  std::sort(tax.entries.begin(), tax.entries.end(),
            [](const TopicEntry& a, const TopicEntry& b) { return a.topic_id < b.topic_id; });
  return tax;
}

std::map<std::string, int> parse_topic_assignments(std::string_view text) {
  json doc = parse_json(text);
  if (!doc.is_object()) throw SchemaError("topic assignments must be a JSON object");
  std::map<std::string, int> out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it->is_number_integer() || it->get<int>() < 0 || it->get<int>() > 9) {
      throw SchemaError("topic assignment for '" + it.key() + "' must be an integer 0-9");
    }
    out[it.key()] = it->get<int>();
  }
  return out;
}

std::vector<StanceScore> parse_stance(std::string_view text) {
  json doc = parse_json(text);
  if (!doc.is_array()) throw SchemaError("stance output must be a list of [id, score] pairs");
  std::vector<StanceScore> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& p = doc[i];
    const std::string where = "stance pair " + std::to_string(i);
    if (!p.is_array() || p.size() != 2) throw SchemaError(where + ": must have exactly two elements");
    if (!p[0].is_string()) throw SchemaError(where + ": id must be a string");
    if (!p[1].is_number()) throw SchemaError(where + ": score must be a number");
    double s = p[1].get<double>();
    if (!(s >= -1.0 && s <= 1.0)) throw SchemaError(where + ": score outside [-1, 1]");
    out.push_back({p[0].get<std::string>(), s});
  }
  return out;
}

bool is_unanimous(const std::optional<VoteTally>& t, AbstentionPolicy policy) {
  if (!t) throw std::invalid_argument("is_unanimous: no vote tally");
  if (policy == AbstentionPolicy::breaks_unanimity && t->abstain > 0) return false;
  return t->nay == 0 && t->yea > 0;
}

bool is_close_vote(const std::optional<VoteTally>& t) {
  if (!t) throw std::invalid_argument("is_close_vote: no vote tally");
  auto passes = [](int y, int n) { return y > n; };
  const int y = t->yea, n = t->nay;
  if (y == n) return true;
  const bool base = passes(y, n);
  if (y > 0) {
    if (y - 1 == n + 1 || passes(y - 1, n + 1) != base) return true;
  }
  if (n > 0) {
    if (y + 1 == n - 1 || passes(y + 1, n - 1) != base) return true;
  }
  return false;
}

namespace {

const std::regex& ceremonial_include() {
  static const std::regex re(
      R"(\bproclamations?\b|\bcommendations?\b|\bcertificates? of (recognition|appreciation)\b|\btributes?\b|\bhonoring\b|\bin honor of\b|\bin memoriam\b|\badjourn(ed|ment)? in memory\b|\b(awareness|heritage|history|appreciation|prevention) month\b|\bday of remembrance\b)",
      std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
  return re;
}

const std::regex& ceremonial_exclude() {
  static const std::regex re(
      R"(\b(covid|coronavirus|emergency proclamation|local emergency|state of emergency|disaster|disasters)\b)",
      std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
  return re;
}

}  // namespace

std::string ceremonial_text(const IssueAnnotation& issue) {
  return issue.issue + " " + issue.summary + " " + issue.vote_outcome;
}

bool is_ceremonial_text(std::string_view text) {
  std::string s(text);
  return std::regex_search(s, ceremonial_include()) && !std::regex_search(s, ceremonial_exclude());
}

bool classify_ceremonial(const IssueAnnotation& issue) { return is_ceremonial_text(ceremonial_text(issue)); }

std::vector<IssueAnnotation> collapse_consent_calendar(const std::vector<IssueAnnotation>& issues) {
  auto is_consent = [](const IssueAnnotation& a) {
    return a.vote_res.has_value() && text::icontains(a.vote_outcome, "consent");
  };
  std::vector<IssueAnnotation> out;
  std::size_t i = 0;
  while (i < issues.size()) {
    out.push_back(issues[i]);
    if (!is_consent(issues[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < issues.size() && is_consent(issues[j]) && issues[j].vote_res == issues[i].vote_res) ++j;
    i = j;
  }
  return out;
}

double ShareCount::share() const {
  return votes == 0 ? std::nan("") : static_cast<double>(unanimous) / static_cast<double>(votes);
}

UnanimityAudit unanimity_audit(const std::vector<std::vector<IssueAnnotation>>& meetings, AbstentionPolicy policy) {
  UnanimityAudit a;
  auto tally = [&](ShareCount& c, const IssueAnnotation& is) {
    ++c.votes;
    if (is_unanimous(is.vote_res, policy)) ++c.unanimous;
  };
  for (const auto& issues : meetings) {
    for (const auto& is : issues) {
      if (!is.vote || !is.vote_res) continue;
      tally(a.raw, is);
      bool cer = classify_ceremonial(is);
      tally(cer ? a.ceremonial_only : a.ceremonial_excluded, is);
      if (is.vote_stage == VoteStage::final) tally(a.final_votes, is);
      if (is.vote_stage == VoteStage::procedural) tally(a.procedural_votes, is);
      if (is_close_vote(is.vote_res)) ++a.close_votes;
      if (is.vote_res->yea <= is.vote_res->nay) ++a.failed_votes;
    }
    for (const auto& is : collapse_consent_calendar(issues)) {
      if (is.vote && is.vote_res) tally(a.consent_collapsed, is);
    }
  }
  return a;
}

namespace {

struct KeywordDef {
  KeywordTopic topic;
  const char* name;
  std::string pattern;
};

const std::vector<KeywordDef>& keyword_defs() {
  static const std::vector<KeywordDef> defs = {
      {KeywordTopic::parking, "parking", R"(\bparking?\b)"},
      {KeywordTopic::traffic, "traffic", R"(\b(?:traffic|congestion|cars?|gridlock)\b)"},
      {KeywordTopic::affordability, "affordability", R"(\b(?:affordable|affordability|income)\b)"},
      {KeywordTopic::crime, "crime", R"(\b(?:crime|safety|police|violence|theft|assault|criminal)\b)"},
      {KeywordTopic::schools, "schools", R"(\b(?:school|student|classroom|enrollment)\b)"},
      {KeywordTopic::infrastructure, "infrastructure",
       R"(\b(?:infrastructure|sewer|water|drainage|utility|utilities|pipes?|electric|power)\b)"},
      {KeywordTopic::aesthetics, "aesthetics",
       R"(\b(?:aesthetic|appearance|beauty|character|historic|preserv|style|design|architecture|shadow|tall)\b)"},
      {KeywordTopic::environment, "environment",
       R"(\b(?:environment|wildlife|animal|bird|tree|pollution|toxic|habitat|greenhouse|climate|hazard)\b)"},
  };
  return defs;
}

const std::regex& keyword_regex(KeywordTopic t) {
  static const std::vector<std::regex> compiled = [] {
    std::vector<std::regex> v;
    for (const auto& d : keyword_defs()) {
      v.emplace_back(d.pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    }
    return v;
  }();
  return compiled[static_cast<std::size_t>(t)];
}

}  // namespace

const std::array<KeywordTopic, 8>& keyword_topics() {
  static const std::array<KeywordTopic, 8> all = {
      KeywordTopic::parking, KeywordTopic::traffic,        KeywordTopic::affordability, KeywordTopic::crime,
      KeywordTopic::schools, KeywordTopic::infrastructure, KeywordTopic::aesthetics,    KeywordTopic::environment};
  return all;
}

std::string_view to_string(KeywordTopic t) { return keyword_defs()[static_cast<std::size_t>(t)].name; }

const std::string& keyword_pattern(KeywordTopic t) { return keyword_defs()[static_cast<std::size_t>(t)].pattern; }

std::size_t keyword_count(std::string_view text, KeywordTopic topic) {
  std::string s(text);
  const auto& re = keyword_regex(topic);
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
}

double keyword_rate(std::string_view text, KeywordTopic topic) {
  auto words = text::split_ws(text).size();
  if (words == 0) throw UndefinedError("keyword_rate: text has no words");
  return 1000.0 * static_cast<double>(keyword_count(text, topic)) / static_cast<double>(words);
}

std::map<int, double> topic_shares(const std::vector<IssueAnnotation>& issues, bool agendized_only,
                                   Warnings* warnings) {
  std::map<int, double> time;
  double total = 0.0;
  std::size_t skipped = 0;
  for (const auto& is : issues) {
    if (agendized_only && !is.agendized) continue;
    if (!is.topic_id || !is.timestamp_start || !is.timestamp_end) {
      ++skipped;
      continue;
    }
    auto len = static_cast<double>(is.timestamp_end->seconds() - is.timestamp_start->seconds());
    time[*is.topic_id] += len;
    total += len;
  }
  if (skipped && warnings) {
    warnings->push_back(std::to_string(skipped) + " issue(s) without a topic or timestamps excluded from topic shares");
  }
  std::map<int, double> out;
  if (total <= 0.0) return out;
  for (const auto& [k, v] : time) out[k] = v / total;
  return out;
}

std::map<int, double> agenda_topic_proportions(const std::vector<IssueAnnotation>& issues) {
  std::map<int, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& is : issues) {
    if (!is.agendized || !is.topic_id) continue;
    ++counts[*is.topic_id];
    ++total;
  }
  std::map<int, double> out;
  for (const auto& [k, c] : counts) out[k] = static_cast<double>(c) / static_cast<double>(total);
  return out;
}

void write_issue_table_header(std::ostream& out) {
  csv::Writer(out).row({"meeting", "issue_index", "issue", "summary", "public", "vote", "vote_res", "vote_outcome",
                        "vote_stage", "timestamp_start", "timestamp_end", "agendized", "topic_id"});
}

void write_issue_rows(std::ostream& out, std::string_view meeting_id, const std::vector<IssueAnnotation>& issues) {
  csv::Writer w(out);
  for (std::size_t i = 0; i < issues.size(); ++i) {
    const auto& is = issues[i];
    w.row({std::string(meeting_id), std::to_string(i), is.issue, is.summary, is.is_public ? "true" : "false",
           is.vote ? "true" : "false", is.vote_res ? is.vote_res->to_string() : "None", is.vote_outcome,
           std::string(to_string(is.vote_stage)), is.timestamp_start ? is.timestamp_start->to_string() : "",
           is.timestamp_end ? is.timestamp_end->to_string() : "", is.agendized ? "true" : "false",
           is.topic_id ? std::to_string(*is.topic_id) : ""});
  }
}

}  // namespace council::annotations
