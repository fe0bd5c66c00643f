#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "council/annotations.hpp"
#include "council/csv.hpp"
#include "council/did.hpp"
#include "council/linkage.hpp"
#include "council/pipeline.hpp"
#include "council/stats.hpp"
#include "council/text.hpp"
#include "council/validation.hpp"
#include "pipeline_internal.hpp"

namespace council::pipeline {

using namespace detail;

namespace {

json matrix_json(const validation::ConfusionMatrix& m) {
  json cells = json::object();
  for (const auto& t : m.truth_labels()) {
    json row = json::object();
    for (const auto& p : m.predicted_labels()) row[p] = m.cell(t, p);
    cells[t] = row;
  }
  return {{"truth_labels", m.truth_labels()},
          {"predicted_labels", m.predicted_labels()},
          {"cells", cells},
          {"total", m.total()},
          {"agreeing", m.agreeing()},
          {"agreement", num(m.agreement())}};
}

std::string matrix_csv(const validation::ConfusionMatrix& m) {
  std::ostringstream out;
  csv::Writer w(out);
  std::vector<std::string> header{"truth"};
  for (const auto& p : m.predicted_labels()) header.push_back(p);
  header.push_back("total");
  w.row(header);
  for (const auto& t : m.truth_labels()) {
    std::vector<std::string> row{t};
    for (const auto& p : m.predicted_labels()) row.push_back(std::to_string(m.cell(t, p)));
    row.push_back(std::to_string(m.row_total(t)));
    w.row(row);
  }
  return out.str();
}

json share_json(const annotations::ShareCount& s) {
  return {{"unanimous", s.unanimous}, {"votes", s.votes}, {"share", num(s.share())}};
}

json audit_json(const annotations::UnanimityAudit& a) {
  return {{"raw", share_json(a.raw)},
          {"consent_collapsed", share_json(a.consent_collapsed)},
          {"ceremonial_excluded", share_json(a.ceremonial_excluded)},
          {"ceremonial_only", share_json(a.ceremonial_only)},
          {"final_votes", share_json(a.final_votes)},
          {"procedural_votes", share_json(a.procedural_votes)},
          {"close_votes", a.close_votes},
          {"failed_votes", a.failed_votes}};
}

json fit_json(const stats::RegressionFit& f) {
  json coefs = json::array();
  for (const auto& c : f.coefficients) {
    coefs.push_back({{"name", c.name}, {"estimate", num(c.estimate)}, {"se", num(c.se)}, {"p", num(c.p)}});
  }
  return {{"coefficients", coefs},
          {"n_obs", f.n_obs},
          {"n_clusters", f.n_clusters},
          {"n_params", f.n_params},
          {"converged", f.converged},
          {"separation", f.separation},
          {"iterations", f.iterations},
          {"dropped_collinear", f.dropped_collinear},
          {"rows_dropped_missing", f.rows_dropped_missing},
          {"missing_by_column", f.missing_by_column},
          {"rows_dropped_constant_fe", f.rows_dropped_constant_fe},
          {"warnings", f.warnings}};
}

double parse_or_nan(const std::string& s) {
  if (text::trim(s).empty()) return std::nan("");
  try {
    return csv::parse_double(s);
  } catch (const SchemaError&) {
    return std::nan("");
  }
}

bool stage_exists(const Config& cfg, const std::string& stage) { return fs::exists(run_directory(cfg) / stage); }

}  // namespace

// ---- validate ----

void cmd_validate(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  if (!cfg.speaker_labels && !cfg.issue_labels) {
    throw ConfigError("validate needs inputs.speaker_labels or inputs.issue_labels");
  }
  Stage stage(cfg, "validate", opt);
  json report = {{"meta", meta(cfg, "validate", false)}, {"name_threshold", cfg.name_threshold}};

  if (cfg.speaker_labels) {
    std::vector<validation::LabeledSpeaker> speakers;
    try {
      speakers = validation::read_speaker_labels(cfg.speaker_labels->string());
    } catch (const SchemaError& e) {
      throw ConfigError("speaker label file: " + std::string(e.what()));
    }
    json sp = {{"rows", speakers.size()}};
    if (!speakers.empty()) {
      auto gov = validation::gov_status_matrix(speakers);
      const std::vector<std::string> gng{"G", "NG"};
      sp["gov_status"] = matrix_json(gov);
      sp["gov_status"]["agreement_g_ng"] = num(gov.agreement_over(gng));
      stage.write_text("gov_confusion.csv", matrix_csv(gov));
      auto presence = validation::name_presence_matrix(speakers);
      sp["name_presence"] = matrix_json(presence);
      stage.write_text("name_presence.csv", matrix_csv(presence));

      auto na = validation::name_agreement(speakers, cfg.name_threshold);
      sp["name_agreement"] = {{"both_named", na.both_named},
                              {"exact", na.exact},
                              {"fuzzy", na.fuzzy},
                              {"mean_similarity", num(na.mean_similarity)},
                              {"median_similarity", num(na.median_similarity)},
                              {"last_exact", na.last_exact},
                              {"mean_last_similarity", num(na.mean_last_similarity)},
                              {"median_last_similarity", num(na.median_last_similarity)}};

      std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> sets;
      for (const auto& s : speakers) {
        auto& entry = sets[s.meeting];
        if (s.ra_name) entry.first.push_back(*s.ra_name);
        if (s.llm_name) entry.second.push_back(*s.llm_name);
      }
      std::vector<std::vector<std::string>> ra, llm;
      for (auto& [_, v] : sets) {
        ra.push_back(v.first);
        llm.push_back(v.second);
      }
      json pr = json::object();
      for (auto mode : {validation::NameMode::full, validation::NameMode::last}) {
        auto r = validation::set_precision_recall(ra, llm, cfg.name_threshold, mode);
        pr[mode == validation::NameMode::full ? "full_name" : "last_name"] = {
            {"precision", num(r.precision())}, {"recall", num(r.recall())},  {"llm_matched", r.llm_matched},
            {"llm_total", r.llm_total},        {"ra_matched", r.ra_matched}, {"ra_total", r.ra_total}};
      }
      sp["name_sets"] = pr;
    }
    report["speakers"] = sp;
  }

  if (cfg.issue_labels) {
    std::vector<validation::MeetingIssues> meetings;
    try {
      meetings = validation::read_issue_labels(cfg.issue_labels->string());
    } catch (const SchemaError& e) {
      throw ConfigError("issue label file: " + std::string(e.what()));
    }
    std::vector<validation::IssueMatching> matchings;
    auto s = validation::summarize_issue_validation(meetings, &matchings);
    auto rate = [](std::size_t a, std::size_t b) {
      return b == 0 ? json(nullptr) : json(static_cast<double>(a) / static_cast<double>(b));
    };
    report["issues"] = {{"meetings", s.meetings},
                        {"ra_issues", s.ra_issues},
                        {"llm_issues", s.llm_issues},
                        {"matched", s.matched},
                        {"ra_only", s.ra_only},
                        {"llm_only", s.llm_only},
                        {"recall", num(s.recall)},
                        {"precision", num(s.precision)},
                        {"mean_iou", num(s.mean_iou)},
                        {"median_iou", num(s.median_iou)},
                        {"agendized_agreement", rate(s.agendized_agree, s.agendized_compared)},
                        {"agendized_compared", s.agendized_compared},
                        {"vote_agreement", rate(s.vote_agree, s.vote_compared)},
                        {"vote_compared", s.vote_compared},
                        {"tally_agreement", rate(s.tally_agree, s.tally_compared)},
                        {"tally_compared", s.tally_compared},
                        {"stage_agreement", rate(s.stage_agree, s.stage_compared)},
                        {"stage_compared", s.stage_compared},
                        {"gate", {{"iou", validation::kIouGate}, {"title_ratio", validation::kTitleGate}}}};
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"meeting", "status", "ra_index", "llm_index", "ra_title", "llm_title", "iou", "title_similarity", "score"});
    for (std::size_t i = 0; i < meetings.size(); ++i) {
      const auto& m = meetings[i];
      for (const auto& p : matchings[i].pairs) {
        w.row({m.meeting, "matched", std::to_string(p.ra), std::to_string(p.llm), m.ra[p.ra].title,
               m.llm[p.llm].title, csv::format_double(p.iou), csv::format_double(p.title_sim),
               csv::format_double(p.score)});
      }
      for (auto r : matchings[i].ra_only) {
        w.row({m.meeting, "ra_only", std::to_string(r), "", m.ra[r].title, "", "", "", ""});
      }
      for (auto l : matchings[i].llm_only) {
        w.row({m.meeting, "llm_only", "", std::to_string(l), "", m.llm[l].title, "", "", ""});
      }
    }
    stage.write_text("issue_pairs.csv", out.str());
  }

  stage.write_json("validation_report.json", report);
  stage.commit();
  log << "validate: report written\n";
}

// ---- stats ----

namespace {

struct Participation {
  std::vector<const linkage::VoterRecord*> population;
  std::vector<bool> participant;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> meetings_of;  // (voter, city) -> meetings
};

Participation build_participation(const Config& cfg, const std::vector<transcript::MeetingRecord>& meetings,
                                  const std::vector<linkage::VoterRecord>& voters) {
  const auto matches = csv::read_file(upstream(cfg, "link", "matches.csv", "link").string());
  const auto mc = matches.require("meeting"), sc = matches.require("status"), vc = matches.require("voter_id"),
             cc = matches.require("city"), yc = matches.require("year"),
             fc = matches.require("fallback_year");
  Participation out;
  std::set<std::pair<std::string, int>> covered;
  for (const auto& m : meetings) covered.insert({text::fold_diacritics_lower(m.info.city), m.info.date.year});
  std::set<std::pair<std::string, int>> spoke;  // (voter_id, year of the voter slice that matched)
  for (const auto& row : matches.rows()) {
    if (row[sc] != "matched") continue;
    out.meetings_of[{row[vc], text::fold_diacritics_lower(row[cc])}].insert(row[mc]);
    spoke.insert({row[vc], static_cast<int>(csv::parse_int(row[yc]) + csv::parse_int(row[fc]))});
  }
  for (const auto& v : voters) {
    if (!covered.count({text::fold_diacritics_lower(v.city), v.year})) continue;
    out.population.push_back(&v);
    out.participant.push_back(spoke.count({v.voter_id, v.year}) > 0);
  }
  return out;
}

double indicator(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

void cmd_stats(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  const auto meetings = load_meetings(cfg);
  const auto issues = load_issues(cfg);
  Stage stage(cfg, "stats", opt);
  json report = {{"meta", meta(cfg, "stats", false)}};
  Warnings warnings;

  // unanimity
  {
    std::vector<std::vector<annotations::IssueAnnotation>> lists;
    for (const auto& m : issues) lists.push_back(m.issues);
    json audit = {{"meta", meta(cfg, "stats", false)},
                  {"abstention_neutral", audit_json(annotations::unanimity_audit(lists))},
                  {"abstention_breaks_unanimity",
                   audit_json(annotations::unanimity_audit(lists, annotations::AbstentionPolicy::breaks_unanimity))}};
    stage.write_json("unanimity_audit.json", audit);
  }

  std::map<std::string, const transcript::MeetingRecord*> by_id;
  for (const auto& m : meetings) by_id[m.id()] = &m;

  // participation and balance
  if (cfg.voters && stage_exists(cfg, "link")) {
    const auto voters = linkage::VoterFile::read_csv(cfg.voters->string());
    auto part = build_participation(cfg, meetings, voters);
    std::optional<linkage::PropertyTable> properties;
    if (cfg.properties) properties = linkage::PropertyTable::load_csv(cfg.properties->string());

    struct Var {
      std::string name;
      std::function<std::optional<double>(const linkage::VoterRecord&)> value;
    };
    std::vector<Var> vars{
        {"age", [](const linkage::VoterRecord& v) { return v.age; }},
        {"female", [](const linkage::VoterRecord& v) -> std::optional<double> {
           if (v.gender.empty()) return std::nullopt;
           return indicator(text::iequals(v.gender, "F") || text::iequals(v.gender, "female"));
         }},
        {"democrat", [](const linkage::VoterRecord& v) -> std::optional<double> {
           if (v.party.empty()) return std::nullopt;
           return indicator(text::iequals(v.party, "DEM") || text::iequals(v.party, "D") ||
                            text::iequals(v.party, "democrat") || text::iequals(v.party, "democratic"));
         }},
        {"white", [](const linkage::VoterRecord& v) -> std::optional<double> {
           if (v.ethnicity.empty()) return std::nullopt;
           return indicator(text::iequals(v.ethnicity, "white"));
         }},
    };
    if (properties) {
      vars.push_back({"owner", [&](const linkage::VoterRecord& v) -> std::optional<double> {
                        auto o = properties->lookup(v.address);
                        if (o == linkage::Ownership::unknown) return std::nullopt;
                        return indicator(o == linkage::Ownership::owner);
                      }});
    }

    std::ostringstream bal;
    csv::Writer bw(bal);
    bw.row({"variable", "n_participants", "n_nonparticipants", "mean_participants", "mean_nonparticipants",
            "std_difference", "welch_t", "welch_dof", "welch_p", "note"});
    for (const auto& var : vars) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < part.population.size(); ++i) {
        auto x = var.value(*part.population[i]);
        if (!x) continue;
        (part.participant[i] ? a : b).push_back(*x);
      }
      std::string sd, t, dof, p, note;
      try {
        sd = csv::format_double(linkage::standardized_difference(a, b));
      } catch (const UndefinedError& e) {
        note = e.what();
      }
      try {
        auto w = stats::welch_t(a, b);
        t = csv::format_double(w.t);
        dof = csv::format_double(w.dof);
        p = csv::format_double(w.p);
      } catch (const UndefinedError& e) {
        if (note.empty()) note = e.what();
      }
      bw.row({var.name, std::to_string(a.size()), std::to_string(b.size()),
              a.empty() ? "" : csv::format_double(stats::mean(a)), b.empty() ? "" : csv::format_double(stats::mean(b)),
              sd, t, dof, p, note});
    }
    stage.write_text("balance.csv", bal.str());

    std::vector<double> all_ages, part_ages;
    for (std::size_t i = 0; i < part.population.size(); ++i) {
      if (!part.population[i]->age) continue;
      all_ages.push_back(*part.population[i]->age);
      if (part.participant[i]) part_ages.push_back(*part.population[i]->age);
    }
    std::ostringstream ages;
    csv::Writer aw(ages);
    aw.row({"age", "voters", "participants", "rate"});
    for (const auto& r : stats::participation_rate_by_age(all_ages, part_ages)) {
      aw.row({std::to_string(r.age), std::to_string(r.voters), std::to_string(r.participants),
              r.rate ? csv::format_double(*r.rate) : ""});
    }
    stage.write_text("participation_by_age.csv", ages.str());

    std::vector<stats::PersonCityCount> counts;
    for (const auto& [key, ms] : part.meetings_of) counts.push_back({key.first, key.second, ms.size()});
    json rep = {{"meta", meta(cfg, "stats", false)}};
    if (counts.empty()) {
      rep["undefined"] = "no matched speakers";
    } else {
      auto r = stats::repeat_summary(counts);
      rep.update({{"individuals", r.individuals},
                  {"one_timers", r.one_timers},
                  {"repeaters", r.repeaters},
                  {"appearances", r.appearances},
                  {"one_timer_share", num(r.one_timer_share())},
                  {"repeater_share", num(r.repeater_share())},
                  {"one_timer_appearance_share", num(r.one_timer_appearance_share())},
                  {"repeater_appearance_share", num(r.repeater_appearance_share())},
                  {"repeater_median", num(r.repeater_median)},
                  {"repeater_mean", num(r.repeater_mean)},
                  {"repeater_sd", num(r.repeater_sd)},
                  {"repeater_max", r.repeater_max}});
    }
    stage.write_json("repeat_summary.json", rep);

    stats::ObservationMatrix X;
    std::vector<std::string> city, year;
    for (std::size_t i = 0; i < part.population.size(); ++i) {
      const auto& v = *part.population[i];
      X.y.push_back(indicator(part.participant[i]));
      city.push_back(text::fold_diacritics_lower(v.city));
      year.push_back(std::to_string(v.year));
    }
    for (const auto& var : vars) {
      if (var.name == "owner") continue;  // matched for a subset of addresses only
      std::vector<double> col;
      for (const auto* v : part.population) col.push_back(var.value(*v).value_or(std::nan("")));
      X.add_covariate(var.name, std::move(col));
    }
    X.add_fixed_effect("city", city);
    X.add_fixed_effect("year", year);
    X.cluster = city;
    json logit = {{"meta", meta(cfg, "stats", false)}};
    try {
      logit["fit"] = fit_json(stats::fe_logit(X));
    } catch (const UndefinedError& e) {
      logit["undefined"] = e.what();
    }
    stage.write_json("participation_logit.json", logit);
  } else {
    warnings.push_back("participation statistics skipped: needs inputs.voters and a completed link stage");
  }

  // stance
  {
    const auto stance = csv::read_file(upstream(cfg, "annotate", "stance.csv", "annotate-ingest").string());
    const auto cc = stance.require("city"), sc = stance.require("score");
    std::vector<stats::GroupedScore> scores;
    for (const auto& row : stance.rows()) scores.push_back({row[cc], csv::parse_double(row[sc])});
    std::vector<double> all;
    for (const auto& s : scores) all.push_back(s.score);
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"group", "n", "mean", "sd", "share_support", "share_oppose"});
    auto emit = [&](const std::string& g, const stats::StanceSummary& s) {
      w.row({g, std::to_string(s.n), csv::format_double(s.mean), csv::format_double(s.sd),
             csv::format_double(s.share_support), csv::format_double(s.share_oppose)});
    };
    if (auto s = stats::stance_summary(all)) emit("(all)", *s);
    for (const auto& [g, s] : stats::stance_aggregate(scores)) emit(g, s);
    stage.write_text("stance_summary.csv", out.str());
  }

  // topic shares
  {
    std::ostringstream shares_out, ewma_out, kde_out;
    csv::Writer sw(shares_out), ew(ewma_out), kw(kde_out);
    sw.row({"meeting", "date", "scope", "topic_id", "share"});
    ew.row({"topic_id", "meeting", "date", "share", "ewma"});
    kw.row({"topic_id", "x", "density", "bandwidth"});
    std::vector<std::pair<transcript::Date, std::string>> order;
    std::map<std::string, std::map<int, double>> agenda_shares;
    for (const auto& m : issues) {
      auto it = by_id.find(m.meeting);
      if (it == by_id.end()) continue;
      Warnings w;
      for (bool agendized : {false, true}) {
        auto s = annotations::topic_shares(m.issues, agendized, &w);
        for (const auto& [topic, share] : s) {
          sw.row({m.meeting, it->second->info.date.to_string(), agendized ? "agendized" : "all", std::to_string(topic),
                  csv::format_double(share)});
        }
        if (agendized && !s.empty()) {
          agenda_shares[m.meeting] = s;
          order.push_back({it->second->info.date, m.meeting});
        }
      }
      for (const auto& x : w) warnings.push_back(m.meeting + ": " + x);
    }
    std::sort(order.begin(), order.end());
    const auto grid = stats::linspace(0.0, 1.0, 101);
    for (int topic = 0; topic < 10; ++topic) {
      std::vector<double> series;
      for (const auto& [_, id] : order) {
        auto s = agenda_shares[id].find(topic);
        series.push_back(s == agenda_shares[id].end() ? 0.0 : s->second);
      }
      if (series.empty()) continue;
      auto smooth = stats::ewma(series, cfg.ewma_alpha);
      for (std::size_t i = 0; i < series.size(); ++i) {
        ew.row({std::to_string(topic), order[i].second, order[i].first.to_string(), csv::format_double(series[i]),
                csv::format_double(smooth[i])});
      }
      try {
        stats::GaussianKde kde(series);
        auto d = kde.evaluate(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
          kw.row({std::to_string(topic), csv::format_double(grid[i]), csv::format_double(d[i]),
                  csv::format_double(kde.bandwidth())});
        }
      } catch (const UndefinedError&) {
        warnings.push_back("density for topic " + std::to_string(topic) + " undefined: fewer than two distinct shares");
      }
    }
    stage.write_text("topic_shares.csv", shares_out.str());
    stage.write_text("topic_share_ewma.csv", ewma_out.str());
    stage.write_text("topic_share_density.csv", kde_out.str());
  }

  // keyword rates
  {
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"meeting", "topic", "matches", "per_1000_words"});
    for (const auto& m : meetings) {
      const auto txt = m.full_text();
      for (auto topic : annotations::keyword_topics()) {
        std::string rate;
        try {
          rate = csv::format_double(annotations::keyword_rate(txt, topic));
        } catch (const UndefinedError&) {
        }
        w.row({m.id(), std::string(annotations::to_string(topic)),
               std::to_string(annotations::keyword_count(txt, topic)), rate});
      }
    }
    stage.write_text("keyword_rates.csv", out.str());
  }

  // configured regressions
  json regs = json::array();
  for (const auto& spec : cfg.regressions) {
    json entry = {{"name", spec.name}, {"model", spec.model}, {"outcome", spec.outcome}};
    csv::Table t;
    try {
      t = csv::read_file(spec.data.string());
      std::vector<std::string> need{spec.outcome};
      need.insert(need.end(), spec.covariates.begin(), spec.covariates.end());
      need.insert(need.end(), spec.fixed_effects.begin(), spec.fixed_effects.end());
      if (!spec.cluster.empty()) need.push_back(spec.cluster);
      t.require_all(need);
    } catch (const SchemaError& e) {
      throw ConfigError("regression '" + spec.name + "': " + e.what());
    }
    stats::ObservationMatrix X;
    const auto oc = t.require(spec.outcome);
    for (const auto& row : t.rows()) X.y.push_back(parse_or_nan(row[oc]));
    for (const auto& c : spec.covariates) {
      const auto k = t.require(c);
      std::vector<double> col;
      for (const auto& row : t.rows()) col.push_back(parse_or_nan(row[k]));
      X.add_covariate(c, std::move(col));
    }
    for (const auto& f : spec.fixed_effects) {
      const auto k = t.require(f);
      std::vector<std::string> col;
      for (const auto& row : t.rows()) col.push_back(text::trim(row[k]));
      X.add_fixed_effect(f, std::move(col));
    }
    stats::FitOptions fo;
    if (!spec.cluster.empty()) {
      const auto k = t.require(spec.cluster);
      for (const auto& row : t.rows()) X.cluster.push_back(text::trim(row[k]));
    } else {
      fo.covariance = stats::Covariance::hc1;
    }
    try {
      entry["fit"] = fit_json(spec.model == "logit" ? stats::fe_logit(X, fo) : stats::fe_ols(X, fo));
    } catch (const UndefinedError& e) {
      entry["undefined"] = e.what();
    }
    regs.push_back(entry);
  }
  report["regressions"] = regs;
  report["warnings"] = warnings;
  stage.write_json("report.json", report);
  stage.commit();
  log << "stats: " << issues.size() << " meetings of issues, " << cfg.regressions.size() << " regressions\n";
}

// ---- did ----

namespace {

json bootstrap_json(const did::BootstrapResult& b) {
  json flagged = json::array();
  for (const auto& s : b.stats) {
    if (s.flagged) flagged.push_back({{"name", s.name}, {"undefined_draws", s.undefined_draws}});
  }
  return {{"draws", b.draws}, {"seed", b.seed}, {"clusters", b.n_clusters}, {"flagged", flagged},
          {"warnings", b.warnings}};
}

json overall_json(const did::DidResult& r) {
  json w = json::array();
  for (const auto& a : r.overall.weights) w.push_back({{"cohort", a.cohort}, {"period", a.period}, {"weight", a.weight}});
  return {{"estimate", num(r.overall.estimate)},
          {"se", num(r.overall.se)},
          {"ci_low", num(r.overall.ci_low)},
          {"ci_high", num(r.overall.ci_high)},
          {"weights", w}};
}

}  // namespace

void cmd_did(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  if (!cfg.did.enabled) throw ConfigError("did is not configured: add a \"did\" section with a panel path");
  if (!cfg.seed) throw ConfigError("did draws bootstrap samples and needs a seed: set \"seed\" in the config or pass --seed");
  did::Panel panel;
  try {
    panel = did::Panel::read_csv(cfg.did.panel.string());
  } catch (const SchemaError& e) {
    std::string msg = e.what();
    if (msg.find("cohort_month") != std::string::npos) {
      throw ConfigError("panel " + cfg.did.panel.string() +
                        " lacks a cohort_month column; add the first treated month per city (empty for never treated)");
    }
    throw ConfigError("panel " + cfg.did.panel.string() + ": " + msg);
  }
  json report = {{"meta", meta(cfg, "did", true)}};
  if (!cfg.did.covariates.empty()) {
    auto r = did::residualize(panel, cfg.did.covariates);
    panel = std::move(r.panel);
    report["residualized_on"] = cfg.did.covariates;
    report["dropped_collinear"] = r.dropped_collinear;
  }

  did::DidOptions dopt;
  dopt.include_never_treated = cfg.did.include_never_treated;
  dopt.min_event = cfg.did.min_event;
  dopt.max_event = cfg.did.max_event;
  did::BootstrapOptions bopt;
  bopt.draws = cfg.did.bootstrap_draws;
  bopt.seed = *cfg.seed;
  const std::string seed = std::to_string(*cfg.seed);
  const std::string hash = cfg.hash();

  Stage stage(cfg, "did", opt);
  did::DidResult result;
  try {
    result = did::estimate(panel, dopt, bopt);
  } catch (const UndefinedError& e) {
    throw ConfigError("did: " + std::string(e.what()));
  }

  std::ostringstream cells, es;
  csv::Writer cw(cells), ew(es);
  cw.row({"cohort", "period", "event_time", "estimate", "se", "n_treated", "n_control", "dropped_treated",
          "dropped_control", "identified", "seed", "config_hash"});
  for (const auto& c : result.cells) {
    cw.row({std::to_string(c.cohort), std::to_string(c.period), std::to_string(c.event_time()),
            c.identified ? csv::format_double(c.estimate) : "", c.identified ? csv::format_double(c.se) : "",
            std::to_string(c.n_treated), std::to_string(c.n_control), std::to_string(c.dropped_treated),
            std::to_string(c.dropped_control), c.identified ? "1" : "0", seed, hash});
  }
  ew.row({"event_time", "estimate", "se", "ci_low", "ci_high", "cells", "seed", "config_hash"});
  for (const auto& e : result.event_study) {
    ew.row({std::to_string(e.event_time), csv::format_double(e.estimate), csv::format_double(e.se),
            csv::format_double(e.ci_low), csv::format_double(e.ci_high), std::to_string(e.weights.size()), seed, hash});
  }
  stage.write_text("att_gt.csv", cells.str());
  stage.write_text("event_study.csv", es.str());

  report["overall"] = overall_json(result);
  report["bootstrap"] = bootstrap_json(result.bootstrap);
  report["cities"] = panel.n_cities();
  report["cohorts"] = panel.treated_cohorts();
  report["include_never_treated"] = cfg.did.include_never_treated;
  report["warnings"] = result.warnings;
  stage.write_json("att_overall.json", report);

  json twfe = {{"meta", meta(cfg, "did", false)}};
  try {
    auto t = did::twfe_beta(panel);
    twfe.update({{"estimate", num(t.estimate)},
                 {"se", num(t.se)},
                 {"p", num(t.p)},
                 {"n_obs", t.n_obs},
                 {"n_clusters", t.n_clusters},
                 {"callaway_santanna_overall", num(result.overall.estimate)}});
  } catch (const UndefinedError& e) {
    twfe["undefined"] = e.what();
  }
  stage.write_json("twfe.json", twfe);

  if (cfg.did.split_file) {
    const auto t = csv::read_file(cfg.did.split_file->string());
    const auto cc = t.require("city"), vc = t.require("value");
    std::map<std::string, double> values;
    for (const auto& row : t.rows()) {
      double v = parse_or_nan(row[vc]);
      if (std::isfinite(v)) values[row[cc]] = v;
    }
    auto split = did::median_split(panel, values);
    json sj = {{"meta", meta(cfg, "did", true)},
               {"characteristic", cfg.did.split_name},
               {"median", num(split.median)},
               {"excluded", split.excluded},
               {"degenerate", split.degenerate}};
    if (!split.degenerate) {
      for (auto [name, half] : {std::pair{"above", &split.above}, std::pair{"below", &split.below}}) {
        try {
          auto r = did::estimate(*half, dopt, bopt);
          sj[name] = overall_json(r);
          sj[name]["cities"] = half->n_cities();
          sj[name]["bootstrap"] = bootstrap_json(r.bootstrap);
        } catch (const UndefinedError& e) {
          sj[name] = {{"undefined", e.what()}};
        }
      }
    }
    stage.write_json("median_split.json", sj);
  }

  if (cfg.remote_access) {
    const auto records = did::read_remote_access(cfg.remote_access->string());
    const auto cohorts = did::cohort_months(records);
    const auto spans = did::months_of_access(records);
    std::vector<double> months;
    for (const auto& [_, m] : spans) months.push_back(m);
    std::size_t shut = 0, offered = 0;
    for (const auto& r : records) {
      if (r.start) ++offered;
      if (r.end) ++shut;
    }
    json rj = {{"meta", meta(cfg, "did", false)},
               {"cities", records.size()},
               {"offered_remote_comment", offered},
               {"shut_off", shut},
               {"never_shut_off", records.size() - shut},
               {"months_of_access_mean", months.empty() ? json(nullptr) : num(stats::mean(months))},
               {"months_of_access_median", months.empty() ? json(nullptr) : num(stats::median(months))}};
    json per = json::object();
    for (const auto& [city, g] : cohorts) per[city] = g ? json(*g) : json(nullptr);
    rj["cohort_month"] = per;
    stage.write_json("remote_access_summary.json", rj);
  }

  stage.commit();
  log << "did: overall ATT " << csv::format_double(result.overall.estimate) << " (se "
      << csv::format_double(result.overall.se) << ", " << bopt.draws << " draws, seed " << seed << ")\n";
}

// ---- report ----

void cmd_report(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  const auto run = run_directory(cfg);
  if (!fs::exists(run)) throw ConfigError("no run directory " + run.string() + "; run a pipeline stage first");
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& name : {"parse", "annotate", "link", "validate", "stats", "did"}) {
    if (!fs::exists(run / name)) continue;
    for (const auto& e : fs::recursive_directory_iterator(run / name)) {
      if (e.is_regular_file()) files.push_back({fs::relative(e.path(), run).generic_string(), e.path()});
    }
  }
  if (files.empty()) throw ConfigError("run directory " + run.string() + " has no stage outputs");
  std::sort(files.begin(), files.end());
  Stage stage(cfg, "report", opt);
  json list = json::array();
  for (const auto& [rel, path] : files) {
    const auto bytes = read_file(path);
    list.push_back({{"path", rel}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }
  json index = {{"meta", meta(cfg, "report", false)}, {"files", list}, {"config", json::parse(cfg.canonical)}};
  stage.write_json("index.json", index);
  stage.commit();
  log << "report: indexed " << files.size() << " files in " << run.string() << "\n";
}

void cmd_all(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  cmd_parse(cfg, opt, log);
  if (cfg.annotations) {
    cmd_annotate_ingest(cfg, opt, log);
    if (cfg.voters) cmd_link(cfg, opt, log);
    cmd_stats(cfg, opt, log);
  } else {
    log << "annotate-ingest, link, stats: skipped (no inputs.annotations)\n";
  }
  if (cfg.speaker_labels || cfg.issue_labels) cmd_validate(cfg, opt, log);
  if (cfg.did.enabled) cmd_did(cfg, opt, log);
  cmd_report(cfg, opt, log);
}

}  // namespace council::pipeline
