// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "council/annotations.hpp"
#include "council/did.hpp"
#include "council/linkage.hpp"
#include "council/pipeline.hpp"
#include "council/stats.hpp"
#include "council/transcript.hpp"
#include "council/validation.hpp"
#include "support/did_sim.hpp"
#include "support/grammar_suite.hpp"
#include "support/linkage_oracle.hpp"
#include "support/unanimity_fixture.hpp"

namespace fs = std::filesystem;
using namespace council;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ----
Verdict linkage_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto nick = testing::oracle_nicknames();
  std::mt19937_64 rng(20240611);
  int agree = 0;
  std::set<int> full_ranks, initial_ranks;
  std::string first_bad;
  for (int i = 0; i < 1000; ++i) {
    const auto lc = testing::generate_linkage_case(rng, i);
    const auto want = testing::oracle_resolve(lc.candidate, lc.voters, nick);
    const auto got = linkage::resolve_match(lc.candidate, linkage::VoterSlice(lc.voters), nick);
    const int got_rank = got.priority ? got.priority->rank : 0;
    const bool same = got.matched() == want.matched && got_rank == want.rank &&
                      (!want.matched || got.voter->voter_id == want.voter_id);
    if (same) {
      ++agree;
    } else if (first_bad.empty()) {
      first_bad = " first mismatch at case " + std::to_string(i);
    }
    if (want.lattice == 0) full_ranks.insert(want.rank);
    if (want.lattice == 1) initial_ranks.insert(want.rank);
  }
  const double secs = seconds_since(t0);
  const bool covered = full_ranks.size() == 12 && initial_ranks.size() == 6;
  Verdict v;
  v.pass = agree == 1000 && covered && secs < 10.0;
  v.detail = std::to_string(agree) + "/1000 agree, classes covered " + std::to_string(full_ranks.size()) + "+" +
             std::to_string(initial_ranks.size()) + "/18, " + fmt("%.2f s", secs) + first_bad;
  return v;
}

// ---- 2 ----
Verdict validation_arithmetic() {
  validation::ConfusionMatrix m({"G", "NG", "NA"}, {"G", "NG"});
  m.add("G", "G", 676);
  m.add("G", "NG", 46);
  m.add("NG", "G", 91);
  m.add("NG", "NG", 454);
  m.add("NA", "G", 18);
  m.add("NA", "NG", 15);
  const bool table = m.agreeing() == 1130 && m.total() == 1300 && std::round(m.agreement() * 1000) == 869;
  const double iou = validation::interval_iou({0, 10}, {5, 15});
  const bool gate = !validation::passes_gate(0.2, 55) && validation::passes_gate(0.35, 0);

  // Same gate through the matcher: low-overlap unrelated titles stay apart.
  validation::LabeledIssue ra{"Budget hearing", validation::Interval{0, 100}, {}, {}, {}, {}};
  validation::LabeledIssue far{"Park naming", validation::Interval{80, 180}, {}, {}, {}, {}};
  validation::LabeledIssue near{"Tree ordinance", validation::Interval{30, 130}, {}, {}, {}, {}};
  const std::vector<validation::LabeledIssue> ras{ra};
  const auto rejected = validation::greedy_issue_match(ras, std::vector<validation::LabeledIssue>{far});
  const auto accepted = validation::greedy_issue_match(ras, std::vector<validation::LabeledIssue>{near});
  const bool matcher = rejected.pairs.empty() && accepted.pairs.size() == 1;

  Verdict v;
  v.pass = table && iou == 1.0 / 3.0 && gate && matcher;
  v.detail = "agreement " + std::to_string(m.agreeing()) + "/" + std::to_string(m.total()) + fmt(" = %.4f", m.agreement()) +
             fmt(", iou %.17g", iou) + (gate ? ", gate ok" : ", gate WRONG") + (matcher ? ", matcher ok" : ", matcher WRONG");
  return v;
}

// ---- 3 ----
Verdict did_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto panel = testing::staggered_panel(12345);
  did::BootstrapOptions bo;
  bo.draws = 999;
  bo.seed = 12345;
  const auto res = did::estimate(panel, {}, bo);
  const double secs = seconds_since(t0);
  int pre = 0, pre_ok = 0;
  double worst = 0.0;
  for (const auto& e : res.event_study) {
    if (e.event_time >= -1) continue;
    ++pre;
    const double z = e.se > 0 ? std::abs(e.estimate) / e.se : INFINITY;
    worst = std::max(worst, z);
    if (z <= 3.0) ++pre_ok;
  }
  const double att = res.overall.estimate;
  Verdict v;
  v.pass = att >= 1.9 && att <= 2.1 && pre > 0 && pre_ok == pre && secs < 60.0 && res.bootstrap.draws == 999;
  v.detail = "B=" + std::to_string(res.bootstrap.draws) + ", " + fmt("overall %.4f", att) + fmt(" (se %.4f)", res.overall.se) + ", pre-periods within 3 SE " +
             std::to_string(pre_ok) + "/" + std::to_string(pre) + fmt(" (max |z| %.2f)", worst) + fmt(", %.1f s", secs);
  return v;
}

// ---- 4 ----
Verdict twfe_contrast() {
  const auto panel = testing::heterogeneous_panel(99, 1.0);
  const auto cells = did::att_gt_all(panel);
  const auto cs = did::aggregate_overall(cells, panel);
  const auto tw = did::twfe_beta(panel);
  Verdict v;
  v.pass = tw.estimate < cs.estimate && cs.estimate - tw.estimate > 3.0 * tw.se;
  v.detail = fmt("twfe %.4f", tw.estimate) + fmt(" (se %.4f)", tw.se) + fmt(" < group-time overall %.4f", cs.estimate);
  return v;
}

// ---- 5 ----
Verdict regression_calibration() {
  std::mt19937_64 rng(5150);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 50000;
  const double b0 = -0.3, b1 = 0.7, b2 = -0.5, b3 = 0.9;
  const double region_fx[5] = {0.0, 0.4, -0.6, 0.2, 1.0};
  std::vector<double> y(n), x1(n), x2(n), x3(n);
  std::vector<std::string> region(n), row_id(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = z(rng);
    x2[i] = z(rng);
    x3[i] = coin(rng) ? 1.0 : 0.0;
    const int r = static_cast<int>(i % 5);
    region[i] = "r" + std::to_string(r);
    row_id[i] = std::to_string(i);
    const double eta = b0 + b1 * x1[i] + b2 * x2[i] + b3 * x3[i] + region_fx[r];
    y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  stats::ObservationMatrix d;
  d.y = y;
  d.add_covariate("x1", x1);
  d.add_covariate("x2", x2);
  d.add_covariate("x3", x3);
  d.add_fixed_effect("region", region);
  stats::FitOptions hc;
  hc.covariance = stats::Covariance::hc1;
  hc.report_fixed_effects = true;
  const auto fit = stats::fe_logit(d, hc);
  const std::vector<std::pair<std::string, double>> truth = {
      {"(Intercept)", b0}, {"x1", b1}, {"x2", b2}, {"x3", b3},
      {"region=r1", 0.4},  {"region=r2", -0.6}, {"region=r3", 0.2}, {"region=r4", 1.0}};
  double worst_z = 0.0;
  bool recovered = fit.converged;
  for (const auto& [name, b] : truth) {
    if (!fit.has(name)) {
      recovered = false;
      continue;
    }
    const auto& c = fit.at(name);
    worst_z = std::max(worst_z, std::abs(c.estimate - b) / c.se);
  }
  recovered = recovered && worst_z <= 3.0;

  // Every row its own cluster: the clustered sandwich reduces to HC1.
  double max_gap = 0.0;
  stats::ObservationMatrix dc = d;
  dc.cluster = row_id;
  for (bool logit : {false, true}) {
    stats::FitOptions cl = hc;
    cl.covariance = stats::Covariance::cluster;
    const auto a = logit ? stats::fe_logit(dc, cl) : stats::fe_ols(dc, cl);
    const auto b = logit ? fit : stats::fe_ols(d, hc);
    for (std::size_t k = 0; k < a.coefficients.size(); ++k)
      max_gap = std::max(max_gap, std::abs(a.coefficients[k].se - b.coefficients[k].se));
  }

  const std::vector<double> wa{0, 0, 1, 1}, wb{1, 1, 2, 2};
  const auto w = stats::welch_t(wa, wb);
  auto r4 = [](double x) { return std::round(x * 1e4) / 1e4; };
  const bool welch = r4(w.t) == -2.4495 && r4(w.dof) == 6.0 && r4(w.p) == 0.0498 && w.difference == -1.0;

  Verdict v;
  v.pass = recovered && max_gap <= 1e-8 && welch;
  v.detail = fmt("logit max |est - truth|/se %.2f", worst_z) + fmt(", cluster-vs-HC1 max gap %.2e", max_gap) +
             fmt(", welch t %.4f", w.t) + fmt(" dof %.4f", w.dof) + fmt(" p %.4f", w.p);
  return v;
}

// ---- 6 ----
Verdict unanimity_audit() {
  const auto fx = testing::unanimity_fixture();
  const testing::UnanimityHandCounts h;
  const auto a = annotations::unanimity_audit(fx);
  const auto s = annotations::unanimity_audit(fx, annotations::AbstentionPolicy::breaks_unanimity);
  auto eq = [](const annotations::ShareCount& c, int u, int v) {
    return c.unanimous == static_cast<std::size_t>(u) && c.votes == static_cast<std::size_t>(v);
  };
  const bool ok = eq(a.raw, h.raw_unanimous, h.raw_votes) && eq(a.consent_collapsed, h.collapsed_unanimous, h.collapsed_votes) &&
                  eq(a.ceremonial_excluded, h.excluded_unanimous, h.excluded_votes) &&
                  eq(a.ceremonial_only, h.ceremonial_unanimous, h.ceremonial_votes) &&
                  eq(a.final_votes, h.final_unanimous, h.final_votes) &&
                  eq(a.procedural_votes, h.procedural_unanimous, h.procedural_votes) &&
                  a.close_votes == static_cast<std::size_t>(h.close_votes) &&
                  a.failed_votes == static_cast<std::size_t>(h.failed_votes) &&
                  s.raw.unanimous == static_cast<std::size_t>(h.raw_unanimous_strict);
  auto show = [](const annotations::ShareCount& c) { return std::to_string(c.unanimous) + "/" + std::to_string(c.votes); };
  return {ok, "raw " + show(a.raw) + ", consent-collapsed " + show(a.consent_collapsed) + ", ceremonial-excluded " +
                  show(a.ceremonial_excluded)};
}

// ---- 7 ----
bool grammar_case_ok(const testing::GrammarCase& gc) {
  const auto out = transcript::parse_transcript(gc.raw);
  if (!gc.valid) {
    return !out.ok() && out.errors.size() == 1 && out.errors[0].line == gc.error_line &&
           out.errors[0].message.find(gc.error_fragment) != std::string::npos;
  }
  if (!out.ok() || !out.errors.empty() || out.record->segments.size() != gc.segments.size()) return false;
  for (std::size_t i = 0; i < gc.segments.size(); ++i) {
    const auto& got = out.record->segments[i];
    const auto& want = gc.segments[i];
    if (got.start.seconds() != want.start || got.end.seconds() != want.end || got.text != want.text) return false;
    if (got.shares.size() != want.shares.size()) return false;
    for (std::size_t k = 0; k < want.shares.size(); ++k) {
      if (got.shares[k].speaker_id != want.shares[k].speaker || std::abs(got.shares[k].fraction - want.shares[k].fraction) > 1e-12)
        return false;
    }
  }
  return true;
}

transcript::MeetingRecord meeting_of_length(std::int64_t secs, int day) {
  transcript::MeetingRecord m;
  m.info.city = "x";
  m.info.date = {2022, 1, day};
  m.segments.push_back({{{"SPEAKER_00", 1.0}}, transcript::TimeStamp(0), transcript::TimeStamp(secs), "hello"});
  return m;
}

Verdict parser_conformance() {
  const auto suite = testing::grammar_suite();
  int ok = 0;
  std::string first_bad;
  for (const auto& gc : suite) {
    if (grammar_case_ok(gc)) {
      ++ok;
    } else if (first_bad.empty()) {
      first_bad = ", first failure: " + gc.label;
    }
  }
  std::vector<transcript::MeetingRecord> ms{meeting_of_length(899, 1), meeting_of_length(900, 2),
                                            meeting_of_length(54000, 3), meeting_of_length(54001, 4)};
  const auto f = transcript::filter_meetings(ms);
  const bool bounds = f.kept.size() == 2 && f.kept[0].duration_seconds() == 900 && f.kept[1].duration_seconds() == 54000 &&
                      f.dropped.size() == 2;
  Verdict v;
  v.pass = ok == static_cast<int>(suite.size()) && suite.size() == 200 && bounds;
  v.detail = std::to_string(ok) + "/" + std::to_string(suite.size()) + " grammar cases, filter keeps 900..54000 s " +
             (bounds ? "exactly" : "WRONG") + first_bad;
  return v;
}

// ---- 8 ----
Verdict regex_fidelity() {
  struct Ceremonial {
    const char* text;
    bool expected;
  };
  const std::vector<Ceremonial> ceremonial = {
      {"Proclamation declaring Arbor Day", true},
      {"Two proclamations for local heroes", true},
      {"Commendation for the fire department", true},
      {"Certificate of recognition for volunteers", true},
      {"Certificates of appreciation", true},
      {"Tribute to a retiring clerk", true},
      {"Resolution honoring the 1985 champions", true},
      {"Park renamed in honor of Mayor Lee", true},
      {"In memoriam: former councilmember", true},
      {"Meeting adjourned in memory of a resident", true},
      {"Adjournment in memory of a resident", true},
      {"Domestic Violence Awareness Month", true},
      {"Filipino American History Month", true},
      {"Asian Pacific Heritage Month", true},
      {"Suicide Prevention Month", true},
      {"Day of Remembrance", true},
      {"Emergency proclamation ratified", false},
      {"Proclamation of local emergency", false},
      {"COVID-19 proclamation extension", false},
      {"Honoring coronavirus responders", false},
      {"Tribute after the 2020 disasters", false},
      {"State of emergency proclamation", false},
      {"Proclamations", true},
      {"Proclaim the week", false},
      {"Certificate of occupancy fee", false},
      {"Historic preservation award", false},
      {"Recognition month", false},
      {"Honor roll", false},
      {"Zoning amendment", false},
      {"Attributes of the site", false},
  };
  int c_ok = 0;
  std::string first_bad;
  for (const auto& c : ceremonial) {
    if (annotations::is_ceremonial_text(c.text) == c.expected) {
      ++c_ok;
    } else if (first_bad.empty()) {
      first_bad = std::string(", first failure: \"") + c.text + "\"";
    }
  }

  using KT = annotations::KeywordTopic;
  struct Keyword {
    const char* text;
    KT topic;
    std::size_t expected;
  };
  const std::vector<Keyword> keywords = {
      {"Parking, parkin and PARKING but not parked or parkings", KT::parking, 3},
      {"traffic congestion with cars and a car in gridlock; carpool", KT::traffic, 5},
      {"affordable housing, affordability, income; incomes", KT::affordability, 3},
      {"crime safety police violence theft assault criminal criminals", KT::crime, 7},
      {"school student classroom enrollment schools students", KT::schools, 4},
      {"infrastructure sewer water drainage utility utilities pipe pipes electric power powerful", KT::infrastructure, 10},
      {"aesthetic appearance beauty character historic preserv style design architecture shadow tall preservation taller",
       KT::aesthetics, 11},
      {"environment wildlife animal bird tree pollution toxic habitat greenhouse climate hazard trees", KT::environment, 11},
  };
  int k_ok = 0;
  for (const auto& k : keywords) {
    const auto got = annotations::keyword_count(k.text, k.topic);
    if (got == k.expected) {
      ++k_ok;
    } else if (first_bad.empty()) {
      first_bad = std::string(", first keyword failure: ") + std::string(annotations::to_string(k.topic)) + " got " +
                  std::to_string(got);
    }
  }
  Verdict v;
  v.pass = c_ok == static_cast<int>(ceremonial.size()) && k_ok == static_cast<int>(keywords.size());
  v.detail = "ceremonial " + std::to_string(c_ok) + "/" + std::to_string(ceremonial.size()) + ", keyword " +
             std::to_string(k_ok) + "/" + std::to_string(keywords.size()) + first_bad;
  return v;
}

// ---- 9 ----
std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (e.is_directory()) {
      out[rel + "/"] = "";
      continue;
    }
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[rel] = ss.str();
  }
  return out;
}

Verdict determinism() {
  const fs::path config = fs::path(COUNCILKIT_FIXTURES_DIR) / "corpus" / "config.json";
  const fs::path tmp = fs::temp_directory_path() / ("councilkit-accept-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  std::ostringstream log;
  const int threads_before = omp_get_max_threads();
  std::vector<std::map<std::string, std::string>> trees;
  for (int run = 0; run < 2; ++run) {
    pipeline::LoadOptions lo;
    lo.output_dir = tmp / ("run" + std::to_string(run));
    omp_set_num_threads(run == 0 ? 1 : std::max(2, threads_before));
    const auto cfg = pipeline::load_config(config, lo);
    pipeline::cmd_all(cfg, {}, log);
    trees.push_back(tree_contents(pipeline::run_directory(cfg)));
  }
  omp_set_num_threads(threads_before);
  fs::remove_all(tmp);
  std::size_t differing = 0;
  for (const auto& [k, v] : trees[0]) {
    const auto it = trees[1].find(k);
    if (it == trees[1].end() || it->second != v) ++differing;
  }
  Verdict v;
  v.pass = !trees[0].empty() && trees[0].size() == trees[1].size() && differing == 0;
  v.detail = std::to_string(trees[0].size()) + " entries per run (1 thread vs " + std::to_string(std::max(2, threads_before)) +
             "), " + std::to_string(differing) + " differ";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"linkage oracle equivalence", linkage_oracle},
      {"validation arithmetic", validation_arithmetic},
      {"did recovery", did_recovery},
      {"twfe vs group-time contrast", twfe_contrast},
      {"regression calibration", regression_calibration},
      {"unanimity audit", unanimity_audit},
      {"parser conformance", parser_conformance},
      {"keyword and ceremonial regex", regex_fidelity},
      {"end-to-end determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
