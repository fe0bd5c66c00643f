#include <doctest.h>

#include <cmath>
#include <numeric>

#include "council/did.hpp"
#include "support/did_sim.hpp"

using namespace council;
using namespace council::did;

namespace {

// A adopts at month 2, B at month 3, C never.
Panel tiny_panel() {
  const double ya[] = {0, 1, 5, 6}, yb[] = {0, 2, 3, 9}, yc[] = {1, 1, 2, 2};
  std::vector<PanelRow> rows;
  for (int t = 0; t < 4; ++t) {
    rows.push_back({"A", t, 2, ya[t], {}});
    rows.push_back({"B", t, 3, yb[t], {}});
    rows.push_back({"C", t, std::nullopt, yc[t], {}});
  }
  return Panel(rows);
}

const GroupTimeATT& cell(const std::vector<GroupTimeATT>& cells, int g, int t) {
  for (const auto& c : cells)
    if (c.cohort == g && c.period == t) return c;
  throw std::out_of_range("no cell");
}

}  // namespace

TEST_CASE("month tokens") {
  CHECK(parse_month("17") == 17);
  CHECK(parse_month("2021-03") == 12 * 2021 + 2);
  CHECK(parse_month(" 2020-12 ") == 12 * 2020 + 11);
  CHECK_THROWS_AS(parse_month("2021-13"), SchemaError);
  CHECK_THROWS_AS(parse_month("March"), SchemaError);
}

TEST_CASE("panel construction") {
  const auto p = tiny_panel();
  CHECK(p.n_cities() == 3);
  CHECK(p.city(0) == "A");
  CHECK(p.n_months() == 4);
  CHECK(p.treated_cohorts() == std::vector<int>{2, 3});
  CHECK(p.outcome(1, 3) == 9);
  CHECK(std::isnan(p.outcome(1, 7)));
  std::vector<PanelRow> dup{{"A", 0, 2, 1.0, {}}, {"A", 0, 2, 2.0, {}}};
  CHECK_THROWS_AS(Panel{dup}, SchemaError);
  std::vector<PanelRow> conflict{{"A", 0, 2, 1.0, {}}, {"A", 1, 3, 2.0, {}}};
  CHECK_THROWS_AS(Panel{conflict}, SchemaError);
}

TEST_CASE("group-time effects by hand") {
  const auto p = tiny_panel();
  const auto cells = att_gt_all(p);
  CHECK(cell(cells, 2, 2).estimate == 3.0);
  CHECK(cell(cells, 2, 2).n_control == 2);
  CHECK(cell(cells, 2, 3).estimate == 4.0);
  CHECK(cell(cells, 2, 3).n_control == 1);
  CHECK(cell(cells, 3, 3).estimate == 6.0);
  CHECK(cell(cells, 2, 0).estimate == 0.0);
  for (const auto& c : cells) CHECK(c.period != c.cohort - 1);

  const auto overall = aggregate_overall(cells, p);
  CHECK(overall.estimate == doctest::Approx(13.0 / 3.0));
  const auto es = aggregate_event_study(cells, p);
  for (const auto& e : es) {
    if (e.event_time == 0) CHECK(e.estimate == doctest::Approx(4.5));
    if (e.event_time == 1) CHECK(e.estimate == doctest::Approx(4.0));
    if (e.event_time == -1) CHECK(e.estimate == 0.0);
  }

  DidOptions nyt;
  nyt.include_never_treated = false;
  CHECK_FALSE(att_gt(p, 2, 3, nyt).identified);
  CHECK(att_gt(p, 2, 2, nyt).estimate == 3.0);  // B alone: (5-1) - (3-2)
}

TEST_CASE("event window restricts cells") {
  DidOptions o;
  o.min_event = 0;
  o.max_event = 0;
  const auto cells = att_gt_all(tiny_panel(), o);
  for (const auto& c : cells) CHECK(c.event_time() == 0);
  CHECK(cells.size() == 2);
}

TEST_CASE("city weights act as multiplicities") {
  const auto p = tiny_panel();
  const std::vector<double> w{1, 0, 3};
  CHECK(att_gt(p, 2, 2, {}, w).estimate == 3.0);  // only C remains as control: (5-1) - (2-1)
  CHECK(cohort_sizes(p, w).at(2) == 1.0);
  CHECK(cohort_sizes(p, w).at(3) == 0.0);
}

TEST_CASE("noise-free constant effect is recovered exactly") {
  const auto p = testing::staggered_panel(1, 2.0, 0.0);
  const auto cells = att_gt_all(p);
  for (const auto& c : cells) {
    if (!c.identified) continue;
    CHECK(c.estimate == doctest::Approx(c.period >= c.cohort ? 2.0 : 0.0).epsilon(1e-9));
  }
  CHECK(aggregate_overall(cells, p).estimate == doctest::Approx(2.0).epsilon(1e-12));
}

// Reference: statsmodels two-way fixed effects on the same noise-free panel.
TEST_CASE("heterogeneous effects: group-time overall and twfe") {
  const auto p = testing::heterogeneous_panel(99, 0.0);
  const auto cs = aggregate_overall(att_gt_all(p), p);
  CHECK(cs.estimate == doctest::Approx(20.0 / 7.0).epsilon(1e-9));
  const auto tw = twfe_beta(p);
  CHECK(tw.estimate == doctest::Approx(44.0 / 31.0).epsilon(1e-9));
  CHECK(tw.n_clusters == 100);
  CHECK(tw.n_obs == 6000);
}

TEST_CASE("bootstrap draws are reproducible and schedule-free") {
  CHECK(draw_seed(1, 0) != draw_seed(1, 1));
  CHECK(draw_seed(1, 5) == draw_seed(1, 5));
  const auto w = resample_weights(50, 42);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == 50.0);
  CHECK(w == resample_weights(50, 42));

  const auto p = testing::staggered_panel(7, 2.0, 1.0, 40, 30);
  BootstrapOptions a{49, 9, Exec::serial}, b{49, 9, Exec::parallel};
  const auto ra = estimate(p, {}, a), rb = estimate(p, {}, b);
  CHECK(ra.overall.se > 0.0);
  CHECK(ra.overall.se == rb.overall.se);
  CHECK(ra.overall.ci_low == rb.overall.ci_low);
  REQUIRE(ra.event_study.size() == rb.event_study.size());
  for (std::size_t i = 0; i < ra.event_study.size(); ++i) CHECK(ra.event_study[i].se == rb.event_study[i].se);
  BootstrapOptions c{49, 10, Exec::parallel};
  CHECK(estimate(p, {}, c).overall.se != ra.overall.se);
}

TEST_CASE("bootstrap flags statistics undefined in many draws") {
  const auto p = testing::staggered_panel(3, 2.0, 1.0, 20, 10);
  const Statistic stat = [](const Panel&, CityWeights w) {
    return std::vector<double>{w.empty() || w[0] > 0 ? 1.0 : std::nan("")};
  };
  const auto r = cluster_bootstrap_se(p, {"first_city_present"}, stat, {200, 1, Exec::serial});
  REQUIRE(r.stats.size() == 1);
  CHECK(r.stats[0].undefined_draws > 20);
  CHECK(r.stats[0].flagged);
  CHECK(r.n_clusters == 20);
}

TEST_CASE("median split") {
  const auto p = testing::staggered_panel(5, 2.0, 1.0, 8, 60);
  std::map<std::string, double> ch;
  for (int i = 0; i < 8; ++i) ch[testing::city_name(i)] = i;
  ch.erase(testing::city_name(7));
  const auto s = median_split(p, ch);
  // treated: c001 c002 c003 c005 c006 (c007 excluded); median 3
  CHECK(s.median == 3.0);
  CHECK(s.excluded == std::vector<std::string>{"c007"});
  CHECK(s.above.n_cities() == 3 + 2);
  CHECK(s.below.n_cities() == 2 + 2);
  CHECK_FALSE(s.degenerate);
}

TEST_CASE("residualizing on city and month effects only removes them") {
  const auto p = testing::staggered_panel(2, 0.0, 0.0, 12, 24);
  std::vector<PanelRow> rows = p.rows();
  for (auto& r : rows) r.covariates = {std::sin(r.month + r.city.size())};
  const Panel q(rows, {"noise"});
  const auto r = residualize(q, {"noise"});
  for (std::size_t i = 0; i < r.panel.n_cities(); ++i)
    for (int t = r.panel.first_month(); t <= r.panel.last_month(); ++t) CHECK(std::abs(r.panel.outcome(i, t)) < 1e-9);
}

TEST_CASE("twfe needs within variation") {
  std::vector<PanelRow> rows;
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 5; ++t) rows.push_back({testing::city_name(i), t, std::nullopt, double(i + t), {}});
  CHECK_THROWS_AS(twfe_beta(Panel(rows)), UndefinedError);
}

TEST_CASE("remote-access coding") {
  const std::vector<RemoteAccessRecord> rs{{"a", 100, 110}, {"b", 100, std::nullopt}, {"c", std::nullopt, std::nullopt}};
  const auto g = cohort_months(rs);
  CHECK(g.at("a") == 110);
  CHECK_FALSE(g.at("b"));
  const auto m = months_of_access(rs);
  CHECK(m.size() == 1);
  CHECK(m.at("a") == 10);
  const auto read = read_remote_access(std::string(COUNCILKIT_FIXTURES_DIR) + "/corpus/remote_access.csv");
  CHECK_FALSE(read.empty());
}
