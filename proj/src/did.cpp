#include "council/did.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "council/csv.hpp"
#include "council/stats.hpp"
#include "council/text.hpp"

namespace council::did {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool parse_int_exact(std::string_view s, int& out) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}
}  // namespace

int parse_month(std::string_view raw) {
  auto s = text::trim(raw);
  int v = 0;
  if (parse_int_exact(s, v)) return v;
  if (s.size() == 7 && s[4] == '-') {
    int y = 0, m = 0;
    if (parse_int_exact(s.substr(0, 4), y) && parse_int_exact(s.substr(5, 2), m) && m >= 1 && m <= 12) {
      return 12 * y + m - 1;
    }
  }
  throw SchemaError("bad month '" + std::string(raw) + "': expected an integer or YYYY-MM");
}

// ---- panel ----

Panel::Panel(const std::vector<PanelRow>& rows, std::vector<std::string> covariate_names)
    : covariate_names_(std::move(covariate_names)) {
  if (rows.empty()) throw SchemaError("panel has no rows");
  std::map<std::string, std::optional<int>> cohort_of;
  int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
  for (const auto& r : rows) {
    if (r.covariates.size() != covariate_names_.size()) {
      throw SchemaError("panel row for " + r.city + " has " + std::to_string(r.covariates.size()) +
                        " covariates, expected " + std::to_string(covariate_names_.size()));
    }
    auto [it, fresh] = cohort_of.try_emplace(r.city, r.cohort);
    if (!fresh && it->second != r.cohort) throw SchemaError("city " + r.city + " has conflicting cohort months");
    lo = std::min(lo, r.month);
    hi = std::max(hi, r.month);
  }
  first_ = lo;
  n_months_ = hi - lo + 1;
  std::map<std::string, std::size_t> index;
  for (const auto& [c, g] : cohort_of) {
    index[c] = cities_.size();
    cities_.push_back(c);
    cohorts_.push_back(g);
  }
  const std::size_t cells = cities_.size() * static_cast<std::size_t>(n_months_);
  y_.assign(cells, kNaN);
  present_.assign(cells, 0);
  cov_.assign(covariate_names_.size(), std::vector<double>(cells, kNaN));
  for (const auto& r : rows) {
    const std::size_t at = index[r.city] * static_cast<std::size_t>(n_months_) + static_cast<std::size_t>(r.month - first_);
    if (present_[at]) {
      throw SchemaError("duplicate panel row for (" + r.city + ", " + std::to_string(r.month) + ")");
    }
    present_[at] = 1;
    y_[at] = r.outcome;
    for (std::size_t k = 0; k < r.covariates.size(); ++k) cov_[k][at] = r.covariates[k];
  }
}

Panel Panel::read_csv(const std::string& path) {
  auto t = csv::read_file(path);
  const auto cc = t.require("city"), mc = t.require("month"), gc = t.require("cohort_month"),
             oc = t.require("outcome");
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t j = 0; j < t.header().size(); ++j) {
    if (j == cc || j == mc || j == gc || j == oc) continue;
    cov_cols.push_back(j);
    cov_names.push_back(t.header()[j]);
  }
  std::vector<PanelRow> rows;
  rows.reserve(t.size());
  for (const auto& row : t.rows()) {
    PanelRow r;
    r.city = row[cc];
    if (text::trim(r.city).empty()) throw SchemaError("panel row with an empty city");
    r.month = parse_month(row[mc]);
    if (!text::trim(row[gc]).empty()) r.cohort = parse_month(row[gc]);
    r.outcome = csv::parse_double(row[oc]);
    for (auto j : cov_cols) r.covariates.push_back(csv::parse_double(row[j]));
    rows.push_back(std::move(r));
  }
  return Panel(rows, std::move(cov_names));
}

double Panel::outcome(std::size_t i, int month) const {
  if (month < first_ || month > last_month()) return kNaN;
  return y_[i * static_cast<std::size_t>(n_months_) + static_cast<std::size_t>(month - first_)];
}

double Panel::covariate(std::size_t k, std::size_t i, int month) const {
  if (month < first_ || month > last_month()) return kNaN;
  return cov_[k][i * static_cast<std::size_t>(n_months_) + static_cast<std::size_t>(month - first_)];
}

std::vector<int> Panel::treated_cohorts() const {
  std::set<int> s;
  for (const auto& g : cohorts_) {
    if (g) s.insert(*g);
  }
  return {s.begin(), s.end()};
}

std::vector<PanelRow> Panel::rows() const {
  std::vector<PanelRow> out;
  for (std::size_t i = 0; i < cities_.size(); ++i) {
    for (int m = 0; m < n_months_; ++m) {
      const std::size_t at = i * static_cast<std::size_t>(n_months_) + static_cast<std::size_t>(m);
      if (!present_[at]) continue;
      PanelRow r;
      r.city = cities_[i];
      r.month = first_ + m;
      r.cohort = cohorts_[i];
      r.outcome = y_[at];
      for (const auto& c : cov_) r.covariates.push_back(c[at]);
      out.push_back(std::move(r));
    }
  }
  return out;
}

Panel Panel::select_cities(std::span<const std::size_t> cities) const {
  std::set<std::size_t> keep(cities.begin(), cities.end());
  std::vector<PanelRow> out;
  for (auto& r : rows()) {
    auto it = std::lower_bound(cities_.begin(), cities_.end(), r.city);
    if (keep.count(static_cast<std::size_t>(it - cities_.begin()))) out.push_back(std::move(r));
  }
  return Panel(out, covariate_names_);
}

Panel Panel::with_outcomes(std::vector<double> dense) const {
  if (dense.size() != y_.size()) throw std::invalid_argument("with_outcomes: wrong size");
  Panel p = *this;
  p.y_ = std::move(dense);
  for (std::size_t i = 0; i < p.y_.size(); ++i) {
    if (!present_[i]) p.y_[i] = kNaN;
  }
  return p;
}

// ---- group-time ATTs ----

namespace {

double weight_of(CityWeights w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

bool in_window(int e, const DidOptions& o) {
  if (o.min_event && e < *o.min_event) return false;
  if (o.max_event && e > *o.max_event) return false;
  return true;
}

}  // namespace

GroupTimeATT att_gt(const Panel& panel, int g, int t, const DidOptions& options, CityWeights weights) {
  GroupTimeATT cell;
  cell.cohort = g;
  cell.period = t;
  const int base = g - 1;
  const int horizon = std::max(t, base);
  double sum_t = 0.0, w_t = 0.0, sum_c = 0.0, w_c = 0.0;
  for (std::size_t i = 0; i < panel.n_cities(); ++i) {
    const double w = weight_of(weights, i);
    if (w <= 0.0) continue;
    const auto gi = panel.cohort(i);
    const bool treated = gi && *gi == g;
    const bool control = !treated && (gi ? *gi > horizon : options.include_never_treated);
    if (!treated && !control) continue;
    const double d = panel.outcome(i, t) - panel.outcome(i, base);
    if (!std::isfinite(d)) {
      (treated ? cell.dropped_treated : cell.dropped_control) += 1;
      continue;
    }
    if (treated) {
      sum_t += w * d;
      w_t += w;
      ++cell.n_treated;
    } else {
      sum_c += w * d;
      w_c += w;
      ++cell.n_control;
    }
  }
  cell.identified = w_t > 0.0 && w_c > 0.0;
  cell.estimate = cell.identified ? sum_t / w_t - sum_c / w_c : kNaN;
  cell.se = kNaN;
  return cell;
}

std::vector<GroupTimeATT> att_gt_all(const Panel& panel, const DidOptions& options, CityWeights weights) {
  std::vector<GroupTimeATT> cells;
  for (int g : panel.treated_cohorts()) {
    const int base = g - 1;
    if (base < panel.first_month() || base > panel.last_month()) continue;
    for (int t = panel.first_month(); t <= panel.last_month(); ++t) {
      if (t == base || !in_window(t - g, options)) continue;
      cells.push_back(att_gt(panel, g, t, options, weights));
    }
  }
  return cells;
}

std::map<int, double> cohort_sizes(const Panel& panel, CityWeights weights) {
  std::map<int, double> sizes;
  for (std::size_t i = 0; i < panel.n_cities(); ++i) {
    if (auto g = panel.cohort(i)) sizes[*g] += weight_of(weights, i);
  }
  return sizes;
}

std::vector<EventTimeEstimate> aggregate_event_study(std::span<const GroupTimeATT> cells, const Panel& panel,
                                                     CityWeights weights) {
  const auto sizes = cohort_sizes(panel, weights);
  std::map<int, std::vector<const GroupTimeATT*>> by_e;
  for (const auto& c : cells) {
    if (!c.identified) continue;
    auto it = sizes.find(c.cohort);
    if (it == sizes.end() || it->second <= 0.0) continue;
    by_e[c.event_time()].push_back(&c);
  }
  std::vector<EventTimeEstimate> out;
  if (by_e.empty()) return out;
  by_e.try_emplace(-1);
  for (const auto& [e, list] : by_e) {
    EventTimeEstimate est;
    est.event_time = e;
    if (e == -1) {
      out.push_back(est);
      continue;
    }
    double total = 0.0;
    for (const auto* c : list) total += sizes.at(c->cohort);
    for (const auto* c : list) {
      const double w = sizes.at(c->cohort) / total;
      est.weights.push_back({c->cohort, c->period, w});
      est.estimate += w * c->estimate;
    }
    out.push_back(std::move(est));
  }
  return out;
}

OverallEstimate aggregate_overall(std::span<const GroupTimeATT> cells, const Panel& panel, CityWeights weights) {
  const auto sizes = cohort_sizes(panel, weights);
  OverallEstimate out;
  double total = 0.0;
  std::vector<const GroupTimeATT*> post;
  for (const auto& c : cells) {
    if (!c.identified || c.period < c.cohort) continue;
    auto it = sizes.find(c.cohort);
    if (it == sizes.end() || it->second <= 0.0) continue;
    post.push_back(&c);
    total += it->second;
  }
  if (post.empty()) throw UndefinedError("no identified post-treatment cells");
  for (const auto* c : post) {
    const double w = sizes.at(c->cohort) / total;
    out.weights.push_back({c->cohort, c->period, w});
    out.estimate += w * c->estimate;
  }
  return out;
}

// ---- bootstrap ----

std::uint64_t draw_seed(std::uint64_t master, std::uint64_t draw) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (draw + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> resample_weights(std::size_t n_cities, std::uint64_t seed) {
  std::vector<double> w(n_cities, 0.0);
  if (n_cities == 0) return w;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_cities - 1);
  for (std::size_t k = 0; k < n_cities; ++k) w[pick(rng)] += 1.0;
  return w;
}

BootstrapResult cluster_bootstrap_se(const Panel& panel, const std::vector<std::string>& names,
                                     const Statistic& statistic, const BootstrapOptions& options) {
  if (options.draws < 2) throw std::invalid_argument("bootstrap needs at least two draws");
  BootstrapResult res;
  res.n_clusters = panel.n_cities();
  res.draws = options.draws;
  res.seed = options.seed;
  if (res.n_clusters < 20) {
    res.warnings.push_back("only " + std::to_string(res.n_clusters) + " clusters; bootstrap SEs may be unreliable");
  }
  const std::size_t k = names.size();
  const auto point = statistic(panel, {});
  if (point.size() != k) throw std::logic_error("statistic returned the wrong number of values");

  const auto B = static_cast<std::size_t>(options.draws);
  std::vector<double> draws(B * k, kNaN);
  auto run = [&](std::size_t b) {
    const auto w = resample_weights(panel.n_cities(), draw_seed(options.seed, b));
    auto v = statistic(panel, w);
    std::copy(v.begin(), v.end(), draws.begin() + static_cast<std::ptrdiff_t>(b * k));
  };
  const auto nb = static_cast<std::ptrdiff_t>(B);
  if (options.exec == Exec::serial) {
    for (std::ptrdiff_t b = 0; b < nb; ++b) run(static_cast<std::size_t>(b));
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t b = 0; b < nb; ++b) run(static_cast<std::size_t>(b));
  }

  for (std::size_t j = 0; j < k; ++j) {
    BootstrapStat s;
    s.name = names[j];
    s.estimate = point[j];
    std::vector<double> vals;
    vals.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
      const double v = draws[b * k + j];
      if (std::isfinite(v)) {
        vals.push_back(v);
      } else {
        ++s.undefined_draws;
      }
    }
    s.flagged = static_cast<double>(s.undefined_draws) > 0.1 * static_cast<double>(B);
    if (s.flagged) res.warnings.push_back(s.name + ": undefined in " + std::to_string(s.undefined_draws) + " draws");
    if (vals.size() >= 2) {
      s.se = std::sqrt(stats::variance(vals));
      s.ci_low = stats::quantile(vals, 0.025);
      s.ci_high = stats::quantile(vals, 0.975);
    } else {
      s.se = s.ci_low = s.ci_high = kNaN;
    }
    res.stats.push_back(std::move(s));
  }
  return res;
}

DidResult estimate(const Panel& panel, const DidOptions& options, const BootstrapOptions& bootstrap) {
  DidResult out;
  out.cells = att_gt_all(panel, options);
  for (int g : panel.treated_cohorts()) {
    if (g - 1 < panel.first_month() || g - 1 > panel.last_month()) {
      out.warnings.push_back("cohort " + std::to_string(g) + " has no base month inside the panel; skipped");
    }
  }
  for (const auto& c : out.cells) {
    if (!c.identified) {
      out.warnings.push_back("cell (" + std::to_string(c.cohort) + ", " + std::to_string(c.period) +
                             ") unidentifiable: no treated or no control cities");
    }
  }
  out.event_study = aggregate_event_study(out.cells, panel);
  out.overall = aggregate_overall(out.cells, panel);

  std::vector<std::string> names{"overall"};
  std::vector<int> events;
  for (const auto& e : out.event_study) {
    if (e.event_time == -1) continue;
    events.push_back(e.event_time);
    names.push_back("e=" + std::to_string(e.event_time));
  }
  std::map<std::pair<int, int>, std::size_t> cell_slot;
  for (const auto& c : out.cells) {
    if (!c.identified) continue;
    cell_slot[{c.cohort, c.period}] = names.size();
    names.push_back("att(" + std::to_string(c.cohort) + "," + std::to_string(c.period) + ")");
  }

  const Statistic stat = [&](const Panel& p, CityWeights w) {
    std::vector<double> v(names.size(), kNaN);
    const auto cells = att_gt_all(p, options, w);
    try {
      v[0] = aggregate_overall(cells, p, w).estimate;
    } catch (const UndefinedError&) {
    }
    const auto es = aggregate_event_study(cells, p, w);
    std::map<int, double> es_map;
    for (const auto& e : es) es_map[e.event_time] = e.estimate;
    for (std::size_t j = 0; j < events.size(); ++j) {
      auto it = es_map.find(events[j]);
      if (it != es_map.end()) v[1 + j] = it->second;
    }
    for (const auto& c : cells) {
      if (!c.identified) continue;
      auto it = cell_slot.find({c.cohort, c.period});
      if (it != cell_slot.end()) v[it->second] = c.estimate;
    }
    return v;
  };
  out.bootstrap = cluster_bootstrap_se(panel, names, stat, bootstrap);
  const auto& bs = out.bootstrap.stats;
  out.overall.se = bs[0].se;
  out.overall.ci_low = bs[0].ci_low;
  out.overall.ci_high = bs[0].ci_high;
  std::size_t j = 1;
  for (auto& e : out.event_study) {
    if (e.event_time == -1) continue;
    e.se = bs[j].se;
    e.ci_low = bs[j].ci_low;
    e.ci_high = bs[j].ci_high;
    ++j;
  }
  for (auto& c : out.cells) {
    if (!c.identified) continue;
    c.se = bs[cell_slot.at({c.cohort, c.period})].se;
  }
  out.warnings.insert(out.warnings.end(), out.bootstrap.warnings.begin(), out.bootstrap.warnings.end());
  return out;
}

// ---- covariates, heterogeneity, comparison ----

namespace {

stats::ObservationMatrix panel_matrix(const Panel& panel, std::vector<std::size_t>& dense_index) {
  stats::ObservationMatrix m;
  std::vector<std::string> city, month;
  for (std::size_t i = 0; i < panel.n_cities(); ++i) {
    for (int t = panel.first_month(); t <= panel.last_month(); ++t) {
      const double y = panel.outcome(i, t);
      if (!std::isfinite(y)) continue;
      m.y.push_back(y);
      city.push_back(panel.city(i));
      month.push_back(std::to_string(t));
      dense_index.push_back(i * static_cast<std::size_t>(panel.n_months()) +
                            static_cast<std::size_t>(t - panel.first_month()));
    }
  }
  m.add_fixed_effect("city", city);
  m.add_fixed_effect("month", std::move(month));
  m.cluster = std::move(city);
  return m;
}

}  // namespace

Residualized residualize(const Panel& panel, const std::vector<std::string>& covariates) {
  std::vector<std::size_t> dense;
  auto m = panel_matrix(panel, dense);
  const auto& names = panel.covariate_names();
  for (const auto& c : covariates) {
    auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) throw SchemaError("panel has no covariate '" + c + "'");
    const auto k = static_cast<std::size_t>(it - names.begin());
    std::vector<double> col;
    col.reserve(dense.size());
    for (auto at : dense) {
      const auto i = at / static_cast<std::size_t>(panel.n_months());
      const int t = panel.first_month() + static_cast<int>(at % static_cast<std::size_t>(panel.n_months()));
      col.push_back(panel.covariate(k, i, t));
    }
    m.add_covariate(c, std::move(col));
  }
  stats::FitOptions opt;
  opt.covariance = stats::Covariance::classical;
  const auto fit = stats::fe_ols(m, opt);
  std::vector<double> y(static_cast<std::size_t>(panel.n_cities()) * static_cast<std::size_t>(panel.n_months()), kNaN);
  for (std::size_t r = 0; r < fit.rows.size(); ++r) y[dense[fit.rows[r]]] = fit.residuals[r];
  return {panel.with_outcomes(std::move(y)), fit.dropped_collinear};
}

MedianSplit median_split(const Panel& panel, const std::map<std::string, double>& characteristic) {
  MedianSplit out;
  std::vector<std::size_t> never, treated;
  std::vector<double> values;
  std::vector<double> treated_values;
  for (std::size_t i = 0; i < panel.n_cities(); ++i) {
    if (!panel.cohort(i)) {
      never.push_back(i);
      continue;
    }
    auto it = characteristic.find(panel.city(i));
    if (it == characteristic.end() || !std::isfinite(it->second)) {
      out.excluded.push_back(panel.city(i));
      continue;
    }
    treated.push_back(i);
    treated_values.push_back(it->second);
  }
  if (treated.empty()) throw UndefinedError("median_split: no treated city has the characteristic");
  out.median = stats::median(treated_values);
  std::vector<std::size_t> above = never, below = never;
  std::size_t n_above = 0, n_below = 0;
  for (std::size_t k = 0; k < treated.size(); ++k) {
    if (treated_values[k] >= out.median) {
      above.push_back(treated[k]);
      ++n_above;
    } else {
      below.push_back(treated[k]);
      ++n_below;
    }
  }
  out.degenerate = n_above == 0 || n_below == 0;
  out.above = panel.select_cities(above);
  if (!below.empty()) out.below = panel.select_cities(below);
  return out;
}

TwfeResult twfe_beta(const Panel& panel) {
  std::vector<std::size_t> dense;
  auto m = panel_matrix(panel, dense);
  std::vector<double> d;
  d.reserve(dense.size());
  for (auto at : dense) {
    const auto i = at / static_cast<std::size_t>(panel.n_months());
    const int t = panel.first_month() + static_cast<int>(at % static_cast<std::size_t>(panel.n_months()));
    const auto g = panel.cohort(i);
    d.push_back(g && t >= *g ? 1.0 : 0.0);
  }
  m.add_covariate("D", std::move(d));
  const auto fit = stats::fe_ols(m);
  if (!fit.has("D")) throw UndefinedError("twfe_beta: treatment has no variation beyond the fixed effects");
  const auto& c = fit.at("D");
  return {c.estimate, c.se, c.p, fit.n_obs, fit.n_clusters};
}

// ---- remote-access coding ----

std::vector<RemoteAccessRecord> read_remote_access(const std::string& path) {
  auto t = csv::read_file(path);
  const auto cc = t.require("city"), sc = t.require("remote_start"), ec = t.require("remote_end");
  std::vector<RemoteAccessRecord> out;
  std::set<std::string> seen;
  for (const auto& row : t.rows()) {
    RemoteAccessRecord r;
    r.city = row[cc];
    if (!seen.insert(r.city).second) throw SchemaError("remote-access coding lists " + r.city + " twice");
    if (!text::trim(row[sc]).empty()) r.start = parse_month(row[sc]);
    if (!text::trim(row[ec]).empty()) r.end = parse_month(row[ec]);
    if (r.start && r.end && *r.end < *r.start) throw SchemaError("remote access for " + r.city + " ends before it starts");
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, std::optional<int>> cohort_months(std::span<const RemoteAccessRecord> records) {
  std::map<std::string, std::optional<int>> out;
  for (const auto& r : records) out[r.city] = r.end;
  return out;
}

std::map<std::string, int> months_of_access(std::span<const RemoteAccessRecord> records) {
  std::map<std::string, int> out;
  for (const auto& r : records) {
    if (r.start && r.end) out[r.city] = *r.end - *r.start;
  }
  return out;
}

}  // namespace council::did
