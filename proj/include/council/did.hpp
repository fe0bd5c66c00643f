#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "council/common.hpp"

namespace council::did {

struct PanelRow {
  std::string city;
  int month = 0;
  std::optional<int> cohort;  // first treated month; nullopt for never treated
  double outcome = 0.0;       // NaN marks a missing month
  std::vector<double> covariates;
};

/// Month token: a plain integer index, or YYYY-MM mapped to 12 * year + month - 1.
int parse_month(std::string_view s);

/// City-by-month panel, cities sorted by name. Read-only after construction.
class Panel {
 public:
  Panel() = default;
  /// Throws SchemaError on duplicate (city, month) rows, a city with
  /// conflicting cohorts, or covariate rows of the wrong width.
  Panel(const std::vector<PanelRow>& rows, std::vector<std::string> covariate_names = {});

  /// Header: city,month,cohort_month,outcome[,cov_1..cov_k]. Extra columns
  /// after `outcome` are covariates.
  static Panel read_csv(const std::string& path);

  std::size_t n_cities() const { return cities_.size(); }
  int first_month() const { return first_; }
  int last_month() const { return first_ + n_months_ - 1; }
  int n_months() const { return n_months_; }

  const std::string& city(std::size_t i) const { return cities_[i]; }
  std::optional<int> cohort(std::size_t i) const { return cohorts_[i]; }
  /// NaN outside the panel or for a missing month.
  double outcome(std::size_t i, int month) const;
  double covariate(std::size_t k, std::size_t i, int month) const;
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  /// Distinct treated cohort months, ascending.
  std::vector<int> treated_cohorts() const;
  std::vector<PanelRow> rows() const;
  Panel select_cities(std::span<const std::size_t> cities) const;
  /// Same panel with outcomes replaced (city-major dense layout).
  Panel with_outcomes(std::vector<double> dense) const;

 private:
  std::vector<std::string> cities_;
  std::vector<std::optional<int>> cohorts_;
  std::vector<std::string> covariate_names_;
  int first_ = 0;
  int n_months_ = 0;
  std::vector<double> y_;                 // n_cities x n_months
  std::vector<std::vector<double>> cov_;  // per covariate, same layout
  std::vector<char> present_;             // row exists
};

struct DidOptions {
  bool include_never_treated = true;
  std::optional<int> min_event;
  std::optional<int> max_event;
};

struct GroupTimeATT {
  int cohort = 0;
  int period = 0;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::size_t dropped_treated = 0;  // cohort cities missing t or g-1
  std::size_t dropped_control = 0;
  bool identified = false;

  int event_time() const { return period - cohort; }
};

/// Resampling multiplicity per city; empty means every city once.
using CityWeights = std::span<const double>;

/// ATT(g, t) against the base month g - 1. Controls are cities untreated at
/// both t and g - 1 and not in cohort g (never-treated included unless
/// disabled). Unidentified when either side is empty.
GroupTimeATT att_gt(const Panel& panel, int g, int t, const DidOptions& options = {}, CityWeights weights = {});

/// Every cell (g, t) with t != g - 1 inside the panel and the event window.
std::vector<GroupTimeATT> att_gt_all(const Panel& panel, const DidOptions& options = {}, CityWeights weights = {});

/// City count (or resampled multiplicity) per treated cohort.
std::map<int, double> cohort_sizes(const Panel& panel, CityWeights weights = {});

struct AggregationWeight {
  int cohort = 0;
  int period = 0;
  double weight = 0.0;
};

struct EventTimeEstimate {
  int event_time = 0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<AggregationWeight> weights;
};

struct OverallEstimate {
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<AggregationWeight> weights;
};

/// Cohort-size weighted average of ATT(g, g + e) per event time over the
/// identified cells. e = -1 is the reference and reported as exactly 0.
std::vector<EventTimeEstimate> aggregate_event_study(std::span<const GroupTimeATT> cells, const Panel& panel,
                                                     CityWeights weights = {});

/// Average of identified post cells (t >= g), each weighted by its cohort
/// size. Throws UndefinedError when there are none.
OverallEstimate aggregate_overall(std::span<const GroupTimeATT> cells, const Panel& panel, CityWeights weights = {});

// ---- inference ----

struct BootstrapOptions {
  int draws = 999;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

/// Deterministic per-draw seed derived from the master seed.
std::uint64_t draw_seed(std::uint64_t master, std::uint64_t draw);

/// City multiplicities for one bootstrap draw.
std::vector<double> resample_weights(std::size_t n_cities, std::uint64_t seed);

struct BootstrapStat {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t undefined_draws = 0;
  bool flagged = false;  // undefined in more than 10% of draws
};

struct BootstrapResult {
  std::vector<BootstrapStat> stats;
  std::size_t n_clusters = 0;
  int draws = 0;
  std::uint64_t seed = 0;
  Warnings warnings;
};

/// Returns one value per named statistic; NaN marks an undefined value.
using Statistic = std::function<std::vector<double>(const Panel&, CityWeights)>;

/// Resamples cities with replacement, recomputes the statistic per draw and
/// reports the standard deviation and percentile 95% interval of each
/// component. Output does not depend on thread scheduling.
BootstrapResult cluster_bootstrap_se(const Panel& panel, const std::vector<std::string>& names,
                                     const Statistic& statistic, const BootstrapOptions& options);

struct DidResult {
  std::vector<GroupTimeATT> cells;
  std::vector<EventTimeEstimate> event_study;
  OverallEstimate overall;
  BootstrapResult bootstrap;
  Warnings warnings;
};

/// Cells, event study and overall ATT with bootstrap SEs for all three.
DidResult estimate(const Panel& panel, const DidOptions& options, const BootstrapOptions& bootstrap);

// ---- covariates, heterogeneity, comparison ----

struct Residualized {
  Panel panel;
  std::vector<std::string> dropped_collinear;
};

/// Outcome replaced by the residual of OLS on the named covariates plus city
/// and month fixed effects. Missing outcomes stay missing.
Residualized residualize(const Panel& panel, const std::vector<std::string>& covariates);

struct MedianSplit {
  Panel above;
  Panel below;
  double median = 0.0;
  std::vector<std::string> excluded;  // treated cities without a value
  bool degenerate = false;            // one side has no treated city
};

/// Splits treated cities at the median of a city-level characteristic, ties
/// going above. Never-treated cities appear in both halves.
MedianSplit median_split(const Panel& panel, const std::map<std::string, double>& characteristic);

struct TwfeResult {
  double estimate = 0.0;
  double se = 0.0;
  double p = 1.0;
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
};

/// OLS of Y on D = [t >= G] with city and month dummies, city-clustered.
/// Throws UndefinedError when D has no within variation.
TwfeResult twfe_beta(const Panel& panel);

// ---- remote-access coding ----

struct RemoteAccessRecord {
  std::string city;
  std::optional<int> start;  // first month with live remote comment
  std::optional<int> end;    // first month without it; nullopt if never ended
};

/// Header: city,remote_start,remote_end (month tokens, empty allowed).
std::vector<RemoteAccessRecord> read_remote_access(const std::string& path);

/// Cohort month per city (the shutoff month, nullopt when never shut off).
std::map<std::string, std::optional<int>> cohort_months(std::span<const RemoteAccessRecord> records);

/// Months between start and end for cities with both.
std::map<std::string, int> months_of_access(std::span<const RemoteAccessRecord> records);

}  // namespace council::did
