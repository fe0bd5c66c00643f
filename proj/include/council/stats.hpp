#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "council/common.hpp"

namespace council::stats {

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);
double median(std::vector<double> x);
/// Linear-interpolation quantile (the "type 7" definition), q in [0, 1].
double quantile(std::vector<double> x, double q);

// ---- Welch ----

struct WelchResult {
  double difference = 0.0;  // mean_a - mean_b
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

/// Two-sided Welch test with Satterthwaite degrees of freedom. Throws
/// UndefinedError for a sample under two values or with zero variance.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// Two-sided p-value of a t statistic.
double student_t_p(double t, double dof);
/// Two-sided p-value of a standard-normal statistic.
double normal_p(double z);

// ---- regression ----

struct FactorColumn {
  std::string name;
  std::vector<std::string> levels;  // one per row; empty marks missing
};

/// Regression input. Covariates are real-valued (NaN marks missing); fixed
/// effects are expanded to dummies with the first sorted level as reference.
struct ObservationMatrix {
  std::vector<double> y;
  std::vector<std::string> covariate_names;
  std::vector<std::vector<double>> covariates;
  std::vector<FactorColumn> fixed_effects;
  std::vector<std::string> cluster;  // empty: every row its own cluster

  std::size_t rows() const { return y.size(); }
  void add_covariate(std::string name, std::vector<double> values);
  void add_fixed_effect(std::string name, std::vector<std::string> levels);
  /// Throws SchemaError when column lengths disagree.
  void validate() const;
};

enum class Covariance { cluster, hc1, classical };

struct FitOptions {
  Covariance covariance = Covariance::cluster;
  bool intercept = true;
  /// Include fixed-effect dummies among the reported coefficients.
  bool report_fixed_effects = false;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double p = 1.0;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  std::size_t n_params = 0;  // kept design columns, dummies included
  bool converged = true;
  bool separation = false;
  int iterations = 0;
  std::vector<std::string> dropped_collinear;
  std::size_t rows_dropped_missing = 0;
  std::map<std::string, std::size_t> missing_by_column;
  std::size_t rows_dropped_constant_fe = 0;
  std::vector<double> residuals;   // OLS residuals (or response residuals y - p for logit), kept rows
  std::vector<std::size_t> rows;   // original indices of kept rows
  Warnings warnings;

  const Coefficient& at(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// Least squares on the dummy-expanded design with the chosen covariance.
/// Collinear columns are dropped in column order and reported.
RegressionFit fe_ols(const ObservationMatrix& data, const FitOptions& options = {});

/// Logit via iteratively reweighted least squares. Fixed-effect levels whose
/// rows share one outcome value are dropped first. Separation or
/// non-convergence is flagged; the fit is still returned.
RegressionFit fe_logit(const ObservationMatrix& data, const FitOptions& options = {});

// ---- descriptive ----

/// s_0 = x_0, s_t = alpha * x_t + (1 - alpha) * s_{t-1}.
std::vector<double> ewma(std::span<const double> x, double alpha);

struct AgeRate {
  int age = 0;
  std::size_t voters = 0;
  std::size_t participants = 0;
  std::optional<double> rate;  // missing for a zero denominator
};

/// Participants over registered voters per whole year of age, ascending.
std::vector<AgeRate> participation_rate_by_age(std::span<const double> voter_ages,
                                               std::span<const double> participant_ages);

struct PersonCityCount {
  std::string person;
  std::string city;
  std::size_t meetings = 0;
};

struct RepeatSummary {
  std::size_t individuals = 0;
  std::size_t one_timers = 0;
  std::size_t repeaters = 0;
  std::size_t appearances = 0;
  std::size_t one_timer_appearances = 0;
  std::size_t repeater_appearances = 0;
  double one_timer_share() const;
  double repeater_share() const;
  double one_timer_appearance_share() const;
  double repeater_appearance_share() const;
  double repeater_median = 0.0;
  double repeater_mean = 0.0;
  double repeater_sd = 0.0;
  std::size_t repeater_max = 0;
};

/// Units are (person, city); duplicate units are summed.
RepeatSummary repeat_summary(std::span<const PersonCityCount> counts);

struct StanceSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1; NaN below two scores
  double share_support = 0.0;  // >= 0.7
  double share_oppose = 0.0;   // <= -0.7
};

/// Nullopt for an empty group.
std::optional<StanceSummary> stance_summary(std::span<const double> scores);

struct GroupedScore {
  std::string group;
  double score = 0.0;
};

std::map<std::string, StanceSummary> stance_aggregate(std::span<const GroupedScore> scores);

enum class Bandwidth { silverman, scott };

class GaussianKde {
 public:
  explicit GaussianKde(std::vector<double> values, Bandwidth rule = Bandwidth::silverman);
  GaussianKde(std::vector<double> values, double bandwidth);

  double bandwidth() const { return h_; }
  double operator()(double x) const;
  std::vector<double> evaluate(std::span<const double> grid) const;

 private:
  std::vector<double> values_;
  double h_ = 0.0;
};

/// `n` evenly spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace council::stats
