#include "council/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace council::stats {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double mean(std::span<const double> x) {
  if (x.empty()) return kNaN;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return kNaN;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) return kNaN;
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double student_t_p(double t, double dof) {
  if (!std::isfinite(t) || !(dof > 0.0)) return kNaN;
  boost::math::students_t dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

double normal_p(double z) {
  if (!std::isfinite(z)) return kNaN;
  boost::math::normal dist;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(z))));
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw UndefinedError("welch_t: each sample needs at least two values");
  const double va = variance(a), vb = variance(b);
  if (!(va > 0.0) || !(vb > 0.0)) throw UndefinedError("welch_t: a sample has zero variance");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double qa = va / na, qb = vb / nb;
  WelchResult r;
  r.difference = mean(a) - mean(b);
  r.t = r.difference / std::sqrt(qa + qb);
  r.dof = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p = student_t_p(r.t, r.dof);
  return r;
}

// ---- regression ----

void ObservationMatrix::add_covariate(std::string name, std::vector<double> values) {
  covariate_names.push_back(std::move(name));
  covariates.push_back(std::move(values));
}

void ObservationMatrix::add_fixed_effect(std::string name, std::vector<std::string> levels) {
  fixed_effects.push_back({std::move(name), std::move(levels)});
}

void ObservationMatrix::validate() const {
  const auto n = y.size();
  if (covariate_names.size() != covariates.size()) throw SchemaError("covariate names and columns differ in count");
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    if (covariates[j].size() != n) throw SchemaError("covariate '" + covariate_names[j] + "' has the wrong length");
  }
  for (const auto& f : fixed_effects) {
    if (f.levels.size() != n) throw SchemaError("fixed effect '" + f.name + "' has the wrong length");
  }
  if (!cluster.empty() && cluster.size() != n) throw SchemaError("cluster column has the wrong length");
}

const Coefficient& RegressionFit::at(const std::string& name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no coefficient named '" + name + "'");
}

bool RegressionFit::has(const std::string& name) const {
  return std::any_of(coefficients.begin(), coefficients.end(), [&](const Coefficient& c) { return c.name == name; });
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Model { ols, logit };

struct Design {
  MatrixXd X;
  VectorXd y;
  std::vector<std::string> names;
  std::vector<bool> fixed_effect;
  std::vector<int> cluster;  // dense ids over kept rows
  int n_clusters = 0;
};

std::vector<std::size_t> complete_rows(const ObservationMatrix& d, RegressionFit& fit) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    bool ok = true;
    auto miss = [&](const std::string& col) {
      ++fit.missing_by_column[col];
      ok = false;
    };
    if (!std::isfinite(d.y[i])) miss("(outcome)");
    for (std::size_t j = 0; j < d.covariates.size(); ++j) {
      if (!std::isfinite(d.covariates[j][i])) miss(d.covariate_names[j]);
    }
    for (const auto& f : d.fixed_effects) {
      if (f.levels[i].empty()) miss(f.name);
    }
    if (!d.cluster.empty() && d.cluster[i].empty()) miss("(cluster)");
    if (ok) rows.push_back(i);
  }
  fit.rows_dropped_missing = d.rows() - rows.size();
  return rows;
}

// Removes rows in fixed-effect levels whose outcome never varies.
std::vector<std::size_t> drop_constant_levels(const ObservationMatrix& d, std::vector<std::size_t> rows,
                                              RegressionFit& fit) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& f : d.fixed_effects) {
      std::map<std::string, std::pair<double, double>> range;
      for (auto i : rows) {
        auto [it, fresh] = range.try_emplace(f.levels[i], d.y[i], d.y[i]);
        if (!fresh) {
          it->second.first = std::min(it->second.first, d.y[i]);
          it->second.second = std::max(it->second.second, d.y[i]);
        }
      }
      std::set<std::string> constant;
      for (const auto& [lvl, mm] : range) {
        if (mm.first == mm.second) constant.insert(lvl);
      }
      if (constant.empty()) continue;
      for (const auto& lvl : constant) {
        fit.warnings.push_back("dropped " + f.name + "=" + lvl + ": outcome does not vary");
      }
      std::vector<std::size_t> kept;
      for (auto i : rows) {
        if (!constant.count(f.levels[i])) kept.push_back(i);
      }
      fit.rows_dropped_constant_fe += rows.size() - kept.size();
      rows = std::move(kept);
      changed = true;
    }
  }
  return rows;
}

Design build_design(const ObservationMatrix& d, const std::vector<std::size_t>& rows, const FitOptions& opt) {
  Design des;
  const auto n = static_cast<Eigen::Index>(rows.size());
  std::vector<std::vector<double>> cols;
  if (opt.intercept) {
    des.names.push_back("(Intercept)");
    des.fixed_effect.push_back(false);
    cols.emplace_back(rows.size(), 1.0);
  }
  for (std::size_t j = 0; j < d.covariates.size(); ++j) {
    des.names.push_back(d.covariate_names[j]);
    des.fixed_effect.push_back(false);
    std::vector<double> c(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) c[r] = d.covariates[j][rows[r]];
    cols.push_back(std::move(c));
  }
  for (const auto& f : d.fixed_effects) {
    std::set<std::string> levels;
    for (auto i : rows) levels.insert(f.levels[i]);
    bool first = true;
    for (const auto& lvl : levels) {
      if (first && opt.intercept) {
        first = false;
        continue;
      }
      first = false;
      des.names.push_back(f.name + "=" + lvl);
      des.fixed_effect.push_back(true);
      std::vector<double> c(rows.size(), 0.0);
      for (std::size_t r = 0; r < rows.size(); ++r) c[r] = f.levels[rows[r]] == lvl ? 1.0 : 0.0;
      cols.push_back(std::move(c));
    }
  }
  des.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (Eigen::Index r = 0; r < n; ++r) des.X(r, static_cast<Eigen::Index>(j)) = cols[j][static_cast<std::size_t>(r)];
  }
  des.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) des.y(r) = d.y[rows[static_cast<std::size_t>(r)]];

  std::unordered_map<std::string, int> ids;
  des.cluster.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (d.cluster.empty()) {
      des.cluster[r] = static_cast<int>(r);
    } else {
      auto [it, fresh] = ids.try_emplace(d.cluster[rows[r]], static_cast<int>(ids.size()));
      des.cluster[r] = it->second;
    }
  }
  des.n_clusters = d.cluster.empty() ? static_cast<int>(rows.size()) : static_cast<int>(ids.size());
  return des;
}

// Column-order greedy independence test via an incremental Cholesky of X'X.
std::vector<Eigen::Index> independent_columns(const MatrixXd& X) {
  const MatrixXd G = X.transpose() * X;
  const Eigen::Index k = G.rows();
  std::vector<Eigen::Index> kept;
  MatrixXd L = MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double gjj = G(j, j);
    if (!(gjj > 0.0)) continue;
    const auto m = static_cast<Eigen::Index>(kept.size());
    VectorXd l(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      double s = G(kept[static_cast<std::size_t>(a)], j);
      for (Eigen::Index b = 0; b < a; ++b) s -= L(a, b) * l(b);
      l(a) = s / L(a, a);
    }
    const double dsq = gjj - l.squaredNorm();
    if (dsq <= 1e-10 * gjj) continue;
    for (Eigen::Index b = 0; b < m; ++b) L(m, b) = l(b);
    L(m, m) = std::sqrt(dsq);
    kept.push_back(j);
  }
  return kept;
}

MatrixXd select_columns(const MatrixXd& X, const std::vector<Eigen::Index>& cols) {
  MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return out;
}

// Sandwich covariance from a bread matrix and per-row score residuals.
MatrixXd covariance(const MatrixXd& X, const VectorXd& u, const MatrixXd& bread, const Design& des,
                    Covariance kind, double classical_scale) {
  const double n = static_cast<double>(X.rows());
  const double k = static_cast<double>(X.cols());
  if (kind == Covariance::classical) return classical_scale * bread;
  if (kind == Covariance::hc1) {
    const MatrixXd Xu = X.array().colwise() * u.array();
    const MatrixXd meat = Xu.transpose() * Xu;
    return (n / (n - k)) * bread * meat * bread;
  }
  MatrixXd S = MatrixXd::Zero(des.n_clusters, X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) S.row(des.cluster[static_cast<std::size_t>(r)]) += u(r) * X.row(r);
  const MatrixXd meat = S.transpose() * S;
  const double g = static_cast<double>(des.n_clusters);
  const double c = (g / (g - 1.0)) * ((n - 1.0) / (n - k));
  return c * bread * meat * bread;
}

double log_likelihood(const VectorXd& y, const VectorXd& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double e = eta(i);
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y(i) * e - log1pexp;
  }
  return ll;
}

VectorXd logistic(const VectorXd& eta) {
  VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    p(i) = e >= 0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
  }
  return p;
}

RegressionFit fit_model(const ObservationMatrix& data, const FitOptions& opt, Model model) {
  data.validate();
  RegressionFit fit;
  auto rows = complete_rows(data, fit);
  if (model == Model::logit) {
    for (auto i : rows) {
      if (data.y[i] != 0.0 && data.y[i] != 1.0) throw SchemaError("fe_logit: outcome must be 0 or 1");
    }
    bool varies = false;
    for (auto i : rows) {
      if (data.y[i] != data.y[rows.front()]) {
        varies = true;
        break;
      }
    }
    if (!varies) {
      fit.separation = true;
      fit.warnings.push_back("outcome does not vary; coefficients diverge");
    } else {
      rows = drop_constant_levels(data, std::move(rows), fit);
    }
  }
  if (rows.empty()) throw UndefinedError("no complete rows to fit");

  const Design des = build_design(data, rows, opt);
  const auto kept = independent_columns(des.X);
  std::vector<bool> is_kept(des.names.size(), false);
  for (auto j : kept) is_kept[static_cast<std::size_t>(j)] = true;
  for (std::size_t j = 0; j < des.names.size(); ++j) {
    if (!is_kept[j] && !des.fixed_effect[j]) fit.dropped_collinear.push_back(des.names[j]);
    if (!is_kept[j] && des.fixed_effect[j]) fit.warnings.push_back("collinear fixed-effect dummy dropped: " + des.names[j]);
  }
  const MatrixXd X = select_columns(des.X, kept);
  const VectorXd& y = des.y;
  const double n = static_cast<double>(X.rows());
  const double k = static_cast<double>(X.cols());
  fit.n_obs = rows.size();
  fit.n_params = kept.size();
  fit.n_clusters = static_cast<std::size_t>(des.n_clusters);
  fit.rows = rows;
  if (n <= k) throw UndefinedError("fewer observations than parameters");
  if (opt.covariance == Covariance::cluster && des.n_clusters < 2) throw UndefinedError("need at least two clusters");

  VectorXd beta;
  VectorXd u;
  MatrixXd bread;
  double classical_scale = 1.0;
  if (model == Model::ols) {
    const MatrixXd XtX = X.transpose() * X;
    Eigen::LDLT<MatrixXd> ldlt(XtX);
    beta = ldlt.solve(X.transpose() * y);
    u = y - X * beta;
    bread = ldlt.solve(MatrixXd::Identity(X.cols(), X.cols()));
    classical_scale = u.squaredNorm() / (n - k);
    fit.iterations = 1;
  } else {
    beta = VectorXd::Zero(X.cols());
    VectorXd eta = X * beta;
    double ll = log_likelihood(y, eta);
    fit.converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      const VectorXd p = logistic(eta);
      const VectorXd g = X.transpose() * (y - p);
      fit.iterations = it;
      if (g.norm() < opt.gradient_tolerance) {
        fit.converged = true;
        break;
      }
      const VectorXd w = (p.array() * (1.0 - p.array())).max(1e-300).sqrt();
      const MatrixXd Xw = X.array().colwise() * w.array();
      const MatrixXd H = Xw.transpose() * Xw;
      const VectorXd step = H.ldlt().solve(g);
      double scale = 1.0;
      VectorXd trial = beta + step;
      VectorXd trial_eta = X * trial;
      double trial_ll = log_likelihood(y, trial_eta);
      for (int h = 0; h < 30 && !(trial_ll >= ll); ++h) {
        scale *= 0.5;
        trial = beta + scale * step;
        trial_eta = X * trial;
        trial_ll = log_likelihood(y, trial_eta);
      }
      const bool stalled = std::fabs(trial_ll - ll) <= 1e-15 * std::max(1.0, std::fabs(ll)) &&
                           (scale * step).lpNorm<Eigen::Infinity>() < 1e-10;
      beta = trial;
      eta = trial_eta;
      ll = trial_ll;
      fit.iterations = it + 1;
      if (stalled) {
        fit.converged = g.norm() < 1e-6 * n;
        break;
      }
    }
    if (!fit.converged) {
      const VectorXd g = X.transpose() * (y - logistic(eta));
      fit.converged = g.norm() < opt.gradient_tolerance;
    }
    const VectorXd p = logistic(eta);
    u = y - p;
    const VectorXd w = (p.array() * (1.0 - p.array())).max(1e-300).sqrt();
    const MatrixXd Xw = X.array().colwise() * w.array();
    bread = (Xw.transpose() * Xw).ldlt().solve(MatrixXd::Identity(X.cols(), X.cols()));
    if (eta.cwiseAbs().maxCoeff() > 25.0) fit.separation = true;
    if (!fit.converged) fit.warnings.push_back("logit did not converge");
    if (fit.separation) fit.warnings.push_back("separation detected: fitted probabilities at 0 or 1");
  }

  const MatrixXd V = covariance(X, u, bread, des, opt.covariance, classical_scale);
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const auto j = static_cast<std::size_t>(kept[c]);
    if (des.fixed_effect[j] && !opt.report_fixed_effects) continue;
    Coefficient coef;
    coef.name = des.names[j];
    coef.estimate = beta(static_cast<Eigen::Index>(c));
    const double var = V(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
    coef.se = std::sqrt(std::max(0.0, var));
    const double stat = coef.estimate / coef.se;
    if (coef.se == 0.0) {
      coef.p = coef.estimate == 0.0 ? 1.0 : 0.0;
    } else if (model == Model::logit) {
      coef.p = normal_p(stat);
    } else if (opt.covariance == Covariance::cluster) {
      coef.p = student_t_p(stat, static_cast<double>(des.n_clusters) - 1.0);
    } else {
      coef.p = student_t_p(stat, n - k);
    }
    fit.coefficients.push_back(std::move(coef));
  }
  fit.residuals.assign(u.data(), u.data() + u.size());
  return fit;
}

}  // namespace

RegressionFit fe_ols(const ObservationMatrix& data, const FitOptions& options) {
  return fit_model(data, options, Model::ols);
}

RegressionFit fe_logit(const ObservationMatrix& data, const FitOptions& options) {
  return fit_model(data, options, Model::logit);
}

// ---- descriptive ----

std::vector<double> ewma(std::span<const double> x, double alpha) {
  if (x.empty()) throw std::invalid_argument("ewma: empty series");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ewma: alpha must lie in (0, 1]");
  std::vector<double> s(x.size());
  s[0] = x[0];
  for (std::size_t t = 1; t < x.size(); ++t) s[t] = alpha * x[t] + (1.0 - alpha) * s[t - 1];
  return s;
}

std::vector<AgeRate> participation_rate_by_age(std::span<const double> voter_ages,
                                               std::span<const double> participant_ages) {
  std::map<int, AgeRate> by_age;
  for (double a : voter_ages) {
    if (!std::isfinite(a)) continue;
    auto& r = by_age[static_cast<int>(std::floor(a))];
    ++r.voters;
  }
  for (double a : participant_ages) {
    if (!std::isfinite(a)) continue;
    auto& r = by_age[static_cast<int>(std::floor(a))];
    ++r.participants;
  }
  std::vector<AgeRate> out;
  out.reserve(by_age.size());
  for (auto& [age, r] : by_age) {
    r.age = age;
    if (r.voters > 0) r.rate = static_cast<double>(r.participants) / static_cast<double>(r.voters);
    out.push_back(r);
  }
  return out;
}

namespace {
double share(std::size_t num, std::size_t den) {
  return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double RepeatSummary::one_timer_share() const { return share(one_timers, individuals); }
double RepeatSummary::repeater_share() const { return share(repeaters, individuals); }
double RepeatSummary::one_timer_appearance_share() const { return share(one_timer_appearances, appearances); }
double RepeatSummary::repeater_appearance_share() const { return share(repeater_appearances, appearances); }

RepeatSummary repeat_summary(std::span<const PersonCityCount> counts) {
  std::map<std::pair<std::string, std::string>, std::size_t> units;
  for (const auto& c : counts) {
    if (c.meetings == 0) throw std::invalid_argument("repeat_summary: meeting counts must be at least 1");
    units[{c.person, c.city}] += c.meetings;
  }
  RepeatSummary s;
  std::vector<double> rep;
  for (const auto& [key, m] : units) {
    ++s.individuals;
    s.appearances += m;
    if (m == 1) {
      ++s.one_timers;
      s.one_timer_appearances += 1;
    } else {
      ++s.repeaters;
      s.repeater_appearances += m;
      rep.push_back(static_cast<double>(m));
      s.repeater_max = std::max(s.repeater_max, m);
    }
  }
  s.repeater_median = median(rep);
  s.repeater_mean = mean(rep);
  s.repeater_sd = std::sqrt(variance(rep));
  return s;
}

std::optional<StanceSummary> stance_summary(std::span<const double> scores) {
  if (scores.empty()) return std::nullopt;
  StanceSummary s;
  s.n = scores.size();
  s.mean = mean(scores);
  s.sd = std::sqrt(variance(scores));
  std::size_t pos = 0, neg = 0;
  for (double v : scores) {
    if (v < -1.0 || v > 1.0 || !std::isfinite(v)) throw std::invalid_argument("stance scores must lie in [-1, 1]");
    pos += v >= 0.7 ? 1 : 0;
    neg += v <= -0.7 ? 1 : 0;
  }
  s.share_support = static_cast<double>(pos) / static_cast<double>(s.n);
  s.share_oppose = static_cast<double>(neg) / static_cast<double>(s.n);
  return s;
}

std::map<std::string, StanceSummary> stance_aggregate(std::span<const GroupedScore> scores) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& g : scores) groups[g.group].push_back(g.score);
  std::map<std::string, StanceSummary> out;
  for (const auto& [k, v] : groups) out.emplace(k, *stance_summary(v));
  return out;
}

GaussianKde::GaussianKde(std::vector<double> values, Bandwidth rule) : values_(std::move(values)) {
  if (values_.size() < 2) throw UndefinedError("kde needs at least two values");
  const double sd = std::sqrt(variance(values_));
  if (!(sd > 0.0)) throw UndefinedError("kde of a constant sample");
  const double n = static_cast<double>(values_.size());
  if (rule == Bandwidth::scott) {
    h_ = sd * std::pow(n, -0.2);
  } else {
    const double iqr = quantile(values_, 0.75) - quantile(values_, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    h_ = 0.9 * spread * std::pow(n, -0.2);
  }
}

GaussianKde::GaussianKde(std::vector<double> values, double bandwidth) : values_(std::move(values)), h_(bandwidth) {
  if (values_.empty()) throw UndefinedError("kde of an empty sample");
  if (!(h_ > 0.0)) throw std::invalid_argument("kde bandwidth must be positive");
}

double GaussianKde::operator()(double x) const {
  static const double kNorm = 1.0 / std::sqrt(2.0 * M_PI);
  double s = 0.0;
  for (double v : values_) {
    const double z = (x - v) / h_;
    s += std::exp(-0.5 * z * z);
  }
  return kNorm * s / (static_cast<double>(values_.size()) * h_);
}

std::vector<double> GaussianKde::evaluate(std::span<const double> grid) const {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = (*this)(grid[i]);
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace council::stats
