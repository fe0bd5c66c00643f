#pragma once

// Synthetic staggered-adoption panels.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "council/did.hpp"

namespace council::testing {

inline std::string city_name(int i) {
  std::string s = std::to_string(i);
  return "c" + std::string(3 - s.size(), '0') + s;
}

/// 100 cities x 60 months. A quarter never adopt; the rest adopt at month
/// 12, 24, 36 or 48. y = city effect + month effect + tau * D + N(0, sigma).
inline did::Panel staggered_panel(std::uint64_t seed, double tau = 2.0, double sigma = 1.0, int n_cities = 100,
                                  int n_months = 60) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> month_fx(static_cast<std::size_t>(n_months));
  for (auto& m : month_fx) m = 0.5 * z(rng);
  std::vector<did::PanelRow> rows;
  const int cohorts[] = {12, 24, 36, 48};
  for (int i = 0; i < n_cities; ++i) {
    std::optional<int> g;
    if (i % 4 != 0) g = cohorts[(i / 4) % 4];
    const double alpha = z(rng);
    for (int t = 0; t < n_months; ++t) {
      const bool d = g && t >= *g;
      rows.push_back({city_name(i), t, g, alpha + month_fx[static_cast<std::size_t>(t)] + (d ? tau : 0.0) + sigma * z(rng), {}});
    }
  }
  return did::Panel(rows);
}

/// Early cohort (month 10) gains 4, late cohort (month 40) gains nothing,
/// 20 cities never adopt.
inline did::Panel heterogeneous_panel(std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<did::PanelRow> rows;
  for (int i = 0; i < 100; ++i) {
    std::optional<int> g;
    if (i < 40) g = 10;
    else if (i < 80) g = 40;
    const double alpha = z(rng);
    for (int t = 0; t < 60; ++t) {
      const double effect = (g == 10 && t >= 10) ? 4.0 : 0.0;
      rows.push_back({city_name(i), t, g, alpha + 0.02 * t + effect + sigma * z(rng), {}});
    }
  }
  return did::Panel(rows);
}

}  // namespace council::testing
