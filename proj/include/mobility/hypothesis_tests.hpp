#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace mobility {

struct TestResult {
  double statistic = 0.0;  // D for KS, U (of the first sample) for Mann-Whitney
  double p_value = 1.0;    // two-sided, asymptotic
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool tie_corrected = false;
  bool degenerate = false;  // every pooled value identical

  [[nodiscard]] bool significant(double level = 0.01) const { return p_value < level; }
};

/// Kolmogorov survival function Q(t) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 t^2).
double kolmogorov_q(double t);

/// Two-sample Kolmogorov-Smirnov test with the Stephens-corrected asymptotic p-value.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Mann-Whitney U with midranks, tie-corrected variance and continuity correction.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

}  // namespace mobility
