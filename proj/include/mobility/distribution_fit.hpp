#pragma once

#include "mobility/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mobility {

enum class Family { Exponential, Lognormal, TruncatedPowerLaw };

const char* to_string(Family f);

/// lambda * exp(-lambda (x - x_min)), x >= x_min.
struct ExponentialParams {
  double lambda = 1.0;
  double x_min = 0.0;
};

/// Lognormal density renormalized on [x_min, inf).
struct LognormalParams {
  double mu = 0.0;
  double sigma = 1.0;
  double x_min = 0.0;
};

/// lambda^(1-alpha) / Gamma(1-alpha, lambda x_min) * x^-alpha * exp(-lambda x), x >= x_min.
struct TruncPowerLawParams {
  double alpha = 1.5;
  double lambda = 0.1;
  double x_min = 1.0;
};

using FitParams = std::variant<ExponentialParams, LognormalParams, TruncPowerLawParams>;

Family family_of(const FitParams& p);
double x_min_of(const FitParams& p);

/// ln Gamma(a, z), the upper incomplete gamma function, for z > 0 and any real a.
double log_upper_incomplete_gamma(double a, double z);

double log_pdf(const FitParams& params, double x);
/// Throws InputError when x < x_min.
double pdf(const FitParams& params, double x);

/// nullopt selects the smallest positive sample value.
using XminPolicy = std::optional<double>;

struct FilteredSample {
  Eigen::ArrayXd values;
  double x_min = 0.0;
  std::size_t excluded = 0;  // zeros, negatives and values below x_min
};

FilteredSample filter_sample(std::span<const double> sample, XminPolicy x_min = std::nullopt);

struct FitOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  double alpha_lo = 0.0;  // open
  double alpha_hi = 4.0;  // closed
  double lambda_lo = 1e-8;
  double lambda_hi = 10.0;
  std::size_t min_sample = 10;
};

struct FitResult {
  Family family = Family::Lognormal;
  FitParams params;
  double log_likelihood = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;
  double x_min = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Maximum-likelihood fit of `family` on sample values >= x_min.
/// Throws ComputationError for samples too small or degenerate.
FitResult fit_mle(std::span<const double> sample, Family family, XminPolicy x_min = std::nullopt,
                  const FitOptions& opts = {});

double log_likelihood(const FitParams& params, const Eigen::ArrayXd& values);

struct FitComparison {
  Family family_a = Family::Lognormal;
  Family family_b = Family::Exponential;
  double R = 0.0;
  /// nullopt when R == 0.
  std::optional<Family> favored;
};

/// R = sum_i [ln p_A(x_i) - ln p_B(x_i)] over the sample filtered at the shared x_min.
FitComparison compare_fits(std::span<const double> sample, const FitResult& a, const FitResult& b);

struct FitTableRow {
  std::string key;  // "2", "3", ..., "total"
  FitResult lognormal;
  FitResult exponential;
  FitResult trunc_power_law;
  std::optional<double> r_vs_tpl;  // absent when either fit did not converge
  std::optional<double> r_vs_exp;
};

struct LabeledSample {
  std::string key;
  std::vector<double> values;
};

/// Fits all three families per sample and compares the lognormal against the others.
std::vector<FitTableRow> fit_table(const std::vector<LabeledSample>& samples,
                                   XminPolicy x_min = std::nullopt, const FitOptions& opts = {});
FitTableRow fit_row(const LabeledSample& sample, XminPolicy x_min = std::nullopt,
                    const FitOptions& opts = {});

struct SimplexResult {
  Eigen::Vector2d x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free 2-D minimization (Nelder-Mead). Converges when the spread
/// of objective values over the simplex drops below `tolerance`.
SimplexResult minimize_simplex(const std::function<double(const Eigen::Vector2d&)>& f,
                               const Eigen::Vector2d& start, const Eigen::Vector2d& step,
                               double tolerance, int max_iterations);

}  // namespace mobility
