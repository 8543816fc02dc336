#include "mobility/distribution_fit.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace mobility {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::Lognormal: return "lognormal";
    case Family::TruncatedPowerLaw: return "truncated_power_law";
  }
  return "?";
}

Family family_of(const FitParams& p) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ExponentialParams>) return Family::Exponential;
        else if constexpr (std::is_same_v<T, LognormalParams>) return Family::Lognormal;
        else return Family::TruncatedPowerLaw;
      },
      p);
}

double x_min_of(const FitParams& p) {
  return std::visit([](const auto& v) { return v.x_min; }, p);
}

double log_upper_incomplete_gamma(double a, double z) {
  if (!(z > 0.0)) {
    if (z == 0.0 && a > 0.0) return std::lgamma(a);
    return kInf;
  }
  // t = z e^u:  Gamma(a, z) = z^a e^-z * int_0^inf exp(a u - z (e^u - 1)) du
  auto exponent = [=](double u) { return a * u - z * std::expm1(u); };
  double upper = std::log1p(100.0 / z);
  while (exponent(upper) > -80.0) upper += 1.0;
  // The integrand peaks at u* = ln(a / z) when a > z; scale by the peak to avoid overflow.
  const double peak_u = (a > z) ? std::log(a / z) : 0.0;
  const double peak = exponent(std::min(peak_u, upper));
  auto integrand = [&](double u) { return std::exp(exponent(u) - peak); };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double integral = 0.0;
  if (peak_u > 0.0 && peak_u < upper)
    integral = Quad::integrate(integrand, 0.0, peak_u, 15, 1e-13) +
               Quad::integrate(integrand, peak_u, upper, 15, 1e-13);
  else
    integral = Quad::integrate(integrand, 0.0, upper, 15, 1e-13);
  return a * std::log(z) - z + peak + std::log(integral);
}

namespace {

double lognormal_log_tail(double mu, double sigma, double x_min) {
  if (x_min <= 0.0) return 0.0;
  const double zscore = (std::log(x_min) - mu) / (sigma * std::sqrt(2.0));
  const double tail = 0.5 * std::erfc(zscore);
  return tail > 0.0 ? std::log(tail) : -kInf;
}

double tpl_log_norm(double alpha, double lambda, double x_min) {
  return (1.0 - alpha) * std::log(lambda) - log_upper_incomplete_gamma(1.0 - alpha, lambda * x_min);
}

double log_pdf_unchecked(const FitParams& params, double x) {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ExponentialParams>) {
          return std::log(p.lambda) - p.lambda * (x - p.x_min);
        } else if constexpr (std::is_same_v<T, LognormalParams>) {
          const double lx = std::log(x);
          const double d = (lx - p.mu) / p.sigma;
          return -lx - std::log(p.sigma) - kLogSqrt2Pi - 0.5 * d * d -
                 lognormal_log_tail(p.mu, p.sigma, p.x_min);
        } else {
          return tpl_log_norm(p.alpha, p.lambda, p.x_min) - p.alpha * std::log(x) - p.lambda * x;
        }
      },
      params);
}

}  // namespace

double log_pdf(const FitParams& params, double x) {
  if (x < x_min_of(params)) throw InputError("density evaluated below x_min");
  return log_pdf_unchecked(params, x);
}

double pdf(const FitParams& params, double x) { return std::exp(log_pdf(params, x)); }

double log_likelihood(const FitParams& params, const Eigen::ArrayXd& values) {
  // Parameter-only terms are hoisted so each family costs O(n) elementary ops.
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        const double n = static_cast<double>(values.size());
        if constexpr (std::is_same_v<T, ExponentialParams>) {
          return n * std::log(p.lambda) - p.lambda * (values - p.x_min).sum();
        } else if constexpr (std::is_same_v<T, LognormalParams>) {
          const Eigen::ArrayXd lx = values.log();
          return -lx.sum() - n * (std::log(p.sigma) + kLogSqrt2Pi) -
                 ((lx - p.mu) / p.sigma).square().sum() / 2.0 -
                 n * lognormal_log_tail(p.mu, p.sigma, p.x_min);
        } else {
          return n * tpl_log_norm(p.alpha, p.lambda, p.x_min) - p.alpha * values.log().sum() -
                 p.lambda * values.sum();
        }
      },
      params);
}

FilteredSample filter_sample(std::span<const double> sample, XminPolicy x_min) {
  FilteredSample out;
  if (x_min) {
    out.x_min = *x_min;
  } else {
    out.x_min = kInf;
    for (double v : sample)
      if (v > 0.0) out.x_min = std::min(out.x_min, v);
    if (out.x_min == kInf) out.x_min = 0.0;
  }
  std::vector<double> kept;
  kept.reserve(sample.size());
  for (double v : sample) {
    if (v > 0.0 && v >= out.x_min && std::isfinite(v))
      kept.push_back(v);
    else
      ++out.excluded;
  }
  out.values = Eigen::Map<const Eigen::ArrayXd>(kept.data(), Eigen::Index(kept.size()));
  return out;
}

SimplexResult minimize_simplex(const std::function<double(const Eigen::Vector2d&)>& f,
                               const Eigen::Vector2d& start, const Eigen::Vector2d& step,
                               double tolerance, int max_iterations) {
  std::array<Eigen::Vector2d, 3> pts;
  std::array<double, 3> vals{};
  auto init = [&](const Eigen::Vector2d& origin) {
    pts[0] = origin;
    pts[1] = origin + Eigen::Vector2d(step.x(), 0.0);
    pts[2] = origin + Eigen::Vector2d(0.0, step.y());
    for (int i = 0; i < 3; ++i) vals[i] = f(pts[i]);
  };
  init(start);

  SimplexResult res;
  int restarts = 0;
  double last_converged = kInf;
  while (res.iterations < max_iterations) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0], mid = order[1], worst = order[2];

    if (std::isfinite(vals[worst]) && vals[worst] - vals[best] < tolerance) {
      // Restart once from the best vertex so a collapsed simplex cannot stall early.
      if (restarts > 0 && last_converged - vals[best] < tolerance) {
        res.converged = true;
        break;
      }
      last_converged = vals[best];
      ++restarts;
      init(pts[best]);
      continue;
    }
    ++res.iterations;

    const Eigen::Vector2d centroid = (pts[best] + pts[mid]) / 2.0;
    const Eigen::Vector2d reflected = centroid + (centroid - pts[worst]);
    const double f_reflected = f(reflected);
    if (f_reflected < vals[best]) {
      const Eigen::Vector2d expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expanded = f(expanded);
      if (f_expanded < f_reflected) {
        pts[worst] = expanded;
        vals[worst] = f_expanded;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < vals[mid]) {
      pts[worst] = reflected;
      vals[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < vals[worst];
    const Eigen::Vector2d contracted =
        outside ? Eigen::Vector2d(centroid + 0.5 * (reflected - centroid))
                : Eigen::Vector2d(centroid + 0.5 * (pts[worst] - centroid));
    const double f_contracted = f(contracted);
    if (f_contracted < std::min(f_reflected, vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_contracted;
      continue;
    }
    for (int i : {mid, worst}) {
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

namespace {

FitResult fit_exponential(const FilteredSample& s) {
  const double excess = (s.values - s.x_min).mean();
  if (!(excess > 0.0)) throw ComputationError("degenerate sample: all values equal x_min");
  FitResult r;
  r.family = Family::Exponential;
  r.params = ExponentialParams{1.0 / excess, s.x_min};
  r.converged = true;
  return r;
}

FitResult fit_lognormal(const FilteredSample& s, const FitOptions& opts) {
  const double n = static_cast<double>(s.values.size());
  const Eigen::ArrayXd lx = s.values.log();
  const double s1 = lx.sum() / n;
  const double s2 = lx.square().sum() / n;
  const double var = std::max(0.0, s2 - s1 * s1);
  if (!(var > 1e-14 * std::max(1.0, s1 * s1)))
    throw ComputationError("degenerate sample: zero variance of logarithms");

  // Mean negative log-likelihood over theta = (mu, ln sigma) via sufficient statistics.
  auto objective = [&](const Eigen::Vector2d& th) {
    const double mu = th(0), sigma = std::exp(th(1));
    if (!std::isfinite(sigma) || sigma <= 0.0) return kInf;
    const double tail = lognormal_log_tail(mu, sigma, s.x_min);
    if (!std::isfinite(tail)) return kInf;
    const double quad = (s2 - 2.0 * mu * s1 + mu * mu) / (2.0 * sigma * sigma);
    return s1 + std::log(sigma) + kLogSqrt2Pi + quad + tail;
  };
  const Eigen::Vector2d start(s1, 0.5 * std::log(var));
  const auto opt = minimize_simplex(objective, start, Eigen::Vector2d(0.1, 0.1), opts.tolerance,
                                    opts.max_iterations);
  FitResult r;
  r.family = Family::Lognormal;
  r.params = LognormalParams{opt.x(0), std::exp(opt.x(1)), s.x_min};
  r.converged = opt.converged;
  r.iterations = opt.iterations;
  return r;
}

FitResult fit_trunc_power_law(const FilteredSample& s, const FitOptions& opts) {
  if (!(s.x_min > 0.0)) throw ComputationError("truncated power law requires x_min > 0");
  const double n = static_cast<double>(s.values.size());
  const double mean_log = s.values.log().sum() / n;
  const double mean = s.values.sum() / n;
  if (!(mean > s.x_min)) throw ComputationError("degenerate sample: all values equal x_min");

  auto in_bracket = [&](double alpha, double lambda) {
    return alpha > opts.alpha_lo && alpha <= opts.alpha_hi && lambda > opts.lambda_lo &&
           lambda <= opts.lambda_hi;
  };
  // theta = (alpha, ln lambda)
  auto objective = [&](const Eigen::Vector2d& th) {
    const double alpha = th(0), lambda = std::exp(th(1));
    if (!in_bracket(alpha, lambda)) return kInf;
    const double v = -(tpl_log_norm(alpha, lambda, s.x_min) - alpha * mean_log - lambda * mean);
    return std::isfinite(v) ? v : kInf;
  };

  const double lambda0 =
      std::clamp(1.0 / (mean - s.x_min), opts.lambda_lo * 10.0, opts.lambda_hi / 2.0);
  SimplexResult best;
  best.value = kInf;
  int iterations = 0;
  for (double alpha0 : {0.5, 1.5, 2.5}) {
    auto opt = minimize_simplex(objective, Eigen::Vector2d(alpha0, std::log(lambda0)),
                                Eigen::Vector2d(0.25, 0.5), opts.tolerance, opts.max_iterations);
    iterations += opt.iterations;
    if (opt.value < best.value || (!std::isfinite(best.value) && opt.converged)) best = opt;
  }
  const double alpha = best.x(0), lambda = std::exp(best.x(1));
  const bool at_edge = alpha < opts.alpha_lo + 1e-4 || alpha > opts.alpha_hi - 1e-4 ||
                       lambda < opts.lambda_lo * (1.0 + 1e-3) || lambda > opts.lambda_hi * (1.0 - 1e-4);

  FitResult r;
  r.family = Family::TruncatedPowerLaw;
  r.params = TruncPowerLawParams{alpha, lambda, s.x_min};
  r.converged = best.converged && std::isfinite(best.value) && !at_edge;
  r.iterations = iterations;
  return r;
}

}  // namespace

FitResult fit_mle(std::span<const double> sample, Family family, XminPolicy x_min,
                  const FitOptions& opts) {
  const auto s = filter_sample(sample, x_min);
  if (static_cast<std::size_t>(s.values.size()) < opts.min_sample)
    throw ComputationError("degenerate sample: fewer than " + std::to_string(opts.min_sample) +
                           " positive values >= x_min");
  FitResult r;
  switch (family) {
    case Family::Exponential: r = fit_exponential(s); break;
    case Family::Lognormal: r = fit_lognormal(s, opts); break;
    case Family::TruncatedPowerLaw: r = fit_trunc_power_law(s, opts); break;
  }
  r.n = static_cast<std::size_t>(s.values.size());
  r.excluded = s.excluded;
  r.x_min = s.x_min;
  r.log_likelihood = log_likelihood(r.params, s.values);
  if (!std::isfinite(r.log_likelihood)) r.converged = false;
  return r;
}

FitComparison compare_fits(std::span<const double> sample, const FitResult& a, const FitResult& b) {
  if (a.x_min != b.x_min) throw InputError("compare_fits: fits use different x_min");
  if (!a.converged || !b.converged) throw ComputationError("compare_fits: both fits must converge");
  const auto s = filter_sample(sample, a.x_min);
  FitComparison c;
  c.family_a = a.family;
  c.family_b = b.family;
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    c.R += log_pdf_unchecked(a.params, s.values(i)) - log_pdf_unchecked(b.params, s.values(i));
  if (c.R > 0.0) c.favored = a.family;
  if (c.R < 0.0) c.favored = b.family;
  return c;
}

FitTableRow fit_row(const LabeledSample& sample, XminPolicy x_min, const FitOptions& opts) {
  FitTableRow row;
  row.key = sample.key;
  row.lognormal = fit_mle(sample.values, Family::Lognormal, x_min, opts);
  row.exponential = fit_mle(sample.values, Family::Exponential, x_min, opts);
  row.trunc_power_law = fit_mle(sample.values, Family::TruncatedPowerLaw, x_min, opts);
  if (row.lognormal.converged && row.trunc_power_law.converged)
    row.r_vs_tpl = compare_fits(sample.values, row.lognormal, row.trunc_power_law).R;
  if (row.lognormal.converged && row.exponential.converged)
    row.r_vs_exp = compare_fits(sample.values, row.lognormal, row.exponential).R;
  return row;
}

std::vector<FitTableRow> fit_table(const std::vector<LabeledSample>& samples, XminPolicy x_min,
                                   const FitOptions& opts) {
  std::vector<FitTableRow> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(fit_row(s, x_min, opts));
  return rows;
}

}  // namespace mobility
