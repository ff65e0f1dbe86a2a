#pragma once

#include <cmath>
#include <vector>

#include "rksd/common.hpp"
#include "rksd/models.hpp"
#include "rksd/stein.hpp"

namespace rksd {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a, b), regularized incomplete beta function.
inline double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Student-t CDF with nu degrees of freedom.
inline double student_t_cdf(double t, double nu) {
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace detail

// CDF of the variance-one scaled t distribution t_nu * sqrt((nu-2)/nu).
inline double scaled_t_cdf(double x, double nu) {
  if (!(nu > 2.0)) throw DomainError("scaled t requires nu > 2");
  return detail::student_t_cdf(x * std::sqrt(nu / (nu - 2.0)), nu);
}

// Density q_nu(x) = Z_nu (1 + x^2/(nu-2))^(-(nu+1)/2).
inline double scaled_t_pdf(double x, double nu) {
  if (!(nu > 2.0)) throw DomainError("scaled t requires nu > 2");
  const double log_z = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * std::log(M_PI * (nu - 2.0));
  return std::exp(log_z - 0.5 * (nu + 1.0) * std::log1p(x * x / (nu - 2.0)));
}

// The two positive crossings of the scaled-t density with the standard normal
// density, plus the residuals of the bisection solve.
struct TIntersections {
  double a1 = 0.0, a2 = 0.0;
  double nu = 0.0;
  double residual1 = 0.0, residual2 = 0.0;
};

inline TIntersections find_intersections(double nu) {
  if (!(nu > 2.0)) throw DomainError("find_intersections requires nu > 2");
  if (nu > 1e6)
    throw DomainError("find_intersections: densities indistinguishable beyond nu = 1e6");
  auto g = [nu](double x) { return scaled_t_pdf(x, nu) - normal_pdf(x); };

  // Log-spaced scan of (1e-6, 60): all crossings lie well inside since the
  // normal density underflows past |x| ~ 38.
  constexpr int kScanPoints = 10000;
  const double lo = 1e-6, hi = 60.0;
  const double ratio = std::log(hi / lo) / (kScanPoints - 1);
  std::vector<std::pair<double, double>> brackets;
  double xprev = lo, gprev = g(lo);
  for (int i = 1; i < kScanPoints; ++i) {
    const double x = lo * std::exp(ratio * i);
    const double gx = g(x);
    if ((gprev > 0.0) != (gx > 0.0)) brackets.emplace_back(xprev, x);
    xprev = x;
    gprev = gx;
  }
  if (brackets.size() != 2)
    throw RootCountError("expected 2 density crossings, found " +
                         std::to_string(brackets.size()));

  auto bisect = [&](double a, double b) {
    double ga = g(a);
    while (b - a > 1e-12) {
      const double m = 0.5 * (a + b);
      const double gm = g(m);
      if (std::abs(gm) <= 1e-12 && b - a <= 1e-12) break;
      if ((ga > 0.0) == (gm > 0.0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };
  TIntersections out;
  out.nu = nu;
  out.a1 = bisect(brackets[0].first, brackets[0].second);
  out.a2 = bisect(brackets[1].first, brackets[1].second);
  out.residual1 = std::abs(g(out.a1));
  out.residual2 = std::abs(g(out.a2));
  return out;
}

// delta_0(nu) = L1 distance between the scaled-t and standard normal
// densities, expressed through the two crossings.
inline double scaled_t_band_delta0(double nu) {
  const TIntersections ab = find_intersections(nu);
  return 4.0 * (scaled_t_cdf(ab.a1, nu) - normal_cdf(ab.a1) + normal_cdf(ab.a2) -
                scaled_t_cdf(ab.a2, nu));
}

struct RadiusSpec {
  enum class Kind { Explicit, Huber, DensityBand, ScaledTTail };

  static RadiusSpec explicit_theta(double theta) {
    if (!(theta >= 0.0)) throw DomainError("theta must be nonnegative");
    return {Kind::Explicit, theta};
  }
  static RadiusSpec huber(double eps0) {
    if (!(eps0 >= 0.0 && eps0 <= 1.0)) throw DomainError("eps0 must lie in [0,1]");
    return {Kind::Huber, eps0};
  }
  static RadiusSpec density_band(double delta0) {
    if (!(delta0 >= 0.0)) throw DomainError("delta0 must be nonnegative");
    return {Kind::DensityBand, delta0};
  }
  static RadiusSpec scaled_t_tail(double nu0) {
    if (!(nu0 > 2.0)) throw DomainError("nu0 must exceed 2");
    return {Kind::ScaledTTail, nu0};
  }

  Kind kind;
  double value;  // theta, eps0, delta0 or nu0 depending on kind
};

// Uncertainty radius theta for a KSD ball, given the tau_inf estimate.
// ScaledTTail is only meaningful for the exact setting it was derived in
// (standard normal model in one dimension) and refuses anything else.
inline double resolve_theta(const RadiusSpec& spec, double tau_value,
                            const ScoreModel* model = nullptr) {
  if (!(tau_value >= 0.0)) throw DomainError("tau estimate must be nonnegative");
  const double root_tau = std::sqrt(tau_value);
  switch (spec.kind) {
    case RadiusSpec::Kind::Explicit:
      return spec.value;
    case RadiusSpec::Kind::Huber:
      return spec.value * root_tau;
    case RadiusSpec::Kind::DensityBand:
      return spec.value * root_tau;
    case RadiusSpec::Kind::ScaledTTail: {
      const bool std_normal_1d =
          model != nullptr && model->kind() == ScoreModel::Kind::Gaussian && model->dim() == 1 &&
          model->mean()(0) == 0.0 && model->variances()(0) == 1.0;
      if (!std_normal_1d)
        throw ModelMismatch("scaled-t radius requires the standard normal model in d = 1");
      return scaled_t_band_delta0(spec.value) * root_tau;
    }
  }
  throw RksdError("unreachable");
}

inline double resolve_theta(const RadiusSpec& spec, const TauEstimate& tau,
                            const ScoreModel* model = nullptr) {
  return resolve_theta(spec, tau.value, model);
}

}  // namespace rksd
