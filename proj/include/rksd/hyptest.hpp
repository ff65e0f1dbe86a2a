#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "rksd/bootstrap.hpp"
#include "rksd/common.hpp"
#include "rksd/stein.hpp"

namespace rksd {

enum class TestKind { Standard, RobustBootstrap, RobustDev };

struct TestOutcome {
  double statistic = 0.0;  // D^2 for Standard, Delta_theta otherwise
  double threshold = 0.0;
  bool reject = false;
  bool threshold_defined = true;  // false only on the U-statistic never-reject branch
  double theta = 0.0;
  double alpha = 0.0;
  int B = 0;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::V;
  TestKind test_kind = TestKind::Standard;
};

// Delta_theta = max(0, D - theta); the robust test statistic.
inline double delta_stat(double ksd, double theta) {
  if (!(ksd >= 0.0) || !(theta >= 0.0)) throw DomainError("delta_stat needs D, theta >= 0");
  return std::max(0.0, ksd - theta);
}

// Standard KSD test: reject H0 if D^2 > q^2_{B,1-alpha}.
inline TestOutcome standard_ksd_test_gram(const SteinGram& gram, double alpha,
                                          const BootstrapConfig& boot) {
  const double d2 = ksd_v_stat(gram);
  const QuantileEstimate q = boot_quantile(gram, d2, boot, alpha);
  TestOutcome out;
  out.statistic = d2;
  out.threshold = q.q_squared;
  out.reject = d2 > q.q_squared;
  out.theta = 0.0;
  out.alpha = alpha;
  out.B = boot.B;
  out.seed = boot.seed;
  out.test_kind = TestKind::Standard;
  return out;
}

// Robust KSD test: reject the composite null if Delta_theta exceeds the
// NON-squared bootstrap quantile. At theta = 0 the decision coincides with the
// standard test (the square root is monotone on both sides).
inline TestOutcome robust_ksd_test_gram(const SteinGram& gram, double theta, double alpha,
                                        const BootstrapConfig& boot) {
  const double d = std::sqrt(ksd_v_stat(gram));
  const QuantileEstimate q = boot_quantile(gram, d * d, boot, alpha);
  TestOutcome out;
  out.statistic = delta_stat(d, theta);
  out.threshold = q.q;
  out.reject = out.statistic > out.threshold;
  out.theta = theta;
  out.alpha = alpha;
  out.B = boot.B;
  out.seed = boot.seed;
  out.test_kind = TestKind::RobustBootstrap;
  return out;
}

// Finite-sample robust test with the closed-form McDiarmid threshold
// gamma_n = sqrt(tau/n) + sqrt(-2 tau log(alpha) / n). No bootstrap, no RNG.
inline double dev_threshold(double tau, Eigen::Index n, double alpha) {
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const double nn = static_cast<double>(n);
  return std::sqrt(tau / nn) + std::sqrt(-2.0 * tau * std::log(alpha) / nn);
}

inline TestOutcome robust_ksd_dev_test_gram(const SteinGram& gram, double theta, double alpha,
                                            double tau_value) {
  const double d = std::sqrt(ksd_v_stat(gram));
  TestOutcome out;
  out.statistic = delta_stat(d, theta);
  out.threshold = dev_threshold(tau_value, gram.size(), alpha);
  out.reject = out.statistic > out.threshold;
  out.theta = theta;
  out.alpha = alpha;
  out.test_kind = TestKind::RobustDev;
  return out;
}

// U-statistic backend (experimental): off-diagonal sums everywhere. A negative
// bootstrap quantile triggers the never-reject rule.
inline TestOutcome robust_ksd_test_ustat_gram(const SteinGram& gram, double theta, double alpha,
                                              const BootstrapConfig& boot) {
  if (gram.size() < 2) throw TooFewPoints("U-statistic test needs n >= 2");
  const double d2u = ksd_u_stat(gram);
  const QuantileEstimate q = boot_quantile(gram, d2u, boot, alpha, Estimator::U);
  TestOutcome out;
  out.theta = theta;
  out.alpha = alpha;
  out.B = boot.B;
  out.seed = boot.seed;
  out.estimator = Estimator::U;
  out.test_kind = TestKind::RobustBootstrap;
  out.statistic = delta_stat(std::sqrt(std::max(0.0, d2u)), theta);
  if (q.q_squared < 0.0) {
    out.threshold = 0.0;
    out.threshold_defined = false;
    out.reject = false;
    return out;
  }
  out.threshold = q.q;
  out.reject = out.statistic > out.threshold;
  return out;
}

inline TestOutcome standard_ksd_test(const DataSet& data, const ScoreModel& model,
                                     const TiltedKernel& kernel, double alpha,
                                     const BootstrapConfig& boot) {
  if (data.rows() < 2) throw TooFewPoints("test needs n >= 2");
  return standard_ksd_test_gram(stein_gram(model, kernel, data), alpha, boot);
}

inline TestOutcome robust_ksd_test(const DataSet& data, const ScoreModel& model,
                                   const TiltedKernel& kernel, double theta, double alpha,
                                   const BootstrapConfig& boot) {
  if (data.rows() < 2) throw TooFewPoints("test needs n >= 2");
  return robust_ksd_test_gram(stein_gram(model, kernel, data), theta, alpha, boot);
}

inline TestOutcome robust_ksd_dev_test(const DataSet& data, const ScoreModel& model,
                                       const TiltedKernel& kernel, double theta, double alpha,
                                       const TauEstimate& tau) {
  if (data.rows() < 1) throw EmptyData("test needs n >= 1");
  return robust_ksd_dev_test_gram(stein_gram(model, kernel, data), theta, alpha, tau.value);
}

inline TestOutcome robust_ksd_test_ustat(const DataSet& data, const ScoreModel& model,
                                         const TiltedKernel& kernel, double theta, double alpha,
                                         const BootstrapConfig& boot) {
  if (data.rows() < 2) throw TooFewPoints("test needs n >= 2");
  return robust_ksd_test_ustat_gram(stein_gram(model, kernel, data), theta, alpha, boot);
}

}  // namespace rksd
