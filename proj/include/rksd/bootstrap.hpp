#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rksd/common.hpp"
#include "rksd/rng.hpp"
#include "rksd/stein.hpp"

namespace rksd {

enum class BootScheme { Weighted, Wild };
enum class Estimator { V, U };

struct BootstrapConfig {
  BootScheme scheme = BootScheme::Weighted;
  int B = 500;
  std::uint64_t seed = 0;
};

struct QuantileEstimate {
  double q_squared = 0.0;
  double q = 0.0;  // sqrt(max(0, q_squared))
  int samples_used = 0;
};

// Multinomial(n; 1/n,...,1/n) counts via n independent category draws.
inline Eigen::VectorXi draw_multinomial(Eigen::Index n, Rng& rng) {
  Eigen::VectorXi w = Eigen::VectorXi::Zero(n);
  std::uniform_int_distribution<Eigen::Index> cat(0, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) w(cat(rng)) += 1;
  return w;
}

inline Vector draw_rademacher(Eigen::Index n, Rng& rng) {
  Vector s(n);
  std::uniform_int_distribution<int> bit(0, 1);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = bit(rng) ? 1.0 : -1.0;
  return s;
}

namespace detail {

inline double boot_quadratic_form(const SteinGram& gram, const Vector& v, Estimator est) {
  const double n = static_cast<double>(gram.size());
  const double full = v.dot(gram.values * v);
  if (est == Estimator::V) return full / (n * n);
  const double diag = gram.values.diagonal().dot(v.array().square().matrix());
  return (full - diag) / (n * (n - 1.0));
}

}  // namespace detail

// D^2_W = n^-2 sum_ij (W_i - 1)(W_j - 1) u_ij for a multinomial weight vector.
inline double boot_stat_weighted(const SteinGram& gram, const Eigen::VectorXi& weights) {
  if (weights.size() != gram.size() || weights.sum() != static_cast<int>(gram.size()) ||
      (weights.array() < 0).any())
    throw BadWeights("bootstrap weights must be nonnegative and sum to n");
  const Vector v = weights.cast<double>().array() - 1.0;
  return detail::boot_quadratic_form(gram, v, Estimator::V);
}

// Wild bootstrap: Rademacher signs stand in for the centered weights.
inline double boot_stat_wild(const SteinGram& gram, const Vector& signs) {
  if (signs.size() != gram.size()) throw BadWeights("sign vector length mismatch");
  return detail::boot_quadratic_form(gram, signs, Estimator::V);
}

// All B replicate statistics; replicate b draws from stream (seed, b), so the
// result is independent of evaluation order.
inline std::vector<double> boot_samples(const SteinGram& gram, const BootstrapConfig& config,
                                        Estimator est = Estimator::V) {
  const Eigen::Index n = gram.size();
  Matrix V(n, config.B);
  for (int b = 0; b < config.B; ++b) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(b));
    if (config.scheme == BootScheme::Weighted)
      V.col(b) = draw_multinomial(n, rng).cast<double>().array() - 1.0;
    else
      V.col(b) = draw_rademacher(n, rng);
  }
  const Matrix M = gram.values * V;  // one GEMM instead of B mat-vecs
  const double nn = static_cast<double>(n);
  std::vector<double> out(static_cast<std::size_t>(config.B));
  for (int b = 0; b < config.B; ++b) {
    const double full = V.col(b).dot(M.col(b));
    if (est == Estimator::V) {
      out[static_cast<std::size_t>(b)] = full / (nn * nn);
    } else {
      const double diag = gram.values.diagonal().dot(V.col(b).array().square().matrix());
      out[static_cast<std::size_t>(b)] = (full - diag) / (nn * (nn - 1.0));
    }
  }
  return out;
}

// Monte-Carlo (1-alpha)-quantile of the bootstrap distribution: the smallest
// element u of the multiset {observed} + {replicates} whose (B+1)-normalized
// rank reaches 1-alpha. The infimum is attained at a sample point, so the
// exact order statistic is returned, never an interpolation.
inline QuantileEstimate boot_quantile(const SteinGram& gram, double observed_stat,
                                      const BootstrapConfig& config, double alpha,
                                      Estimator est = Estimator::V) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (config.B < 1) throw DomainError("bootstrap needs B >= 1");
  std::vector<double> vals = boot_samples(gram, config, est);
  vals.push_back(observed_stat);
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size();  // B + 1
  auto rank = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(m) - 1e-12));
  rank = std::min(std::max<std::size_t>(rank, 1), m);
  QuantileEstimate q;
  q.q_squared = vals[rank - 1];
  q.q = std::sqrt(std::max(0.0, q.q_squared));
  q.samples_used = config.B;
  return q;
}

}  // namespace rksd
