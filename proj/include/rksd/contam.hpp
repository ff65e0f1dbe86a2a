#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "rksd/common.hpp"
#include "rksd/dataset.hpp"
#include "rksd/models.hpp"
#include "rksd/rng.hpp"

namespace rksd {

// Contamination distribution R.
struct ContaminationSpec {
  enum class Kind { None, DiracOutlier, GaussianNoise, ScaledT };

  static ContaminationSpec none() { return {Kind::None, {}, {}, 0.0, 0.0}; }
  static ContaminationSpec dirac(Vector z) {
    return {Kind::DiracOutlier, std::move(z), {}, 0.0, 0.0};
  }
  static ContaminationSpec gaussian_noise(Vector mean, double var) {
    if (!(var > 0.0)) throw DomainError("contamination variance must be positive");
    return {Kind::GaussianNoise, {}, std::move(mean), var, 0.0};
  }
  static ContaminationSpec scaled_t(double nu) {
    if (!(nu > 2.0)) throw DomainError("scaled t contamination requires nu > 2");
    return {Kind::ScaledT, {}, {}, 0.0, nu};
  }

  Vector draw(Rng& rng) const {
    switch (kind) {
      case Kind::DiracOutlier:
        return z;
      case Kind::GaussianNoise: {
        std::normal_distribution<double> normal(0.0, std::sqrt(var));
        Vector x(mean.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = mean(j) + normal(rng);
        return x;
      }
      case Kind::ScaledT: {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::chi_squared_distribution<double> chi2(nu);
        Vector x(1);
        x(0) = normal(rng) / std::sqrt(chi2(rng) / nu) * std::sqrt((nu - 2.0) / nu);
        return x;
      }
      case Kind::None:
        break;
    }
    throw Unsupported("cannot draw from contamination 'none'");
  }

  Kind kind;
  Vector z;
  Vector mean;
  double var;
  double nu;
};

// Data-generating alternative Q for the experiments.
struct AlternativeSpec {
  enum class Kind { Huber, ScaledTData, MeanShift, MixtureRatioPerturb };

  // Q = (1 - eps) P + eps R via i.i.d. Bernoulli(eps) mixing
  static AlternativeSpec huber(ScoreModel base, ContaminationSpec contamination, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("eps must lie in [0,1]");
    AlternativeSpec a;
    a.kind = Kind::Huber;
    a.base = std::move(base);
    a.contamination = std::move(contamination);
    a.eps = eps;
    return a;
  }

  // variance-one scaled t, d = 1
  static AlternativeSpec scaled_t_data(double nu) {
    if (!(nu > 2.0)) throw DomainError("scaled t requires nu > 2");
    AlternativeSpec a;
    a.kind = Kind::ScaledTData;
    a.contamination = ContaminationSpec::scaled_t(nu);
    return a;
  }

  // N(mu0 * direction, I)
  static AlternativeSpec mean_shift(double mu0, Vector direction) {
    AlternativeSpec a;
    a.kind = Kind::MeanShift;
    a.mu0 = mu0;
    a.direction = std::move(direction);
    a.base = ScoreModel::gaussian(mu0 * a.direction, Vector::Ones(a.direction.size()));
    return a;
  }

  // same component means as the base mixture, different weights
  static AlternativeSpec mixture_ratio_perturb(const ScoreModel& base_mixture,
                                               Vector new_weights) {
    if (base_mixture.kind() != ScoreModel::Kind::GaussianMixture)
      throw Unsupported("mixture_ratio_perturb needs a GaussianMixture base");
    AlternativeSpec a;
    a.kind = Kind::MixtureRatioPerturb;
    a.base = ScoreModel::gaussian_mixture(std::move(new_weights), base_mixture.mix_means());
    return a;
  }

  Kind kind = Kind::Huber;
  ScoreModel base = ScoreModel::standard_gaussian(1);
  ContaminationSpec contamination = ContaminationSpec::none();
  double eps = 0.0;
  double mu0 = 0.0;  // MeanShift only
  Vector direction;  // MeanShift only
};

// Draws n observations from the alternative. For Huber mixing, the base block
// is generated first with the same seed as the plain base sampler, so eps = 0
// reproduces the base sample bit for bit.
inline DataSet sample_alternative(const AlternativeSpec& spec, Eigen::Index n,
                                  std::uint64_t seed) {
  switch (spec.kind) {
    case AlternativeSpec::Kind::Huber: {
      DataSet data = spec.base.sample(n, seed);
      if (spec.eps == 0.0) return data;
      Rng rng = make_stream(seed, 0xc07u);
      std::bernoulli_distribution flip(spec.eps);
      for (Eigen::Index i = 0; i < n; ++i)
        if (flip(rng)) data.row(i) = spec.contamination.draw(rng).transpose();
      return data;
    }
    case AlternativeSpec::Kind::ScaledTData: {
      Rng rng = make_stream(seed, 0x7e57u);
      DataSet data(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) data.row(i) = spec.contamination.draw(rng).transpose();
      return data;
    }
    case AlternativeSpec::Kind::MeanShift:
    case AlternativeSpec::Kind::MixtureRatioPerturb:
      return spec.base.sample(n, seed);
  }
  throw RksdError("unreachable");
}

// Replaces exactly round(frac * n) uniformly chosen rows (without replacement)
// by contamination draws.
inline DataSet perturb_fraction(const DataSet& data, double frac,
                                const ContaminationSpec& contamination, std::uint64_t seed) {
  if (!(frac >= 0.0 && frac <= 1.0)) throw DomainError("frac must lie in [0,1]");
  const Eigen::Index n = data.rows();
  const auto k = static_cast<Eigen::Index>(std::llround(frac * static_cast<double>(n)));
  DataSet out = data;
  if (k == 0) return out;
  Rng rng = make_stream(seed, 0xf1acu);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    out.row(idx[static_cast<std::size_t>(i)]) = contamination.draw(rng).transpose();
  }
  return out;
}

// Appends n_ol contamination draws; realized contamination ratio is
// n_ol / (n + n_ol).
inline DataSet append_outliers(const DataSet& data, Eigen::Index n_ol,
                               const ContaminationSpec& contamination, std::uint64_t seed) {
  if (n_ol < 0) throw DomainError("n_ol must be nonnegative");
  DataSet out(data.rows() + n_ol, data.cols());
  out.topRows(data.rows()) = data;
  Rng rng = make_stream(seed, 0xadd0u);
  for (Eigen::Index i = 0; i < n_ol; ++i)
    out.row(data.rows() + i) = contamination.draw(rng).transpose();
  return out;
}

}  // namespace rksd
