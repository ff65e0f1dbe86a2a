#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "rksd/common.hpp"
#include "rksd/dataset.hpp"
#include "rksd/rng.hpp"

namespace rksd {

// phi_l(x) = (x^l / sqrt(l!)) exp(-x^2/2) and its derivative, l >= 1.
inline std::pair<double, double> kef_basis(int l, double x) {
  if (l < 1) throw DomainError("kef basis index must be >= 1");
  const double inv_sqrt_fact = std::exp(-0.5 * std::lgamma(static_cast<double>(l) + 1.0));
  const double e = std::exp(-0.5 * x * x);
  const double xl1 = std::pow(x, l - 1);
  const double value = xl1 * x * inv_sqrt_fact * e;
  const double deriv = (static_cast<double>(l) * xl1 - xl1 * x * x) * inv_sqrt_fact * e;
  return {value, deriv};
}

// An unnormalized model P exposing its score s_p(x) = grad log p(x).
class ScoreModel {
 public:
  enum class Kind { Gaussian, GaussianMixture, RBM, PowerExponential, KEF };

  static ScoreModel gaussian(Vector mean, Vector variances) {
    if (mean.size() != variances.size())
      throw DomainError("gaussian: mean/variance dimension mismatch");
    if ((variances.array() <= 0.0).any()) throw DomainError("gaussian: variances must be positive");
    ScoreModel m;
    m.kind_ = Kind::Gaussian;
    m.mean_ = std::move(mean);
    m.variances_ = std::move(variances);
    m.dim_ = m.mean_.size();
    return m;
  }

  static ScoreModel standard_gaussian(Eigen::Index d) {
    return gaussian(Vector::Zero(d), Vector::Ones(d));
  }

  // unit-covariance mixture
  static ScoreModel gaussian_mixture(Vector weights, std::vector<Vector> means) {
    if (weights.size() == 0 || static_cast<std::size_t>(weights.size()) != means.size())
      throw BadSimplex("mixture: weights/means size mismatch");
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12)
      throw BadSimplex("mixture: weights must be a simplex");
    const Eigen::Index d = means[0].size();
    for (const auto& mu : means)
      if (mu.size() != d) throw DomainError("mixture: inconsistent component dimensions");
    ScoreModel m;
    m.kind_ = Kind::GaussianMixture;
    m.mix_weights_ = std::move(weights);
    m.mix_means_ = std::move(means);
    m.dim_ = d;
    return m;
  }

  static ScoreModel rbm(Matrix B, Vector b, Vector c) {
    if (B.rows() != b.size() || B.cols() != c.size())
      throw DomainError("rbm: parameter dimension mismatch");
    ScoreModel m;
    m.kind_ = Kind::RBM;
    m.rbm_B_ = std::move(B);
    m.rbm_b_ = std::move(b);
    m.rbm_c_ = std::move(c);
    m.dim_ = m.rbm_b_.size();
    return m;
  }

  // density proportional to exp(-||x||^r), r >= 1
  static ScoreModel power_exponential(double r, Eigen::Index d) {
    if (!(r >= 1.0)) throw DomainError("power exponential: r must be >= 1");
    ScoreModel m;
    m.kind_ = Kind::PowerExponential;
    m.pe_r_ = r;
    m.dim_ = d;
    return m;
  }

  // d=1, standard normal reference: p(x) proportional to
  // exp(-x^2/2) exp(-sum_l eta_l phi_l(x))
  static ScoreModel kef(Vector eta) {
    if (eta.size() == 0) throw DomainError("kef: empty coefficient vector");
    ScoreModel m;
    m.kind_ = Kind::KEF;
    m.kef_eta_ = std::move(eta);
    m.dim_ = 1;
    return m;
  }

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const Vector& mean() const { return mean_; }
  const Vector& variances() const { return variances_; }
  const Matrix& rbm_B() const { return rbm_B_; }
  const Vector& rbm_b() const { return rbm_b_; }
  const Vector& rbm_c() const { return rbm_c_; }
  const Vector& kef_eta() const { return kef_eta_; }
  double power_r() const { return pe_r_; }
  const Vector& mix_weights() const { return mix_weights_; }
  const std::vector<Vector>& mix_means() const { return mix_means_; }

  Vector score(const Vector& x) const {
    switch (kind_) {
      case Kind::Gaussian:
        return ((mean_ - x).array() / variances_.array()).matrix();
      case Kind::GaussianMixture: {
        const Vector resp = responsibilities(x);
        Vector s = Vector::Zero(dim_);
        for (std::size_t j = 0; j < mix_means_.size(); ++j)
          s += resp(static_cast<Eigen::Index>(j)) * (mix_means_[j] - x);
        return s;
      }
      case Kind::RBM:
        return rbm_b_ - x + rbm_B_ * (rbm_B_.transpose() * x + rbm_c_).array().tanh().matrix();
      case Kind::PowerExponential: {
        const double nrm = x.norm();
        if (nrm == 0.0) {
          if (pe_r_ < 2.0) throw SingularPoint("power exponential score undefined at x = 0");
          if (pe_r_ == 2.0) return Vector::Zero(dim_);
          return Vector::Zero(dim_);
        }
        return -pe_r_ * std::pow(nrm, pe_r_ - 2.0) * x;
      }
      case Kind::KEF: {
        double s = -x(0);
        for (Eigen::Index l = 0; l < kef_eta_.size(); ++l)
          s -= kef_eta_(l) * kef_basis(static_cast<int>(l) + 1, x(0)).second;
        Vector out(1);
        out(0) = s;
        return out;
      }
    }
    throw RksdError("unreachable");
  }

  // log p(x) up to an additive constant; convention: no constant term, so the
  // standard Gaussian gives -x^2/2.
  double log_density_unnorm(const Vector& x) const {
    switch (kind_) {
      case Kind::Gaussian:
        return -0.5 * ((x - mean_).array().square() / variances_.array()).sum();
      case Kind::GaussianMixture: {
        double best = -std::numeric_limits<double>::infinity();
        Vector logs(static_cast<Eigen::Index>(mix_means_.size()));
        for (std::size_t j = 0; j < mix_means_.size(); ++j) {
          const auto idx = static_cast<Eigen::Index>(j);
          logs(idx) = std::log(std::max(mix_weights_(idx), 1e-300)) -
                      0.5 * (x - mix_means_[j]).squaredNorm();
          best = std::max(best, logs(idx));
        }
        return best + std::log((logs.array() - best).exp().sum());
      }
      case Kind::RBM: {
        // The latent sum over {-1,+1}^d' factorizes into a product of
        // 2 cosh terms, so this is exact for any latent dimension.
        const Vector t = rbm_B_.transpose() * x + rbm_c_;
        double s = rbm_b_.dot(x) - 0.5 * x.squaredNorm();
        for (Eigen::Index j = 0; j < t.size(); ++j)
          s += std::abs(t(j)) + std::log1p(std::exp(-2.0 * std::abs(t(j))));
        return s;  // each term is log(2 cosh t_j)
      }
      case Kind::PowerExponential:
        return -std::pow(x.norm(), pe_r_);
      case Kind::KEF: {
        double s = -0.5 * x(0) * x(0);
        for (Eigen::Index l = 0; l < kef_eta_.size(); ++l)
          s -= kef_eta_(l) * kef_basis(static_cast<int>(l) + 1, x(0)).first;
        return s;
      }
    }
    throw RksdError("unreachable");
  }

  // i.i.d. sampling; Gaussian and GaussianMixture only.
  DataSet sample(Eigen::Index n, std::uint64_t seed) const {
    Rng rng(mix_seed(seed, 0x5a3c1ed5u));
    std::normal_distribution<double> normal(0.0, 1.0);
    DataSet out(n, dim_);
    switch (kind_) {
      case Kind::Gaussian: {
        const Vector sd = variances_.array().sqrt();
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < dim_; ++j)
            out(i, j) = mean_(j) + sd(j) * normal(rng);
        return out;
      }
      case Kind::GaussianMixture: {
        std::discrete_distribution<int> comp(mix_weights_.data(),
                                             mix_weights_.data() + mix_weights_.size());
        for (Eigen::Index i = 0; i < n; ++i) {
          const Vector& mu = mix_means_[static_cast<std::size_t>(comp(rng))];
          for (Eigen::Index j = 0; j < dim_; ++j) out(i, j) = mu(j) + normal(rng);
        }
        return out;
      }
      default:
        throw Unsupported("sample: only Gaussian and GaussianMixture support i.i.d. sampling");
    }
  }

 private:
  Vector responsibilities(const Vector& x) const {
    Vector logs(static_cast<Eigen::Index>(mix_means_.size()));
    for (std::size_t j = 0; j < mix_means_.size(); ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      logs(idx) = std::log(std::max(mix_weights_(idx), 1e-300)) -
                  0.5 * (x - mix_means_[j]).squaredNorm();
    }
    const double m = logs.maxCoeff();
    Vector r = (logs.array() - m).exp();
    return r / r.sum();
  }

  Kind kind_ = Kind::Gaussian;
  Eigen::Index dim_ = 0;
  Vector mean_, variances_;
  Vector mix_weights_;
  std::vector<Vector> mix_means_;
  Matrix rbm_B_;
  Vector rbm_b_, rbm_c_;
  double pe_r_ = 2.0;
  Vector kef_eta_;
};

// Block Gibbs for the RBM joint exp(x^T B h + b^T x + c^T h - ||x||^2/2):
//   P(h_j = +1 | x) = sigma(2 (x^T B_j + c_j)),   x | h ~ N(Bh + b, I).
// Performs burn_in full block updates, then records every `thinning`-th state.
inline DataSet rbm_gibbs_sample(const ScoreModel& model, Eigen::Index n, Eigen::Index burn_in,
                                Eigen::Index thinning, std::uint64_t seed) {
  if (model.kind() != ScoreModel::Kind::RBM) throw Unsupported("rbm_gibbs_sample: not an RBM");
  if (thinning < 1) throw DomainError("thinning must be >= 1");
  const Matrix& B = model.rbm_B();
  const Vector& b = model.rbm_b();
  const Vector& c = model.rbm_c();
  const Eigen::Index d = b.size(), dh = c.size();
  Rng rng(mix_seed(seed, 0x91b5u));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vector x(d);
  for (Eigen::Index j = 0; j < d; ++j) x(j) = b(j) + normal(rng);
  Vector h(dh);

  auto block_update = [&] {
    const Vector t = B.transpose() * x + c;
    for (Eigen::Index j = 0; j < dh; ++j) {
      const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * t(j)));
      h(j) = unif(rng) < p_plus ? 1.0 : -1.0;
    }
    const Vector mu = B * h + b;
    for (Eigen::Index j = 0; j < d; ++j) x(j) = mu(j) + normal(rng);
  };

  for (Eigen::Index i = 0; i < burn_in; ++i) block_update();
  DataSet out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index s = 0; s < thinning; ++s) block_update();
    out.row(i) = x.transpose();
  }
  return out;
}

}  // namespace rksd
