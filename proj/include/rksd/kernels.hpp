#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rksd/common.hpp"
#include "rksd/dataset.hpp"

namespace rksd {

// Stationary base kernel h(u), evaluated through r = ||u||^2 so that
//   grad h(u)      = 2 h'(r) u
//   laplacian h(u) = 2 d h'(r) + 4 r h''(r)
// with h'(r), h''(r) the derivatives with respect to r.
class BaseKernel {
 public:
  enum class Kind { IMQ, SquaredExponential, SumIMQ };

  static BaseKernel imq(double bandwidth_sq, double exponent) {
    BaseKernel k;
    k.kind_ = Kind::IMQ;
    k.bandwidths_sq_ = {bandwidth_sq};
    k.exponent_ = exponent;
    k.validate();
    return k;
  }

  static BaseKernel squared_exponential(double bandwidth_sq) {
    BaseKernel k;
    k.kind_ = Kind::SquaredExponential;
    k.bandwidths_sq_ = {bandwidth_sq};
    k.validate();
    return k;
  }

  // half_bandwidth selects the (1 + r / (2 lambda^2))^-b convention used for
  // sum kernels; otherwise each term uses (1 + r / lambda^2)^-b.
  static BaseKernel sum_imq(std::vector<double> bandwidths_sq, double exponent,
                            bool half_bandwidth = true) {
    BaseKernel k;
    k.kind_ = Kind::SumIMQ;
    k.bandwidths_sq_ = std::move(bandwidths_sq);
    k.exponent_ = exponent;
    k.half_bandwidth_ = half_bandwidth;
    k.validate();
    return k;
  }

  Kind kind() const { return kind_; }
  const std::vector<double>& bandwidths_sq() const { return bandwidths_sq_; }
  double exponent() const { return exponent_; }
  bool half_bandwidth() const { return half_bandwidth_; }

  double eval_r(double r) const {
    double h, dh, d2h;
    derivatives_r(r, h, dh, d2h);
    return h;
  }

  // h, dh/dr, d2h/dr2 at r = ||u||^2.
  void derivatives_r(double r, double& h, double& dh, double& d2h) const {
    h = dh = d2h = 0.0;
    switch (kind_) {
      case Kind::IMQ:
      case Kind::SumIMQ: {
        const double scale = (kind_ == Kind::SumIMQ && half_bandwidth_) ? 2.0 : 1.0;
        const double b = exponent_;
        for (double l2 : bandwidths_sq_) {
          const double s = scale * l2;
          const double t = 1.0 + r / s;
          const double tb = std::pow(t, -b - 2.0);
          h += tb * t * t;
          dh += -b / s * tb * t;
          d2h += b * (b + 1.0) / (s * s) * tb;
        }
        break;
      }
      case Kind::SquaredExponential: {
        const double l2 = bandwidths_sq_[0];
        h = std::exp(-r / (2.0 * l2));
        dh = -h / (2.0 * l2);
        d2h = h / (4.0 * l2 * l2);
        break;
      }
    }
  }

  double eval(const Vector& u) const { return eval_r(u.squaredNorm()); }

  Vector grad(const Vector& u) const {
    double h, dh, d2h;
    derivatives_r(u.squaredNorm(), h, dh, d2h);
    return 2.0 * dh * u;
  }

  double laplacian(const Vector& u) const {
    const double r = u.squaredNorm();
    double h, dh, d2h;
    derivatives_r(r, h, dh, d2h);
    return 2.0 * static_cast<double>(u.size()) * dh + 4.0 * r * d2h;
  }

 private:
  void validate() const {
    if (bandwidths_sq_.empty()) throw DomainError("kernel needs at least one bandwidth");
    for (double l2 : bandwidths_sq_)
      if (!(l2 > 0.0)) throw DomainError("bandwidth^2 must be positive");
    if (kind_ != Kind::SquaredExponential && !(exponent_ > 0.0))
      throw DomainError("kernel exponent must be positive");
  }

  Kind kind_ = Kind::IMQ;
  std::vector<double> bandwidths_sq_;
  double exponent_ = 0.5;
  bool half_bandwidth_ = false;
};

// Weighting function w with 0 < w <= 1 and bounded gradient.
class Weight {
 public:
  enum class Kind { Unit, IMQWeight };

  static Weight unit() { return Weight(); }

  static Weight imq(Vector center, double scale, double exponent) {
    if (!(scale > 0.0)) throw DomainError("weight scale must be positive");
    if (!(exponent > 0.0)) throw DomainError("weight exponent must be positive");
    Weight w;
    w.kind_ = Kind::IMQWeight;
    w.center_ = std::move(center);
    w.scale_ = scale;
    w.exponent_ = exponent;
    return w;
  }

  Kind kind() const { return kind_; }
  const Vector& center() const { return center_; }
  double scale() const { return scale_; }
  double exponent() const { return exponent_; }

  double eval(const Vector& x) const {
    if (kind_ == Kind::Unit) return 1.0;
    const double t = 1.0 + (x - center_).squaredNorm() / scale_;
    return std::pow(t, -exponent_);
  }

  Vector grad(const Vector& x) const {
    if (kind_ == Kind::Unit) return Vector::Zero(x.size());
    const Vector dx = x - center_;
    const double t = 1.0 + dx.squaredNorm() / scale_;
    return (-2.0 * exponent_ / scale_) * std::pow(t, -exponent_ - 1.0) * dx;
  }

  // value and gradient together; saves a pow in the O(n^2) Stein loop
  void eval_grad(const Vector& x, double& w, Vector& gw) const {
    if (kind_ == Kind::Unit) {
      w = 1.0;
      gw = Vector::Zero(x.size());
      return;
    }
    const Vector dx = x - center_;
    const double t = 1.0 + dx.squaredNorm() / scale_;
    const double tb = std::pow(t, -exponent_ - 1.0);
    w = tb * t;
    gw = (-2.0 * exponent_ / scale_) * tb * dx;
  }

 private:
  Kind kind_ = Kind::Unit;
  Vector center_;
  double scale_ = 1.0;
  double exponent_ = 0.5;
};

// k(x, x') = w(x) h(x - x') w(x')
struct TiltedKernel {
  BaseKernel base;
  Weight weight;

  double eval(const Vector& x, const Vector& y) const {
    // weights grouped first so the result is exactly symmetric in (x, y)
    return (weight.eval(x) * weight.eval(y)) * base.eval(x - y);
  }
};

// Median of the n(n-1)/2 pairwise Euclidean distances. Even-length lists take
// the lower of the two middle elements so results are bit-reproducible.
inline double median_heuristic(const DataSet& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw DegenerateSample("median heuristic needs n >= 2");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dists.push_back((data.row(i) - data.row(j)).norm());
  const std::size_t mid = (dists.size() - 1) / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid),
                   dists.end());
  const double med = dists[mid];
  if (*std::max_element(dists.begin(), dists.end()) == 0.0)
    throw DegenerateSample("all pairwise distances are zero");
  return med;
}

}  // namespace rksd
