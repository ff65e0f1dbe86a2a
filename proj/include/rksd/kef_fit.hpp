#pragma once

#include <cmath>
#include <utility>

#include "rksd/common.hpp"
#include "rksd/dataset.hpp"
#include "rksd/kernels.hpp"
#include "rksd/models.hpp"

namespace rksd {

struct FittedKEF {
  Vector eta;
  double ridge = 0.0;
  double objective_value = 0.0;  // V-statistic KSD^2 at eta (unridged)
  // standardization applied to the data before fitting
  double center = 0.0;
  double scale = 1.0;
};

// The KEF score is affine in eta, so the V-statistic objective is the
// quadratic form  D^2(eta) = eta^T A eta - 2 v^T eta + c.
struct KefNormalEquations {
  Matrix A;
  Vector v;
  double c = 0.0;
};

inline KefNormalEquations kef_normal_equations(const DataSet& data, const TiltedKernel& kernel,
                                               int basis_size) {
  if (data.cols() != 1) throw Unsupported("KEF fitting is 1-d only");
  const Eigen::Index n = data.rows();
  const Eigen::Index L = basis_size;

  // per-point: reference score s0 = -x, basis derivatives, weight values
  Vector s0(n), wv(n), dwv(n);
  Matrix G(n, L);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = data(i, 0);
    s0(i) = -x;
    Vector xv(1);
    xv(0) = x;
    double w;
    Vector gw;
    kernel.weight.eval_grad(xv, w, gw);
    wv(i) = w;
    dwv(i) = gw(0);
    for (Eigen::Index l = 0; l < L; ++l)
      G(i, l) = kef_basis(static_cast<int>(l) + 1, x).second;
  }

  // tilted kernel k and its partials on all pairs
  Matrix K(n, n), K2(n, n), K12(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double u = data(i, 0) - data(j, 0);
      double h, dh, d2h;
      kernel.base.derivatives_r(u * u, h, dh, d2h);
      const double hp = 2.0 * dh * u;                // h'(u)
      const double hpp = 2.0 * dh + 4.0 * u * u * d2h;  // h''(u)
      const double wx = wv(i), wy = wv(j), dwx = dwv(i), dwy = dwv(j);
      K(i, j) = wx * h * wy;
      K2(i, j) = wx * h * dwy - wx * hp * wy;
      K12(i, j) = dwx * h * dwy - dwx * hp * wy + wx * hp * dwy - wx * hpp * wy;
      if (j != i) {
        K(j, i) = K(i, j);
        // swapping arguments flips the sign of u
        K2(j, i) = wy * h * dwx + wy * hp * wx;
        K12(j, i) = K12(i, j);
      }
    }
  }

  const double nn = static_cast<double>(n);
  const Vector k2row = K2.rowwise().sum();
  KefNormalEquations eq;
  eq.A = (G.transpose() * K * G) / (nn * nn);
  eq.v = (G.transpose() * (K * s0 + k2row)) / (nn * nn);
  eq.c = (s0.dot(K * s0) + 2.0 * s0.dot(k2row) + K12.sum()) / (nn * nn);
  return eq;
}

// Minimum-KSD fit: solves (A + ridge I) eta = v. Data are standardized first
// (the returned model applies to standardized inputs; the transform is stored).
inline FittedKEF fit_kef_min_ksd(const DataSet& data, const TiltedKernel& kernel, int basis_size,
                                 double ridge, bool standardize = true) {
  if (data.cols() != 1) throw Unsupported("KEF fitting is 1-d only");
  if (!(ridge >= 0.0)) throw DomainError("ridge must be nonnegative");
  FittedKEF fit;
  DataSet x = data;
  if (standardize) {
    fit.center = x.col(0).mean();
    const double var = (x.col(0).array() - fit.center).square().sum() /
                       static_cast<double>(x.rows() - 1);
    fit.scale = std::sqrt(var);
    if (!(fit.scale > 0.0)) throw DegenerateSample("constant data cannot be standardized");
    x.col(0) = (x.col(0).array() - fit.center) / fit.scale;
  }
  const KefNormalEquations eq = kef_normal_equations(x, kernel, basis_size);
  const Matrix reg = eq.A + ridge * Matrix::Identity(basis_size, basis_size);
  Eigen::SelfAdjointEigenSolver<Matrix> es(reg);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw IllConditioned("KEF normal equations: condition estimate " +
                         std::to_string(lmax / std::max(lmin, 1e-300)));
  fit.eta = es.eigenvectors() *
            (es.eigenvectors().transpose() * eq.v).cwiseQuotient(es.eigenvalues());
  fit.ridge = ridge;
  fit.objective_value = fit.eta.dot(eq.A * fit.eta) - 2.0 * eq.v.dot(fit.eta) + eq.c;
  return fit;
}

inline double default_kef_ridge(const KefNormalEquations& eq) {
  return 1e-8 * eq.A.trace() / static_cast<double>(eq.A.rows());
}

}  // namespace rksd
