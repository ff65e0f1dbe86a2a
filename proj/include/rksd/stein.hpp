#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <vector>

#include "rksd/common.hpp"
#include "rksd/dataset.hpp"
#include "rksd/kernels.hpp"
#include "rksd/models.hpp"

namespace rksd {

// Evaluates the Stein kernel
//   u_p(x,y) = s(x)^T s(y) k(x,y) + s(x)^T grad2 k + grad1 k^T s(y)
//              + grad1^T grad2 k
// for a tilted kernel k(x,y) = w(x) h(x-y) w(y). Expanding the derivatives by
// the product rule and collecting terms around a(x) = w(x) s(x) + grad w(x)
// gives the form actually computed:
//   u_p(x,y) = <a(x), a(y)> h(u) + <grad h(u), w(x) a(y) - w(y) a(x)>
//              - w(x) w(y) laplacian h(u),   u = x - y.
class SteinEvaluator {
 public:
  SteinEvaluator(const ScoreModel& model, const TiltedKernel& kernel)
      : model_(&model), kernel_(&kernel) {}
  // the evaluator keeps references; forbid binding temporaries
  SteinEvaluator(const ScoreModel&, TiltedKernel&&) = delete;
  SteinEvaluator(ScoreModel&&, const TiltedKernel&) = delete;
  SteinEvaluator(ScoreModel&&, TiltedKernel&&) = delete;

  struct Point {
    Vector x;
    Vector a;  // w(x) s(x) + grad w(x)
    double w;
  };

  Point prepare(const Vector& x) const {
    Point p;
    p.x = x;
    double w;
    Vector gw;
    kernel_->weight.eval_grad(x, w, gw);
    p.w = w;
    p.a = w * model_->score(x) + gw;
    return p;
  }

  double eval(const Point& p, const Point& q) const {
    const Vector u = p.x - q.x;
    const double r = u.squaredNorm();
    double h, dh, d2h;
    kernel_->base.derivatives_r(r, h, dh, d2h);
    const double lap = 2.0 * static_cast<double>(u.size()) * dh + 4.0 * r * d2h;
    const double cross = 2.0 * dh * u.dot(p.w * q.a - q.w * p.a);
    return p.a.dot(q.a) * h + cross - p.w * q.w * lap;
  }

  double diag(const Point& p) const {
    double h, dh, d2h;
    kernel_->base.derivatives_r(0.0, h, dh, d2h);
    const double lap0 = 2.0 * static_cast<double>(p.x.size()) * dh;
    return p.a.squaredNorm() * h - p.w * p.w * lap0;
  }

  double eval(const Vector& x, const Vector& y) const { return eval(prepare(x), prepare(y)); }

 private:
  const ScoreModel* model_;
  const TiltedKernel* kernel_;
};

inline double stein_kernel_eval(const ScoreModel& model, const TiltedKernel& kernel,
                                const Vector& x, const Vector& y) {
  return SteinEvaluator(model, kernel).eval(x, y);
}

// n x n matrix of Stein kernel values; each unordered pair is evaluated once,
// so the matrix is symmetric within zero absolute error.
struct SteinGram {
  Matrix values;
  double diag_max = -std::numeric_limits<double>::infinity();

  Eigen::Index size() const { return values.rows(); }
};

inline SteinGram stein_gram(const ScoreModel& model, const TiltedKernel& kernel,
                            const DataSet& data) {
  const Eigen::Index n = data.rows();
  if (n < 1) throw EmptyData("stein_gram: empty data");
  SteinEvaluator ev(model, kernel);
  std::vector<SteinEvaluator::Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pts.push_back(ev.prepare(data.row(i).transpose()));
  SteinGram g;
  g.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dii = ev.diag(pts[static_cast<std::size_t>(i)]);
    g.values(i, i) = dii;
    g.diag_max = std::max(g.diag_max, dii);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = ev.eval(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

// V-statistic D^2 = n^-2 sum_ij u_ij; small negative totals are rounding noise
// and clamp to zero, anything below -1e-8 signals a broken Gram.
inline double ksd_v_stat(const SteinGram& gram) {
  const double n = static_cast<double>(gram.size());
  const double v = gram.values.sum() / (n * n);
  if (v < -1e-8) throw NegativeVStat("V-statistic is negative: " + std::to_string(v));
  return v < 0.0 ? 0.0 : v;
}

// U-statistic: off-diagonal mean; unbiased but may be negative.
inline double ksd_u_stat(const SteinGram& gram) {
  const Eigen::Index n = gram.size();
  if (n < 2) throw TooFewPoints("U-statistic needs n >= 2");
  const double nn = static_cast<double>(n);
  return (gram.values.sum() - gram.values.trace()) / (nn * (nn - 1.0));
}

enum class TauMethod { DataMax, GridLocal };

struct TauEstimate {
  double value = 0.0;
  TauMethod method = TauMethod::DataMax;
  Vector argmax;
  double locality_bound = 0.0;  // GridLocal only
};

namespace detail {

// Golden-section maximization of f along coordinate `j`, bracket [lo, hi].
inline void golden_section_coord(const std::function<double(const Vector&)>& f, Vector& x,
                                 Eigen::Index j, double lo, double hi, int iters,
                                 double& best_val) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  auto fat = [&](double t) {
    Vector y = x;
    y(j) = t;
    return f(y);
  };
  double fc = fat(c), fd = fat(d);
  for (int it = 0; it < iters && (b - a) > 1e-10; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = fat(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = fat(d);
    }
  }
  const double t = 0.5 * (a + b);
  const double ft = fat(t);
  if (ft > best_val) {
    best_val = ft;
    x(j) = t;
  }
}

}  // namespace detail

// tau_inf estimate: either the maximum of the Stein kernel diagonal over the
// observed data, or a grid-plus-refinement search localized to
// ||x - a||_inf <= bound around the coordinatewise data median. Both are lower
// bounds on the true supremum.
inline TauEstimate tau_inf(const ScoreModel& model, const TiltedKernel& kernel,
                           const DataSet& data, TauMethod method, double locality_bound = 0.0) {
  SteinEvaluator ev(model, kernel);
  TauEstimate out;
  out.method = method;
  if (method == TauMethod::DataMax) {
    const Eigen::Index n = data.rows();
    if (n < 1) throw EmptyData("tau_inf: empty data");
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Index best_i = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = ev.diag(ev.prepare(data.row(i).transpose()));
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    out.value = best;
    out.argmax = data.row(best_i).transpose();
    return out;
  }

  if (!(locality_bound > 0.0)) throw DomainError("tau_inf: GridLocal needs locality_bound > 0");
  const Eigen::Index d = data.cols();
  // coordinatewise lower median of the data
  Vector center(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> col(data.col(j).data(), data.col(j).data() + data.rows());
    const std::size_t mid = (col.size() - 1) / 2;
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid), col.end());
    center(j) = col[mid];
  }
  auto f = [&](const Vector& x) { return ev.diag(ev.prepare(x)); };

  constexpr int kGridPoints = 2048;
  constexpr int kTopK = 5;
  constexpr int kGoldenIters = 200;
  struct Cand {
    double val;
    Vector x;
  };
  std::vector<Cand> cands;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (int g = 0; g < kGridPoints; ++g) {
      Vector x = center;
      x(j) = center(j) - locality_bound +
             2.0 * locality_bound * static_cast<double>(g) / (kGridPoints - 1);
      cands.push_back({f(x), x});
    }
  }
  std::partial_sort(cands.begin(), cands.begin() + std::min<std::size_t>(kTopK, cands.size()),
                    cands.end(), [](const Cand& a, const Cand& b) { return a.val > b.val; });
  double best = -std::numeric_limits<double>::infinity();
  Vector best_x = center;
  const std::size_t top = std::min<std::size_t>(kTopK, cands.size());
  for (std::size_t c = 0; c < top; ++c) {
    Vector x = cands[c].x;
    double val = cands[c].val;
    for (Eigen::Index j = 0; j < d; ++j)
      detail::golden_section_coord(f, x, j, center(j) - locality_bound,
                                   center(j) + locality_bound, kGoldenIters, val);
    if (val > best) {
      best = val;
      best_x = x;
    }
  }
  out.value = best;
  out.argmax = best_x;
  out.locality_bound = locality_bound;
  return out;
}

// Composite-Simpson cross integral  int int u_p(x,y) qa(x) qb(y) dx dy  on
// uniform 1-d grids (odd point counts).
inline double ksd_cross_quadrature_1d(const ScoreModel& model, const TiltedKernel& kernel,
                                      const std::function<double(double)>& qa, double lo_a,
                                      double hi_a, int pts_a,
                                      const std::function<double(double)>& qb, double lo_b,
                                      double hi_b, int pts_b) {
  if (model.dim() != 1) throw BadGrid("quadrature oracle is 1-d only");
  if (pts_a < 3 || pts_a % 2 == 0 || pts_b < 3 || pts_b % 2 == 0)
    throw BadGrid("Simpson rule needs an odd number of nodes, at least 3");
  SteinEvaluator ev(model, kernel);
  auto make_nodes = [&](const std::function<double(double)>& q, double lo, double hi, int m) {
    const double hstep = (hi - lo) / (m - 1);
    std::vector<SteinEvaluator::Point> pts;
    std::vector<double> wts;
    pts.reserve(static_cast<std::size_t>(m));
    wts.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const double x = lo + hstep * i;
      double sw = (i == 0 || i == m - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      Vector xv(1);
      xv(0) = x;
      pts.push_back(ev.prepare(xv));
      wts.push_back(q(x) * sw * hstep / 3.0);
    }
    return std::make_pair(std::move(pts), std::move(wts));
  };
  auto [pa, wa] = make_nodes(qa, lo_a, hi_a, pts_a);
  auto [pb, wb] = make_nodes(qb, lo_b, hi_b, pts_b);
  double total = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < pb.size(); ++j) row += wb[j] * ev.eval(pa[i], pb[j]);
    total += wa[i] * row;
  }
  return total;
}

// Population KSD^2 of a density q against the model, by tensor-product Simpson.
inline double ksd_quadrature_1d(const ScoreModel& model, const TiltedKernel& kernel,
                                const std::function<double(double)>& q_density, double lo,
                                double hi, int points) {
  return ksd_cross_quadrature_1d(model, kernel, q_density, lo, hi, points, q_density, lo, hi,
                                 points);
}

inline void dump_gram_csv(const SteinGram& gram, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write: " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < gram.size(); ++i) {
    for (Eigen::Index j = 0; j < gram.size(); ++j) {
      if (j) out << ',';
      out << gram.values(i, j);
    }
    out << '\n';
  }
}

}  // namespace rksd
