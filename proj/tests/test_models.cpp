#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rksd/kef_fit.hpp"
#include "rksd/models.hpp"
#include "rksd/rng.hpp"
#include "rksd/serialize.hpp"
#include "rksd/stein.hpp"

using namespace rksd;

namespace {

Vector rand_vec(Eigen::Index d, Rng& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = u(rng);
  return v;
}

// log sum over h in {-1,+1}^dh of exp(x^T B h + b^T x + c^T h - ||x||^2/2)
double rbm_log_density_enum(const Matrix& B, const Vector& b, const Vector& c, const Vector& x) {
  const Eigen::Index dh = c.size();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (long long mask = 0; mask < (1LL << dh); ++mask) {
    Vector h(dh);
    for (Eigen::Index j = 0; j < dh; ++j) h(j) = (mask >> j) & 1 ? 1.0 : -1.0;
    const double t = x.dot(B * h) + b.dot(x) + c.dot(h) - 0.5 * x.squaredNorm();
    terms.push_back(t);
    best = std::max(best, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

// exact enumeration score: posterior-averaged b - x + B h
Vector rbm_score_enum(const Matrix& B, const Vector& b, const Vector& c, const Vector& x) {
  const Eigen::Index dh = c.size();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> logw;
  std::vector<Vector> hs;
  for (long long mask = 0; mask < (1LL << dh); ++mask) {
    Vector h(dh);
    for (Eigen::Index j = 0; j < dh; ++j) h(j) = (mask >> j) & 1 ? 1.0 : -1.0;
    logw.push_back(x.dot(B * h) + c.dot(h));
    hs.push_back(h);
    best = std::max(best, logw.back());
  }
  double z = 0.0;
  Vector eh = Vector::Zero(dh);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double w = std::exp(logw[i] - best);
    z += w;
    eh += w * hs[i];
  }
  return b - x + B * (eh / z);
}

}  // namespace

TEST_CASE("score closed forms") {
  const ScoreModel g = ScoreModel::standard_gaussian(2);
  Vector x(2);
  x << 1, 2;
  CHECK(g.score(x)(0) == -1.0);
  CHECK(g.score(x)(1) == -2.0);

  Rng rng = make_stream(21, 0);
  Matrix B(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i) B.row(i) = rand_vec(2, rng).transpose();
  const ScoreModel rbm = ScoreModel::rbm(B, Vector::Zero(3), Vector::Zero(2));
  CHECK(rbm.score(Vector::Zero(3)).norm() == 0.0);
}

TEST_CASE("model constructors validate") {
  CHECK_THROWS_AS(ScoreModel::gaussian(Vector::Zero(2), -Vector::Ones(2)), DomainError);
  Vector w(2);
  w << 0.6, 0.6;
  CHECK_THROWS_AS(ScoreModel::gaussian_mixture(w, {Vector::Zero(1), Vector::Ones(1)}),
                  BadSimplex);
  CHECK_THROWS_AS(ScoreModel::power_exponential(0.5, 1), DomainError);
  CHECK_THROWS_AS(ScoreModel::kef(Vector()), DomainError);
}

TEST_CASE("power exponential score is singular at zero for r < 2") {
  const ScoreModel pe = ScoreModel::power_exponential(1.5, 2);
  CHECK_THROWS_AS(pe.score(Vector::Zero(2)), SingularPoint);
  Vector x(2);
  x << 0.6, -0.8;  // ||x|| = 1
  CHECK(ScoreModel::power_exponential(2.0, 2).log_density_unnorm(x) ==
        doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("log-density anchors") {
  CHECK(ScoreModel::standard_gaussian(1).log_density_unnorm(Vector::Zero(1)) == 0.0);
  Matrix B(1, 1);
  B << 1;
  const ScoreModel rbm = ScoreModel::rbm(B, Vector::Zero(1), Vector::Zero(1));
  CHECK(rbm.log_density_unnorm(Vector::Zero(1)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("RBM score matches exact latent enumeration") {
  Rng rng = make_stream(22, 0);
  std::normal_distribution<double> normal(0.0, 0.5);
  Matrix B(4, 6);
  Vector b(4), c(6);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) B(i, j) = normal(rng);
  for (Eigen::Index i = 0; i < 4; ++i) b(i) = normal(rng);
  for (Eigen::Index j = 0; j < 6; ++j) c(j) = normal(rng);
  const ScoreModel m = ScoreModel::rbm(B, b, c);
  for (int t = 0; t < 50; ++t) {
    const Vector x = rand_vec(4, rng);
    const Vector s = m.score(x);
    const Vector se = rbm_score_enum(B, b, c, x);
    CHECK((s - se).norm() <= 1e-8 * (1.0 + se.norm()));
    CHECK(m.log_density_unnorm(x) ==
          doctest::Approx(rbm_log_density_enum(B, b, c, x)).epsilon(1e-10));
  }
}

TEST_CASE("RBM score matches finite differences of the enumerated log density") {
  Rng rng = make_stream(23, 0);
  std::normal_distribution<double> normal(0.0, 0.3);
  Matrix B(2, 2);
  Vector b(2), c(2);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) B(i, j) = normal(rng);
  for (Eigen::Index i = 0; i < 2; ++i) {
    b(i) = normal(rng);
    c(i) = normal(rng);
  }
  const ScoreModel m = ScoreModel::rbm(B, b, c);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rand_vec(2, rng);
    const Vector s = m.score(x);
    for (Eigen::Index j = 0; j < 2; ++j) {
      Vector xp = x, xm = x;
      xp(j) += 1e-5;
      xm(j) -= 1e-5;
      const double fd =
          (rbm_log_density_enum(B, b, c, xp) - rbm_log_density_enum(B, b, c, xm)) / 2e-5;
      CHECK(s(j) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("score equals finite differences of log_density_unnorm for every variant") {
  Rng rng = make_stream(24, 0);
  std::vector<ScoreModel> models;
  models.push_back(ScoreModel::gaussian((Vector(2) << 0.3, -1.0).finished(),
                                        (Vector(2) << 0.5, 2.0).finished()));
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  models.push_back(ScoreModel::gaussian_mixture(
      w, {rand_vec(2, rng), rand_vec(2, rng), rand_vec(2, rng)}));
  models.push_back(ScoreModel::power_exponential(3.0, 2));
  models.push_back(ScoreModel::kef((Vector(3) << 0.2, -0.1, 0.05).finished()));
  Matrix B(2, 3);
  for (Eigen::Index i = 0; i < 2; ++i) B.row(i) = rand_vec(3, rng, 0.5).transpose();
  models.push_back(ScoreModel::rbm(B, rand_vec(2, rng), rand_vec(3, rng)));

  for (const ScoreModel& m : models) {
    for (int t = 0; t < 100; ++t) {
      Vector x = rand_vec(m.dim(), rng);
      if (m.kind() == ScoreModel::Kind::PowerExponential && x.norm() < 0.2) x(0) += 1.0;
      const Vector s = m.score(x);
      for (Eigen::Index j = 0; j < m.dim(); ++j) {
        Vector xp = x, xm = x;
        xp(j) += 1e-5;
        xm(j) -= 1e-5;
        const double fd = (m.log_density_unnorm(xp) - m.log_density_unnorm(xm)) / 2e-5;
        CHECK(s(j) == doctest::Approx(fd).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("kef basis values") {
  CHECK(kef_basis(1, 0.0).first == 0.0);
  CHECK(kef_basis(1, 0.0).second == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kef_basis(2, 0.0).first == 0.0);
  CHECK(kef_basis(2, 0.0).second == 0.0);
  CHECK(kef_basis(3, 1.0).first ==
        doctest::Approx(std::exp(-0.5) / std::sqrt(6.0)).epsilon(1e-12));
  CHECK_THROWS_AS(kef_basis(0, 1.0), DomainError);

  // derivative consistency by finite differences
  Rng rng = make_stream(25, 0);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int l = 1; l <= 6; ++l) {
    for (int t = 0; t < 20; ++t) {
      const double x = u(rng);
      const double fd = (kef_basis(l, x + 1e-6).first - kef_basis(l, x - 1e-6).first) / 2e-6;
      CHECK(kef_basis(l, x).second == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("KEF objective is the assembled quadratic") {
  Rng rng = make_stream(26, 0);
  DataSet data = ScoreModel::standard_gaussian(1).sample(100, 7);
  const TiltedKernel kernel{BaseKernel::imq(1.0, 0.5), Weight::imq(Vector::Zero(1), 1.0, 0.5)};
  const KefNormalEquations eq = kef_normal_equations(data, kernel, 3);
  for (int t = 0; t < 5; ++t) {
    const Vector eta = rand_vec(3, rng, 1.0);
    const double quad = eta.dot(eq.A * eta) - 2.0 * eq.v.dot(eta) + eq.c;
    const double direct = ksd_v_stat(stein_gram(ScoreModel::kef(eta), kernel, data));
    CHECK(quad == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("KEF fit: null data gives a small eta") {
  const DataSet data = ScoreModel::standard_gaussian(1).sample(2000, 42);
  const TiltedKernel kernel{BaseKernel::imq(1.0, 0.5), Weight::imq(Vector::Zero(1), 1.0, 0.5)};
  // L = 1: the basis is well conditioned and eta concentrates near 0; larger
  // L makes the monomial basis nearly collinear and the fit noise-dominated
  const FittedKEF fit1 = fit_kef_min_ksd(data, kernel, 1, 1e-6);
  CHECK(fit1.eta.lpNorm<Eigen::Infinity>() <= 0.1);

  const FittedKEF fit = fit_kef_min_ksd(data, kernel, 3, 1e-6);
  CHECK(fit.objective_value >= -1e-10);

  // stationarity of the ridge-regularized objective at eta_hat
  const KefNormalEquations eq = kef_normal_equations(
      [&] {
        DataSet x = data;
        x.col(0) = (x.col(0).array() - fit.center) / fit.scale;
        return x;
      }(),
      kernel, 3);
  const Vector grad =
      2.0 * ((eq.A + fit.ridge * Matrix::Identity(3, 3)) * fit.eta - eq.v);
  CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + fit.eta.norm()));
}

TEST_CASE("KEF fit: L = 1 matches a brute-force grid search") {
  const DataSet data = ScoreModel::gaussian((Vector(1) << 0.4).finished(),
                                            (Vector(1) << 1.0).finished())
                           .sample(40, 5);
  const TiltedKernel kernel{BaseKernel::imq(1.0, 0.5), Weight::imq(Vector::Zero(1), 1.0, 0.5)};
  const FittedKEF fit = fit_kef_min_ksd(data, kernel, 1, 0.0, /*standardize=*/false);

  double best_eta = 0.0, best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10000; ++i) {
    const double eta = -5.0 + i * 1e-3;
    const double val =
        ksd_v_stat(stein_gram(ScoreModel::kef((Vector(1) << eta).finished()), kernel, data));
    if (val < best_val) {
      best_val = val;
      best_eta = eta;
    }
  }
  CHECK(std::abs(fit.eta(0) - best_eta) <= 2e-3);
}

TEST_CASE("KEF fit: huge ridge shrinks eta to zero") {
  const DataSet data = ScoreModel::standard_gaussian(1).sample(200, 3);
  const TiltedKernel kernel{BaseKernel::imq(1.0, 0.5), Weight::imq(Vector::Zero(1), 1.0, 0.5)};
  const FittedKEF fit = fit_kef_min_ksd(data, kernel, 3, 1e9);
  CHECK(fit.eta.norm() <= 1e-6);
}

TEST_CASE("gibbs sampler: decoupled chain is i.i.d. normal") {
  Vector b(2);
  b << 1.0, -2.0;
  const ScoreModel m = ScoreModel::rbm(Matrix::Zero(2, 1), b, Vector::Zero(1));
  const DataSet x = rbm_gibbs_sample(m, 5000, 0, 1, 9);
  for (Eigen::Index j = 0; j < 2; ++j)
    CHECK(std::abs(x.col(j).mean() - b(j)) <= 4.0 / std::sqrt(5000.0));
}

TEST_CASE("gibbs sampler bookkeeping and determinism") {
  Matrix B(1, 1);
  B << 0.5;
  const ScoreModel m = ScoreModel::rbm(B, Vector::Zero(1), Vector::Zero(1));
  CHECK(rbm_gibbs_sample(m, 1, 0, 1, 4).rows() == 1);
  CHECK(rbm_gibbs_sample(m, 10, 5, 2, 4) == rbm_gibbs_sample(m, 10, 5, 2, 4));
  CHECK_THROWS_AS(rbm_gibbs_sample(m, 10, 0, 0, 4), DomainError);
  CHECK_THROWS_AS(rbm_gibbs_sample(ScoreModel::standard_gaussian(1), 1, 0, 1, 4), Unsupported);
}

TEST_CASE("gibbs sampler matches the exact 1-d marginal") {
  Matrix B(1, 1);
  B << 0.8;
  Vector b(1), c(1);
  b << 0.3;
  c << -0.2;
  const ScoreModel m = ScoreModel::rbm(B, b, c);

  // quadrature CDF of p(x) ~ exp(log_density_unnorm)
  const int grid = 8001;
  const double lo = -10.0, hi = 10.0, step = (hi - lo) / (grid - 1);
  std::vector<double> xs(grid), pdf(grid), cdf(grid);
  for (int i = 0; i < grid; ++i) {
    xs[i] = lo + i * step;
    pdf[i] = std::exp(m.log_density_unnorm((Vector(1) << xs[i]).finished()));
  }
  cdf[0] = 0.0;
  for (int i = 1; i < grid; ++i) cdf[i] = cdf[i - 1] + 0.5 * (pdf[i - 1] + pdf[i]) * step;
  for (int i = 0; i < grid; ++i) cdf[i] /= cdf[grid - 1];
  auto quad_cdf = [&](double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    const int i = static_cast<int>((x - lo) / step);
    const double frac = (x - xs[i]) / step;
    return cdf[i] * (1.0 - frac) + cdf[i + 1] * frac;
  };

  const Eigen::Index n = 100000;
  DataSet draws = rbm_gibbs_sample(m, n, 1000, 5, 31);
  std::vector<double> v(draws.col(0).data(), draws.col(0).data() + n);
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = quad_cdf(v[static_cast<std::size_t>(i)]);
    const double e_hi = static_cast<double>(i + 1) / static_cast<double>(n);
    const double e_lo = static_cast<double>(i) / static_cast<double>(n);
    ks = std::max({ks, std::abs(f - e_hi), std::abs(f - e_lo)});
  }
  CHECK(ks <= 0.02);

  // chain mean vs quadrature mean, within 3 standard errors
  double mean_q = 0.0;
  for (int i = 1; i < grid; ++i)
    mean_q += 0.5 * (pdf[i - 1] * xs[i - 1] + pdf[i] * xs[i]) * step;
  double norm_q = 0.0;
  for (int i = 1; i < grid; ++i) norm_q += 0.5 * (pdf[i - 1] + pdf[i]) * step;
  mean_q /= norm_q;
  const double se = std::sqrt(draws.col(0).squaredNorm() / n -
                              draws.col(0).mean() * draws.col(0).mean()) /
                    std::sqrt(static_cast<double>(n));
  CHECK(std::abs(draws.col(0).mean() - mean_q) <= 3.0 * se);
}

TEST_CASE("iid sampling") {
  const ScoreModel g = ScoreModel::standard_gaussian(2);
  const DataSet x = g.sample(10000, 13);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(x.col(j).mean()) <= 4.0 / 100.0);
  CHECK(g.sample(100, 5) == g.sample(100, 5));

  Vector w(2);
  w << 1.0, 0.0;
  Vector mu0 = Vector::Zero(1), mu1 = Vector::Constant(1, 100.0);
  const ScoreModel mix = ScoreModel::gaussian_mixture(w, {mu0, mu1});
  const DataSet y = mix.sample(500, 7);
  CHECK(y.col(0).maxCoeff() < 50.0);  // component 2 never drawn

  CHECK_THROWS_AS(ScoreModel::power_exponential(2.0, 1).sample(10, 0), Unsupported);
  CHECK_THROWS_AS(ScoreModel::kef(Vector::Ones(2)).sample(10, 0), Unsupported);
}

TEST_CASE("RBM and KEF parameters round-trip through JSON") {
  Rng rng = make_stream(27, 0);
  Matrix B(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i) B.row(i) = rand_vec(2, rng).transpose();
  const ScoreModel rbm = ScoreModel::rbm(B, rand_vec(3, rng), rand_vec(2, rng));
  const Json jr = model_to_json(rbm);
  CHECK(jr.contains("B"));
  CHECK(jr.contains("b"));
  CHECK(jr.contains("c"));
  const ScoreModel rbm2 = model_from_json(jr);
  CHECK(rbm2.rbm_B() == rbm.rbm_B());
  CHECK(rbm2.rbm_b() == rbm.rbm_b());
  CHECK(rbm2.rbm_c() == rbm.rbm_c());

  const ScoreModel kef = ScoreModel::kef(rand_vec(4, rng));
  const Json jk = model_to_json(kef);
  CHECK(jk.contains("eta"));
  CHECK(model_from_json(jk).kef_eta() == kef.kef_eta());

  CHECK_THROWS_AS(model_from_json(Json{{"type", "gaussian"}}), SchemaError);
  CHECK_THROWS_AS(model_from_json(Json{{"type", "nope"}}), SchemaError);
}
