#include <doctest.h>

#include <cmath>
#include <vector>

#include "rksd/contam.hpp"
#include "rksd/kernels.hpp"
#include "rksd/models.hpp"
#include "rksd/stein.hpp"

using namespace rksd;

namespace {

// streaming V-statistic, avoids materializing the full gram at large n
double v_stat_streaming(const ScoreModel& model, const TiltedKernel& kernel,
                        const DataSet& data) {
  const SteinEvaluator ev(model, kernel);
  const Eigen::Index n = data.rows();
  std::vector<SteinEvaluator::Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pts.push_back(ev.prepare(data.row(i).transpose()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += ev.diag(pts[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = i + 1; j < n; ++j)
      acc += 2.0 * ev.eval(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
  }
  return acc / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(ContaminationSpec::gaussian_noise(Vector::Zero(1), 0.0), DomainError);
  CHECK_THROWS_AS(ContaminationSpec::scaled_t(2.0), DomainError);
  CHECK_THROWS_AS(AlternativeSpec::scaled_t_data(1.5), DomainError);
  CHECK_THROWS_AS(
      AlternativeSpec::huber(ScoreModel::standard_gaussian(1), ContaminationSpec::none(), 1.2),
      DomainError);
  Rng rng = make_stream(1, 0);
  CHECK_THROWS_AS(ContaminationSpec::none().draw(rng), Unsupported);
  CHECK_THROWS_AS(AlternativeSpec::mixture_ratio_perturb(ScoreModel::standard_gaussian(2),
                                                         Vector::Ones(2) / 2.0),
                  Unsupported);
}

TEST_CASE("eps = 0 reproduces the base sample bit for bit") {
  const ScoreModel base = ScoreModel::standard_gaussian(2);
  const AlternativeSpec spec =
      AlternativeSpec::huber(base, ContaminationSpec::dirac(Vector::Constant(2, 10.0)), 0.0);
  const DataSet a = sample_alternative(spec, 200, 33);
  const DataSet b = base.sample(200, 33);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("eps = 1 with a Dirac outlier gives constant rows") {
  const Vector z = (Vector(2) << 10.0, -3.0).finished();
  const AlternativeSpec spec =
      AlternativeSpec::huber(ScoreModel::standard_gaussian(2), ContaminationSpec::dirac(z), 1.0);
  const DataSet x = sample_alternative(spec, 100, 5);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    CHECK((x.row(i).transpose() - z).norm() == 0.0);
}

TEST_CASE("scaled-t data has unit variance") {
  const DataSet x = sample_alternative(AlternativeSpec::scaled_t_data(5.0), 100000, 17);
  const double mean = x.col(0).mean();
  const double var = (x.col(0).array() - mean).square().sum() / (x.rows() - 1);
  // Var of the sample variance for scaled t(5): (kurtosis 9) => se ~ sqrt(8/n)
  const double se = std::sqrt(8.0 / 1e5);
  CHECK(std::abs(var - 1.0) <= 3.0 * se);
}

TEST_CASE("Huber mixing fraction concentrates at eps") {
  const Vector z = Vector::Constant(1, 10.0);
  const AlternativeSpec spec =
      AlternativeSpec::huber(ScoreModel::standard_gaussian(1), ContaminationSpec::dirac(z), 0.3);
  const DataSet x = sample_alternative(spec, 100000, 9);
  const double frac = (x.col(0).array() == 10.0).cast<double>().sum() / 1e5;
  CHECK(std::abs(frac - 0.3) <= 4.0 * std::sqrt(0.3 * 0.7 / 1e5));
}

TEST_CASE("mean shift and ratio perturbation sample from their stated laws") {
  const AlternativeSpec ms = AlternativeSpec::mean_shift(2.0, Vector::Ones(1));
  const DataSet x = sample_alternative(ms, 50000, 3);
  CHECK(std::abs(x.col(0).mean() - 2.0) <= 4.0 / std::sqrt(5e4));

  const std::vector<Vector> means = {Vector::Constant(1, -3.0), Vector::Constant(1, 3.0)};
  const ScoreModel mix =
      ScoreModel::gaussian_mixture((Vector(2) << 0.5, 0.5).finished(), means);
  const AlternativeSpec rp =
      AlternativeSpec::mixture_ratio_perturb(mix, (Vector(2) << 0.9, 0.1).finished());
  const DataSet y = sample_alternative(rp, 50000, 4);
  const double upper = (y.col(0).array() > 0.0).cast<double>().sum() / 5e4;
  CHECK(std::abs(upper - 0.1) <= 4.0 * std::sqrt(0.1 * 0.9 / 5e4));
}

TEST_CASE("KSD of a Huber mixture scales linearly in eps") {
  const ScoreModel model = ScoreModel::standard_gaussian(1);
  const TiltedKernel k{BaseKernel::imq(1.0, 0.5), Weight::imq(Vector::Zero(1), 1.0, 0.5)};
  const ContaminationSpec r = ContaminationSpec::gaussian_noise(Vector::Constant(1, 3.0), 0.25);
  const Eigen::Index n = 20000;

  const AlternativeSpec pure = AlternativeSpec::huber(model, r, 1.0);
  const double d_r = std::sqrt(v_stat_streaming(model, k, sample_alternative(pure, n, 100)));
  for (double eps : {0.2, 0.4}) {
    const AlternativeSpec q = AlternativeSpec::huber(model, r, eps);
    const double d_q = std::sqrt(v_stat_streaming(model, k, sample_alternative(q, n, 100)));
    CHECK(d_q / d_r == doctest::Approx(eps).epsilon(0.10));
  }
}

TEST_CASE("perturb_fraction replaces the exact count") {
  const ScoreModel base = ScoreModel::standard_gaussian(1);
  const DataSet data = base.sample(500, 8);
  const ContaminationSpec z = ContaminationSpec::dirac(Vector::Constant(1, 10.0));

  const DataSet same = perturb_fraction(data, 0.0, z, 1);
  CHECK((same.array() == data.array()).all());

  const DataSet all = perturb_fraction(data, 1.0, z, 1);
  CHECK((all.array() == 10.0).all());

  auto count_diff = [&](const DataSet& out) {
    int c = 0;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      if (out.row(i) != data.row(i)) ++c;
    return c;
  };
  CHECK(count_diff(perturb_fraction(data, 0.1, z, 1)) == 50);

  // seed isolation: which rows change varies, the count does not
  const DataSet a = perturb_fraction(data, 0.1, z, 1);
  const DataSet b = perturb_fraction(data, 0.1, z, 2);
  CHECK(count_diff(b) == 50);
  CHECK_FALSE((a.array() == b.array()).all());

  CHECK_THROWS_AS(perturb_fraction(data, 1.5, z, 1), DomainError);
}

TEST_CASE("append_outliers") {
  const ScoreModel base = ScoreModel::standard_gaussian(1);
  const DataSet data = base.sample(100, 12);
  const ContaminationSpec spec =
      ContaminationSpec::gaussian_noise(Vector::Constant(1, 7.0), 0.01);

  const DataSet same = append_outliers(data, 0, spec, 1);
  CHECK(same.rows() == 100);
  CHECK((same.array() == data.array()).all());

  const DataSet doubled = append_outliers(data, 100, spec, 1);
  CHECK(doubled.rows() == 200);  // realized contamination ratio 1/2
  CHECK((doubled.topRows(100).array() == data.array()).all());

  const DataSet tail = append_outliers(data, 20, spec, 3);
  const double block_mean = tail.bottomRows(20).col(0).mean();
  CHECK(std::abs(block_mean - 7.0) <= 4.0 * 0.1 / std::sqrt(20.0));

  CHECK_THROWS_AS(append_outliers(data, -1, spec, 1), DomainError);
}
