#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "rksd/harness.hpp"

using namespace rksd;

namespace {

ExperimentConfig huber_sweep_config() {
  ExperimentConfig cfg;
  cfg.model = ScoreModel::standard_gaussian(1);
  cfg.kernel.weight = Weight::imq(Vector::Zero(1), 1.0, 0.5);
  cfg.alternative = AlternativeSpec::huber(
      cfg.model, ContaminationSpec::dirac(Vector::Constant(1, 10.0)), 0.0);
  cfg.sweep.var = SweepSpec::Var::Eps;
  cfg.sweep.grid = {0.05, 0.5};
  cfg.test_kind = TestKind::RobustBootstrap;
  cfg.radius = RadiusSpec::huber(0.05);
  cfg.n = 200;
  cfg.B = 200;
  cfg.repetitions = 30;
  cfg.base_seed = 2024;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg = huber_sweep_config();
  cfg.repetitions = 0;
  CHECK_THROWS_AS(validate(cfg), DomainError);
  cfg = huber_sweep_config();
  cfg.sweep.grid.clear();
  CHECK_THROWS_AS(validate(cfg), DomainError);
  cfg = huber_sweep_config();
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(validate(cfg), DomainError);
  cfg = huber_sweep_config();
  cfg.n = 1;
  CHECK_THROWS_AS(validate(cfg), DomainError);
}

TEST_CASE("single repetition gives a degenerate confidence interval") {
  ExperimentConfig cfg = huber_sweep_config();
  cfg.repetitions = 1;
  cfg.sweep.grid = {0.5};
  const RejectionCurve curve = run_experiment(cfg);
  REQUIRE(curve.cells.size() == 1);
  const CellResult& c = curve.cells[0];
  CHECK((c.rate == 0.0 || c.rate == 1.0));
  CHECK(c.ci_low == c.rate);
  CHECK(c.ci_high == c.rate);
}

TEST_CASE("null cell rejection rate sits in the binomial band around alpha") {
  ExperimentConfig cfg = huber_sweep_config();
  cfg.test_kind = TestKind::Standard;
  cfg.sweep.grid = {0.0};
  cfg.n = 300;
  cfg.B = 500;
  cfg.repetitions = 200;
  const RejectionCurve curve = run_experiment(cfg);
  REQUIRE(curve.cells.size() == 1);
  CHECK(curve.cells[0].rate >= 0.02);
  CHECK(curve.cells[0].rate <= 0.10);
  CHECK(curve.cells[0].ci_low <= curve.cells[0].rate);
  CHECK(curve.cells[0].ci_high >= curve.cells[0].rate);
  CHECK(curve.cells[0].failures == 0);
}

TEST_CASE("grid order does not change any cell") {
  ExperimentConfig cfg = huber_sweep_config();
  cfg.sweep.grid = {0.1, 0.5, 0.3};
  cfg.n = 80;
  cfg.repetitions = 10;
  cfg.B = 100;
  const RejectionCurve a = run_experiment(cfg);
  cfg.sweep.grid = {0.5, 0.3, 0.1};
  const RejectionCurve b = run_experiment(cfg);
  for (const CellResult& ca : a.cells)
    for (const CellResult& cb : b.cells)
      if (ca.value == cb.value) {
        CHECK(ca.rate == cb.rate);
        CHECK(ca.theta == cb.theta);
        CHECK(ca.tau == cb.tau);
        CHECK(ca.lambda == cb.lambda);
      }
}

TEST_CASE("robust power increases from eps0 to gross contamination") {
  ExperimentConfig cfg = huber_sweep_config();
  const RejectionCurve curve = run_experiment(cfg);
  REQUIRE(curve.cells.size() == 2);
  CHECK(curve.cells[1].rate >= curve.cells[0].rate);
  CHECK(curve.cells[1].rate >= 0.8);  // gross contamination should be caught
}

TEST_CASE("persist round-trips and is byte-reproducible") {
  ExperimentConfig cfg = huber_sweep_config();
  cfg.n = 80;
  cfg.repetitions = 10;
  cfg.B = 100;
  const RejectionCurve curve = run_experiment(cfg);

  persist(curve, cfg, "harness_a.csv", "harness_a.json");
  const RejectionCurve again = run_experiment(cfg);
  persist(again, cfg, "harness_b.csv", "harness_b.json");
  CHECK(slurp("harness_a.csv") == slurp("harness_b.csv"));
  CHECK(slurp("harness_a.json") == slurp("harness_b.json"));

  const RejectionCurve loaded = load_curve_csv("harness_a.csv");
  REQUIRE(loaded.cells.size() == curve.cells.size());
  for (std::size_t i = 0; i < loaded.cells.size(); ++i) {
    CHECK(loaded.cells[i].value == curve.cells[i].value);
    CHECK(loaded.cells[i].rate == curve.cells[i].rate);
    CHECK(loaded.cells[i].ci_low == curve.cells[i].ci_low);
    CHECK(loaded.cells[i].ci_high == curve.cells[i].ci_high);
    CHECK(loaded.cells[i].theta == curve.cells[i].theta);
    CHECK(loaded.cells[i].tau == curve.cells[i].tau);
    CHECK(loaded.cells[i].lambda == curve.cells[i].lambda);
  }

  CHECK_THROWS_AS(load_curve_csv("does_not_exist.csv"), IOError);
}

TEST_CASE("config JSON round-trip is the identity on canonical form") {
  const ExperimentConfig cfg = huber_sweep_config();
  const Json j = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
}

TEST_CASE("schema errors name the offending key") {
  Json j = config_to_json(huber_sweep_config());
  j["test"].erase("alpha");
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("alpha"), SchemaError);

  Json j2 = config_to_json(huber_sweep_config());
  j2["bogus_key"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(j2), doctest::Contains("bogus_key"), SchemaError);
}
