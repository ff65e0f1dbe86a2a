#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rksd/bootstrap.hpp"
#include "rksd/common.hpp"
#include "rksd/contam.hpp"
#include "rksd/hyptest.hpp"
#include "rksd/kernels.hpp"
#include "rksd/models.hpp"
#include "rksd/radius.hpp"
#include "rksd/serialize.hpp"
#include "rksd/stein.hpp"

namespace rksd {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Kernel recipe: base family, weight, and a bandwidth rule (fixed values or
// the median heuristic recomputed on each sample).
struct KernelSpec {
  enum class Base { IMQ, SquaredExponential, SumIMQ };

  Base base = Base::IMQ;
  double exponent = 0.5;
  bool half_bandwidth = true;  // sum_imq convention (1 + r/(2 lambda^2))^-b
  bool median_rule = true;
  std::vector<double> factors = {1.0};        // multipliers on lambda_med^2
  std::vector<double> bandwidths_sq = {1.0};  // used when median_rule is false
  Weight weight = Weight::unit();

  // Returns the kernel and the lambda (bandwidth, not squared) it ended up
  // using; median_rule recomputes the heuristic on `data`.
  std::pair<TiltedKernel, double> instantiate(const DataSet& data) const {
    std::vector<double> bw2;
    double lambda;
    if (median_rule) {
      const double med = median_heuristic(data);
      lambda = med;
      for (double f : factors) bw2.push_back(f * med * med);
    } else {
      bw2 = bandwidths_sq;
      lambda = std::sqrt(bandwidths_sq[0]);
    }
    BaseKernel bk = BaseKernel::imq(1.0, 0.5);
    switch (base) {
      case Base::IMQ:
        bk = BaseKernel::imq(bw2[0], exponent);
        break;
      case Base::SquaredExponential:
        bk = BaseKernel::squared_exponential(bw2[0]);
        break;
      case Base::SumIMQ:
        bk = BaseKernel::sum_imq(bw2, exponent, half_bandwidth);
        break;
    }
    return {TiltedKernel{bk, weight}, lambda};
  }
};

// tau_inf rule inside the harness: DataMax on each repetition's sample, or a
// fixed precomputed value (for studying that approximation).
struct TauRule {
  bool fixed = false;
  double value = 0.0;
};

struct SweepSpec {
  enum class Var { Eps, Z, Nu, Mu0, Gamma, N };
  Var var = Var::Eps;
  std::vector<double> grid;
  // optional: when sweeping n, set eps = n^(-eps_power) on a Huber alternative
  double eps_power = -1.0;
};

struct ExperimentConfig {
  ScoreModel model = ScoreModel::standard_gaussian(1);
  KernelSpec kernel;
  AlternativeSpec alternative;
  SweepSpec sweep;
  TestKind test_kind = TestKind::Standard;
  Estimator estimator = Estimator::V;
  BootScheme scheme = BootScheme::Weighted;
  RadiusSpec radius = RadiusSpec::explicit_theta(0.0);
  TauRule tau;
  double alpha = 0.05;
  int B = 500;
  Eigen::Index n = 500;
  int repetitions = 100;
  std::uint64_t base_seed = 0;
  std::string csv_path;
  std::string json_path;
};

struct CellResult {
  double value = 0.0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double theta = 0.0;   // mean over repetitions
  double tau = 0.0;     // mean over repetitions
  double lambda = 0.0;  // mean over repetitions
  Eigen::Index n = 0;
  int repetitions = 0;
  int failures = 0;
  std::string error;  // non-empty iff the cell was aborted
};

struct RejectionCurve {
  std::vector<CellResult> cells;
};

namespace detail {

// Cell state after applying one sweep value to the config template.
struct CellSetup {
  ScoreModel model;
  AlternativeSpec alternative;
  Eigen::Index n;
};

inline ScoreModel scale_mixture_means(const ScoreModel& m, double gamma) {
  std::vector<Vector> means;
  for (const auto& mu : m.mix_means()) means.push_back(gamma * mu);
  return ScoreModel::gaussian_mixture(m.mix_weights(), std::move(means));
}

inline CellSetup apply_sweep(const ExperimentConfig& cfg, double g) {
  CellSetup cell{cfg.model, cfg.alternative, cfg.n};
  switch (cfg.sweep.var) {
    case SweepSpec::Var::Eps:
      if (cell.alternative.kind != AlternativeSpec::Kind::Huber)
        throw Unsupported("eps sweep needs a huber alternative");
      cell.alternative.eps = g;
      break;
    case SweepSpec::Var::Z: {
      if (cell.alternative.kind != AlternativeSpec::Kind::Huber ||
          cell.alternative.contamination.kind != ContaminationSpec::Kind::DiracOutlier)
        throw Unsupported("z sweep needs a huber alternative with a dirac outlier");
      // the template z acts as a direction; the grid value scales it
      cell.alternative.contamination.z = g * cfg.alternative.contamination.z;
      break;
    }
    case SweepSpec::Var::Nu:
      if (cell.alternative.kind != AlternativeSpec::Kind::ScaledTData)
        throw Unsupported("nu sweep needs a scaled-t alternative");
      cell.alternative.contamination = ContaminationSpec::scaled_t(g);
      break;
    case SweepSpec::Var::Mu0:
      if (cell.alternative.kind != AlternativeSpec::Kind::MeanShift)
        throw Unsupported("mu0 sweep needs a mean-shift alternative");
      cell.alternative = AlternativeSpec::mean_shift(g, cfg.alternative.direction);
      break;
    case SweepSpec::Var::Gamma:
      if (cfg.model.kind() != ScoreModel::Kind::GaussianMixture ||
          cell.alternative.base.kind() != ScoreModel::Kind::GaussianMixture)
        throw Unsupported("gamma sweep needs mixture model and alternative");
      cell.model = scale_mixture_means(cfg.model, g);
      cell.alternative.base = scale_mixture_means(cfg.alternative.base, g);
      break;
    case SweepSpec::Var::N:
      cell.n = static_cast<Eigen::Index>(g);
      if (cell.n < 2) throw DomainError("n sweep values must be >= 2");
      if (cfg.sweep.eps_power > 0.0) {
        if (cell.alternative.kind != AlternativeSpec::Kind::Huber)
          throw Unsupported("eps_power needs a huber alternative");
        cell.alternative.eps = std::pow(static_cast<double>(cell.n), -cfg.sweep.eps_power);
      }
      break;
  }
  return cell;
}

}  // namespace detail

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) throw DomainError("repetitions must be >= 1");
  if (cfg.sweep.grid.empty()) throw DomainError("sweep grid must be nonempty");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (cfg.n < 2) throw DomainError("n must be >= 2");
  if (cfg.B < 1) throw DomainError("B must be >= 1");
}

// Runs the full sweep. Seeds are mix(base_seed, sorted-grid index, repetition),
// so any single cell can be replayed in isolation and permuting the grid order
// leaves every cell's numbers unchanged.
inline RejectionCurve run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<double> sorted = cfg.sweep.grid;
  std::sort(sorted.begin(), sorted.end());

  RejectionCurve curve;
  for (double g : cfg.sweep.grid) {
    const auto gi = static_cast<std::uint64_t>(
        std::lower_bound(sorted.begin(), sorted.end(), g) - sorted.begin());
    CellResult cell;
    cell.value = g;
    cell.repetitions = cfg.repetitions;

    detail::CellSetup setup;
    try {
      setup = detail::apply_sweep(cfg, g);
    } catch (const RksdError& e) {
      cell.error = e.what();
      cell.failures = cfg.repetitions;
      cell.rate = cell.ci_low = cell.ci_high =
          std::numeric_limits<double>::quiet_NaN();
      curve.cells.push_back(std::move(cell));
      continue;
    }
    cell.n = setup.n;

    int rejections = 0, completed = 0;
    double theta_sum = 0.0, tau_sum = 0.0, lambda_sum = 0.0;
    std::string first_error;
    for (int r = 0; r < cfg.repetitions; ++r) {
      const std::uint64_t seed = mix_seed(cfg.base_seed, gi, static_cast<std::uint64_t>(r));
      try {
        const DataSet data = sample_alternative(setup.alternative, setup.n, seed);
        auto [kernel, lambda] = cfg.kernel.instantiate(data);
        const SteinGram gram = stein_gram(setup.model, kernel, data);
        const double tau = cfg.tau.fixed ? cfg.tau.value : gram.diag_max;
        const double theta =
            cfg.test_kind == TestKind::Standard ? 0.0
                                                : resolve_theta(cfg.radius, tau, &setup.model);
        BootstrapConfig boot{cfg.scheme, cfg.B, mix_seed(seed, 0xb007u)};
        TestOutcome out;
        switch (cfg.test_kind) {
          case TestKind::Standard:
            out = standard_ksd_test_gram(gram, cfg.alpha, boot);
            break;
          case TestKind::RobustBootstrap:
            out = cfg.estimator == Estimator::V
                      ? robust_ksd_test_gram(gram, theta, cfg.alpha, boot)
                      : robust_ksd_test_ustat_gram(gram, theta, cfg.alpha, boot);
            break;
          case TestKind::RobustDev:
            out = robust_ksd_dev_test_gram(gram, theta, cfg.alpha, tau);
            break;
        }
        rejections += out.reject ? 1 : 0;
        theta_sum += theta;
        tau_sum += tau;
        lambda_sum += lambda;
        ++completed;
      } catch (const RksdError& e) {
        ++cell.failures;
        if (first_error.empty()) first_error = e.what();
      }
    }

    if (cell.failures > 0.05 * cfg.repetitions || completed == 0) {
      cell.error = "cell aborted (" + std::to_string(cell.failures) + "/" +
                   std::to_string(cfg.repetitions) + " repetitions failed): " + first_error;
      cell.rate = cell.ci_low = cell.ci_high =
          std::numeric_limits<double>::quiet_NaN();
    } else {
      const double R = static_cast<double>(completed);
      cell.rate = static_cast<double>(rejections) / R;
      const double half = 1.96 * std::sqrt(cell.rate * (1.0 - cell.rate) / R);
      cell.ci_low = std::max(0.0, cell.rate - half);
      cell.ci_high = std::min(1.0, cell.rate + half);
      cell.theta = theta_sum / R;
      cell.tau = tau_sum / R;
      cell.lambda = lambda_sum / R;
    }
    curve.cells.push_back(std::move(cell));
  }
  return curve;
}

// ---- config (de)serialization ----------------------------------------------

inline Json contamination_to_json(const ContaminationSpec& c) {
  Json j;
  switch (c.kind) {
    case ContaminationSpec::Kind::None:
      j["type"] = "none";
      break;
    case ContaminationSpec::Kind::DiracOutlier:
      j["type"] = "dirac";
      j["z"] = vec_to_json(c.z);
      break;
    case ContaminationSpec::Kind::GaussianNoise:
      j["type"] = "gaussian";
      j["mean"] = vec_to_json(c.mean);
      j["var"] = c.var;
      break;
    case ContaminationSpec::Kind::ScaledT:
      j["type"] = "scaled_t";
      j["nu"] = c.nu;
      break;
  }
  return j;
}

inline ContaminationSpec contamination_from_json(const Json& j) {
  detail::check_keys(j, "contamination", {"type", "z", "mean", "var", "nu"}, {"type"});
  const std::string type = j.at("type").get<std::string>();
  if (type == "none") return ContaminationSpec::none();
  if (type == "dirac") {
    detail::check_keys(j, "contamination.dirac", {"type", "z"}, {"z"});
    return ContaminationSpec::dirac(json_to_vec(j.at("z"), "contamination.z"));
  }
  if (type == "gaussian") {
    detail::check_keys(j, "contamination.gaussian", {"type", "mean", "var"}, {"mean", "var"});
    return ContaminationSpec::gaussian_noise(json_to_vec(j.at("mean"), "contamination.mean"),
                                             j.at("var").get<double>());
  }
  if (type == "scaled_t") {
    detail::check_keys(j, "contamination.scaled_t", {"type", "nu"}, {"nu"});
    return ContaminationSpec::scaled_t(j.at("nu").get<double>());
  }
  throw SchemaError("contamination.type: unknown '" + type + "'");
}

inline Json alternative_to_json(const AlternativeSpec& a) {
  Json j;
  switch (a.kind) {
    case AlternativeSpec::Kind::Huber:
      j["type"] = "huber";
      j["base"] = model_to_json(a.base);
      j["contamination"] = contamination_to_json(a.contamination);
      j["eps"] = a.eps;
      break;
    case AlternativeSpec::Kind::ScaledTData:
      j["type"] = "scaled_t";
      j["nu"] = a.contamination.nu;
      break;
    case AlternativeSpec::Kind::MeanShift:
      j["type"] = "mean_shift";
      j["mu0"] = a.mu0;
      j["direction"] = vec_to_json(a.direction);
      break;
    case AlternativeSpec::Kind::MixtureRatioPerturb:
      j["type"] = "mixture_ratio";
      j["weights"] = vec_to_json(a.base.mix_weights());
      break;
  }
  return j;
}

inline AlternativeSpec alternative_from_json(const Json& j, const ScoreModel& model) {
  detail::check_keys(j, "alternative",
                     {"type", "base", "contamination", "eps", "nu", "mu0", "direction",
                      "weights"},
                     {"type"});
  const std::string type = j.at("type").get<std::string>();
  if (type == "huber") {
    detail::check_keys(j, "alternative.huber", {"type", "base", "contamination", "eps"},
                       {"contamination"});
    const ScoreModel base = j.contains("base") ? model_from_json(j.at("base")) : model;
    const double eps = j.contains("eps") ? j.at("eps").get<double>() : 0.0;
    return AlternativeSpec::huber(base, contamination_from_json(j.at("contamination")), eps);
  }
  if (type == "scaled_t") {
    detail::check_keys(j, "alternative.scaled_t", {"type", "nu"}, {"nu"});
    return AlternativeSpec::scaled_t_data(j.at("nu").get<double>());
  }
  if (type == "mean_shift") {
    detail::check_keys(j, "alternative.mean_shift", {"type", "mu0", "direction"},
                       {"mu0", "direction"});
    return AlternativeSpec::mean_shift(j.at("mu0").get<double>(),
                                       json_to_vec(j.at("direction"), "alternative.direction"));
  }
  if (type == "mixture_ratio") {
    detail::check_keys(j, "alternative.mixture_ratio", {"type", "weights"}, {"weights"});
    return AlternativeSpec::mixture_ratio_perturb(
        model, json_to_vec(j.at("weights"), "alternative.weights"));
  }
  throw SchemaError("alternative.type: unknown '" + type + "'");
}

inline Json kernel_spec_to_json(const KernelSpec& k) {
  Json j;
  j["base"] = k.base == KernelSpec::Base::IMQ
                  ? "imq"
                  : (k.base == KernelSpec::Base::SquaredExponential ? "se" : "sum_imq");
  if (k.base != KernelSpec::Base::SquaredExponential) j["exponent"] = k.exponent;
  if (k.base == KernelSpec::Base::SumIMQ) j["half_bandwidth"] = k.half_bandwidth;
  if (k.median_rule) {
    j["bandwidth"] = "median";
    j["factors"] = Json(k.factors);
  } else {
    j["bandwidth"] = Json(k.bandwidths_sq);
  }
  j["weight"] = weight_to_json(k.weight);
  return j;
}

inline KernelSpec kernel_spec_from_json(const Json& j) {
  detail::check_keys(j, "kernel",
                     {"base", "exponent", "half_bandwidth", "bandwidth", "factors", "weight"},
                     {"base", "bandwidth"});
  KernelSpec k;
  const std::string base = j.at("base").get<std::string>();
  if (base == "imq")
    k.base = KernelSpec::Base::IMQ;
  else if (base == "se")
    k.base = KernelSpec::Base::SquaredExponential;
  else if (base == "sum_imq")
    k.base = KernelSpec::Base::SumIMQ;
  else
    throw SchemaError("kernel.base: unknown '" + base + "'");
  if (j.contains("exponent")) k.exponent = j.at("exponent").get<double>();
  if (j.contains("half_bandwidth")) k.half_bandwidth = j.at("half_bandwidth").get<bool>();
  const Json& bw = j.at("bandwidth");
  if (bw.is_string() && bw.get<std::string>() == "median") {
    k.median_rule = true;
    if (j.contains("factors")) {
      k.factors.clear();
      for (const auto& f : j.at("factors")) k.factors.push_back(f.get<double>());
    }
  } else if (bw.is_array()) {
    k.median_rule = false;
    k.bandwidths_sq.clear();
    for (const auto& b : bw) k.bandwidths_sq.push_back(b.get<double>());
  } else if (bw.is_number()) {
    k.median_rule = false;
    k.bandwidths_sq = {bw.get<double>()};
  } else {
    throw SchemaError("kernel.bandwidth: expected \"median\", a number, or an array");
  }
  if (j.contains("weight")) k.weight = weight_from_json(j.at("weight"));
  return k;
}

inline Json radius_to_json(const RadiusSpec& r) {
  Json j;
  switch (r.kind) {
    case RadiusSpec::Kind::Explicit:
      j["type"] = "explicit";
      break;
    case RadiusSpec::Kind::Huber:
      j["type"] = "huber";
      break;
    case RadiusSpec::Kind::DensityBand:
      j["type"] = "band";
      break;
    case RadiusSpec::Kind::ScaledTTail:
      j["type"] = "ttail";
      break;
  }
  j["value"] = r.value;
  return j;
}

inline RadiusSpec radius_from_json(const Json& j) {
  detail::check_keys(j, "radius", {"type", "value"}, {"type", "value"});
  const std::string type = j.at("type").get<std::string>();
  const double v = j.at("value").get<double>();
  if (type == "explicit") return RadiusSpec::explicit_theta(v);
  if (type == "huber") return RadiusSpec::huber(v);
  if (type == "band") return RadiusSpec::density_band(v);
  if (type == "ttail") return RadiusSpec::scaled_t_tail(v);
  throw SchemaError("radius.type: unknown '" + type + "'");
}

inline Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["model"] = model_to_json(cfg.model);
  j["kernel"] = kernel_spec_to_json(cfg.kernel);
  j["alternative"] = alternative_to_json(cfg.alternative);
  Json sweep;
  switch (cfg.sweep.var) {
    case SweepSpec::Var::Eps:
      sweep["variable"] = "eps";
      break;
    case SweepSpec::Var::Z:
      sweep["variable"] = "z";
      break;
    case SweepSpec::Var::Nu:
      sweep["variable"] = "nu";
      break;
    case SweepSpec::Var::Mu0:
      sweep["variable"] = "mu0";
      break;
    case SweepSpec::Var::Gamma:
      sweep["variable"] = "gamma";
      break;
    case SweepSpec::Var::N:
      sweep["variable"] = "n";
      break;
  }
  sweep["grid"] = Json(cfg.sweep.grid);
  if (cfg.sweep.eps_power > 0.0) sweep["eps_power"] = cfg.sweep.eps_power;
  j["sweep"] = sweep;
  Json test;
  test["kind"] = cfg.test_kind == TestKind::Standard
                     ? "standard"
                     : (cfg.test_kind == TestKind::RobustBootstrap ? "robust" : "robust_dev");
  test["estimator"] = cfg.estimator == Estimator::V ? "v" : "u";
  test["scheme"] = cfg.scheme == BootScheme::Weighted ? "weighted" : "wild";
  test["alpha"] = cfg.alpha;
  test["B"] = cfg.B;
  j["test"] = test;
  j["radius"] = radius_to_json(cfg.radius);
  Json tau;
  tau["method"] = cfg.tau.fixed ? "fixed" : "datamax";
  if (cfg.tau.fixed) tau["value"] = cfg.tau.value;
  j["tau"] = tau;
  j["n"] = cfg.n;
  j["repetitions"] = cfg.repetitions;
  j["base_seed"] = cfg.base_seed;
  Json out;
  out["csv"] = cfg.csv_path;
  out["json"] = cfg.json_path;
  j["output"] = out;
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  detail::check_keys(j, "config",
                     {"model", "kernel", "alternative", "sweep", "test", "radius", "tau", "n",
                      "repetitions", "base_seed", "output"},
                     {"model", "kernel", "alternative", "sweep", "test", "n", "repetitions",
                      "base_seed"});
  ExperimentConfig cfg;
  cfg.model = model_from_json(j.at("model"));
  cfg.kernel = kernel_spec_from_json(j.at("kernel"));
  cfg.alternative = alternative_from_json(j.at("alternative"), cfg.model);

  const Json& sweep = j.at("sweep");
  detail::check_keys(sweep, "sweep", {"variable", "grid", "eps_power"}, {"variable", "grid"});
  const std::string var = sweep.at("variable").get<std::string>();
  if (var == "eps")
    cfg.sweep.var = SweepSpec::Var::Eps;
  else if (var == "z")
    cfg.sweep.var = SweepSpec::Var::Z;
  else if (var == "nu")
    cfg.sweep.var = SweepSpec::Var::Nu;
  else if (var == "mu0")
    cfg.sweep.var = SweepSpec::Var::Mu0;
  else if (var == "gamma")
    cfg.sweep.var = SweepSpec::Var::Gamma;
  else if (var == "n")
    cfg.sweep.var = SweepSpec::Var::N;
  else
    throw SchemaError("sweep.variable: unknown '" + var + "'");
  for (const auto& g : sweep.at("grid")) cfg.sweep.grid.push_back(g.get<double>());
  if (sweep.contains("eps_power")) cfg.sweep.eps_power = sweep.at("eps_power").get<double>();

  const Json& test = j.at("test");
  detail::check_keys(test, "test", {"kind", "estimator", "scheme", "alpha", "B"},
                     {"kind", "alpha"});
  const std::string kind = test.at("kind").get<std::string>();
  if (kind == "standard")
    cfg.test_kind = TestKind::Standard;
  else if (kind == "robust")
    cfg.test_kind = TestKind::RobustBootstrap;
  else if (kind == "robust_dev")
    cfg.test_kind = TestKind::RobustDev;
  else
    throw SchemaError("test.kind: unknown '" + kind + "'");
  if (test.contains("estimator")) {
    const std::string est = test.at("estimator").get<std::string>();
    if (est == "v")
      cfg.estimator = Estimator::V;
    else if (est == "u")
      cfg.estimator = Estimator::U;
    else
      throw SchemaError("test.estimator: unknown '" + est + "'");
  }
  if (test.contains("scheme")) {
    const std::string s = test.at("scheme").get<std::string>();
    if (s == "weighted")
      cfg.scheme = BootScheme::Weighted;
    else if (s == "wild")
      cfg.scheme = BootScheme::Wild;
    else
      throw SchemaError("test.scheme: unknown '" + s + "'");
  }
  cfg.alpha = test.at("alpha").get<double>();
  if (test.contains("B")) cfg.B = test.at("B").get<int>();

  if (j.contains("radius")) cfg.radius = radius_from_json(j.at("radius"));
  if (j.contains("tau")) {
    const Json& tau = j.at("tau");
    detail::check_keys(tau, "tau", {"method", "value"}, {"method"});
    const std::string method = tau.at("method").get<std::string>();
    if (method == "fixed") {
      if (!tau.contains("value")) throw SchemaError("tau: missing key 'value'");
      cfg.tau.fixed = true;
      cfg.tau.value = tau.at("value").get<double>();
    } else if (method != "datamax") {
      throw SchemaError("tau.method: unknown '" + method + "'");
    }
  }
  cfg.n = j.at("n").get<Eigen::Index>();
  cfg.repetitions = j.at("repetitions").get<int>();
  cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("output")) {
    const Json& out = j.at("output");
    detail::check_keys(out, "output", {"csv", "json"}, {});
    if (out.contains("csv")) cfg.csv_path = out.at("csv").get<std::string>();
    if (out.contains("json")) cfg.json_path = out.at("json").get<std::string>();
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw IOError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- persistence -----------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace detail

inline void persist(const RejectionCurve& curve, const ExperimentConfig& cfg,
                    const std::string& csv_path, const std::string& json_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw IOError("cannot write: " + csv_path);
    out << "# ci: normal approximation rate +/- 1.96*sqrt(rate*(1-rate)/R), clamped to [0,1]\n";
    out << "value,rate,ci_low,ci_high,theta,tau,lambda,n,R\n";
    for (const CellResult& c : curve.cells) {
      out << detail::fmt17(c.value) << ',' << detail::fmt17(c.rate) << ','
          << detail::fmt17(c.ci_low) << ',' << detail::fmt17(c.ci_high) << ','
          << detail::fmt17(c.theta) << ',' << detail::fmt17(c.tau) << ','
          << detail::fmt17(c.lambda) << ',' << c.n << ',' << c.repetitions << '\n';
    }
  }
  Json j;
  j["version"] = kLibraryVersion;
  j["config"] = config_to_json(cfg);
  Json cells = Json::array();
  for (const CellResult& c : curve.cells) {
    Json cj;
    cj["value"] = c.value;
    cj["rate"] = c.rate;
    cj["ci_low"] = c.ci_low;
    cj["ci_high"] = c.ci_high;
    cj["theta"] = c.theta;
    cj["tau"] = c.tau;
    cj["lambda"] = c.lambda;
    cj["n"] = c.n;
    cj["repetitions"] = c.repetitions;
    cj["failures"] = c.failures;
    if (!c.error.empty()) cj["error"] = c.error;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  std::ofstream out(json_path);
  if (!out) throw IOError("cannot write: " + json_path);
  out << j.dump(2) << '\n';
}

// Reads back a CSV produced by persist (comment and header lines skipped).
inline RejectionCurve load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open: " + path);
  RejectionCurve curve;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("value,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> fields;
    while (std::getline(ss, cell, ',')) fields.push_back(cell);
    if (fields.size() != 9) throw IOError(path + ": expected 9 columns");
    CellResult c;
    c.value = std::stod(fields[0]);
    c.rate = std::stod(fields[1]);
    c.ci_low = std::stod(fields[2]);
    c.ci_high = std::stod(fields[3]);
    c.theta = std::stod(fields[4]);
    c.tau = std::stod(fields[5]);
    c.lambda = std::stod(fields[6]);
    c.n = std::stol(fields[7]);
    c.repetitions = std::stoi(fields[8]);
    curve.cells.push_back(std::move(c));
  }
  return curve;
}

}  // namespace rksd
