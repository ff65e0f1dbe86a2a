// Command-line front end: run goodness-of-fit tests on CSV data, compute KSD
// and radius/tau diagnostics, and drive experiment sweeps from config files.
//
// Exit codes: 0 = success (a test decision is data, not an error),
//             1 = usage / config schema error,
//             2 = runtime or data error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rksd/rksd.hpp"

namespace {

using rksd::Json;

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(cell, &pos);
      if (pos != cell.size()) throw std::invalid_argument(cell);
      out.push_back(v);
    } catch (const std::exception&) {
      throw rksd::DomainError(what + ": not a number: " + cell);
    }
  }
  if (out.empty()) throw rksd::DomainError(what + ": empty list");
  return out;
}

// "kind:value", e.g. huber:0.05, explicit:0, band:0.1, ttail:5
rksd::RadiusSpec parse_theta_spec(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw rksd::DomainError("theta-spec must look like kind:value, got: " + s);
  const std::string kind = s.substr(0, colon);
  double v = 0.0;
  try {
    v = std::stod(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw rksd::DomainError("theta-spec value is not a number: " + s);
  }
  if (kind == "explicit") return rksd::RadiusSpec::explicit_theta(v);
  if (kind == "huber") return rksd::RadiusSpec::huber(v);
  if (kind == "band") return rksd::RadiusSpec::density_band(v);
  if (kind == "ttail") return rksd::RadiusSpec::scaled_t_tail(v);
  throw rksd::DomainError("unknown theta-spec kind: " + kind);
}

// Model argument: a preset string, a path to a JSON file, or inline JSON.
// Presets: gaussian[:d], mixture:k,d,gamma,seed, rbm:d,dh,seed, kef:L,
// power-exp:r,d. Dimension defaults to the data dimension where omitted.
rksd::ScoreModel parse_model(const std::string& arg, Eigen::Index data_dim) {
  if (!arg.empty() && arg[0] == '{') return rksd::model_from_json(Json::parse(arg));
  if (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json") {
    std::ifstream in(arg);
    if (!in) throw rksd::IOError("cannot open model file: " + arg);
    Json j;
    in >> j;
    return rksd::model_from_json(j);
  }
  std::string name = arg, params;
  const auto colon = arg.find(':');
  if (colon != std::string::npos) {
    name = arg.substr(0, colon);
    params = arg.substr(colon + 1);
  }
  if (name == "gaussian") {
    const Eigen::Index d =
        params.empty() ? data_dim : static_cast<Eigen::Index>(std::stoll(params));
    if (d < 1) throw rksd::DomainError("gaussian preset needs a dimension");
    return rksd::ScoreModel::standard_gaussian(d);
  }
  if (name == "mixture") {
    auto p = parse_double_list(params.empty() ? "5,2,1,0" : params, "mixture preset");
    if (p.size() != 4) throw rksd::DomainError("mixture preset wants k,d,gamma,seed");
    const auto k = static_cast<Eigen::Index>(p[0]);
    const auto d = static_cast<Eigen::Index>(p[1]);
    const double gamma = p[2];
    rksd::Rng rng = rksd::make_stream(static_cast<std::uint64_t>(p[3]), 0x316du);
    std::uniform_real_distribution<double> u01(0.0, 1.0), u22(-2.0, 2.0);
    rksd::Vector w(k);
    for (Eigen::Index j = 0; j < k; ++j) w(j) = u01(rng);
    w /= w.sum();
    std::vector<rksd::Vector> means;
    for (Eigen::Index j = 0; j < k; ++j) {
      rksd::Vector mu(d);
      for (Eigen::Index i = 0; i < d; ++i) mu(i) = gamma * u22(rng);
      means.push_back(mu);
    }
    return rksd::ScoreModel::gaussian_mixture(w, means);
  }
  if (name == "rbm") {
    auto p = parse_double_list(params.empty() ? "10,3,0" : params, "rbm preset");
    if (p.size() != 3) throw rksd::DomainError("rbm preset wants d,dh,seed");
    const auto d = static_cast<Eigen::Index>(p[0]);
    const auto dh = static_cast<Eigen::Index>(p[1]);
    rksd::Rng rng = rksd::make_stream(static_cast<std::uint64_t>(p[2]), 0x4b3du);
    std::normal_distribution<double> normal(0.0, 1.0);
    rksd::Matrix B(d, dh);
    rksd::Vector b(d), c(dh);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < dh; ++j) B(i, j) = normal(rng);
    for (Eigen::Index i = 0; i < d; ++i) b(i) = normal(rng);
    for (Eigen::Index j = 0; j < dh; ++j) c(j) = normal(rng);
    return rksd::ScoreModel::rbm(B, b, c);
  }
  if (name == "kef") {
    const auto L = params.empty() ? 5 : std::stoll(params);
    return rksd::ScoreModel::kef(rksd::Vector::Zero(L));
  }
  if (name == "power-exp") {
    auto p = parse_double_list(params.empty() ? "1,1" : params, "power-exp preset");
    if (p.size() != 2) throw rksd::DomainError("power-exp preset wants r,d");
    return rksd::ScoreModel::power_exponential(p[0], static_cast<Eigen::Index>(p[1]));
  }
  throw rksd::DomainError("unknown model preset: " + name);
}

struct KernelFlags {
  std::string base = "imq";
  double beta = 0.5;
  std::string bandwidth = "median";  // or comma-separated lambda^2 list
  std::string factors = "1";
  bool half_bandwidth = true;
  bool tilted = false;
  double weight_scale = 1.0;
  double weight_exponent = 0.5;

  rksd::KernelSpec to_spec(Eigen::Index dim) const {
    rksd::KernelSpec k;
    if (base == "imq")
      k.base = rksd::KernelSpec::Base::IMQ;
    else if (base == "se")
      k.base = rksd::KernelSpec::Base::SquaredExponential;
    else if (base == "sum_imq")
      k.base = rksd::KernelSpec::Base::SumIMQ;
    else
      throw rksd::DomainError("unknown kernel: " + base);
    k.exponent = beta;
    k.half_bandwidth = half_bandwidth;
    if (bandwidth == "median") {
      k.median_rule = true;
      k.factors = parse_double_list(factors, "--factors");
    } else {
      k.median_rule = false;
      k.bandwidths_sq = parse_double_list(bandwidth, "--bandwidth");
    }
    if (tilted)
      k.weight = rksd::Weight::imq(rksd::Vector::Zero(dim), weight_scale, weight_exponent);
    return k;
  }
};

void add_kernel_flags(CLI::App* cmd, KernelFlags& kf) {
  cmd->add_option("--kernel", kf.base, "Base kernel: imq, se, sum_imq")
      ->check(CLI::IsMember({"imq", "se", "sum_imq"}));
  cmd->add_option("--beta", kf.beta, "IMQ exponent b > 0");
  cmd->add_option("--bandwidth", kf.bandwidth,
                  "'median' or comma-separated bandwidth^2 values");
  cmd->add_option("--factors", kf.factors,
                  "multipliers on the median-heuristic bandwidth^2");
  cmd->add_flag("--half-bandwidth,!--no-half-bandwidth", kf.half_bandwidth,
                "sum_imq convention (1 + r/(2 lambda^2))^-b");
  cmd->add_flag("--tilted", kf.tilted, "tilt with w(x) = (1 + ||x||^2)^-1/2");
  cmd->add_option("--weight-scale", kf.weight_scale, "tilt weight scale");
  cmd->add_option("--weight-exponent", kf.weight_exponent, "tilt weight exponent");
}

std::uint64_t effective_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("ROBUST_KSD_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw rksd::DomainError("ROBUST_KSD_SEED is not an integer");
    }
  }
  return flag_seed;
}

void print_json(const Json& j) { std::cout << j.dump(2) << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel Stein discrepancy goodness-of-fit testing"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap internal parallelism (0 = all cores)");

  // ---- test ----
  auto* t = app.add_subcommand("test", "Run a goodness-of-fit test on CSV data");
  std::string t_data, t_model = "gaussian", t_theta = "explicit:0", t_estimator = "v",
              t_scheme = "weighted", t_dump;
  double t_alpha = 0.05;
  int t_B = 500;
  std::uint64_t t_seed = 0;
  bool t_dev = false;
  KernelFlags t_kf;
  t->add_option("--data", t_data, "headerless CSV, one row per observation")->required();
  t->add_option("--model", t_model, "model preset, JSON file, or inline JSON");
  t->add_option("--theta-spec", t_theta, "uncertainty radius: explicit:V, huber:V, band:V, ttail:V");
  t->add_option("--alpha", t_alpha, "test level");
  t->add_option("--B", t_B, "bootstrap sample size");
  t->add_option("--seed", t_seed, "RNG seed (ROBUST_KSD_SEED overrides)");
  t->add_option("--estimator", t_estimator)->check(CLI::IsMember({"v", "u"}));
  t->add_option("--scheme", t_scheme)->check(CLI::IsMember({"weighted", "wild"}));
  t->add_flag("--dev", t_dev, "use the finite-sample deviation threshold (no bootstrap)");
  t->add_option("--dump-gram", t_dump, "write the Stein Gram matrix to CSV");
  add_kernel_flags(t, t_kf);

  // ---- ksd ----
  auto* k = app.add_subcommand("ksd", "Print the KSD estimate for CSV data");
  std::string k_data, k_model = "gaussian", k_estimator = "v", k_dump;
  KernelFlags k_kf;
  k->add_option("--data", k_data)->required();
  k->add_option("--model", k_model);
  k->add_option("--estimator", k_estimator)->check(CLI::IsMember({"v", "u"}));
  k->add_option("--dump-gram", k_dump);
  add_kernel_flags(k, k_kf);

  // ---- tau ----
  auto* ta = app.add_subcommand("tau", "Estimate tau_inf = sup_x u_p(x,x)");
  std::string ta_data, ta_model = "gaussian", ta_method = "datamax";
  double ta_bound = 0.0;
  KernelFlags ta_kf;
  ta->add_option("--data", ta_data)->required();
  ta->add_option("--model", ta_model);
  ta->add_option("--method", ta_method)->check(CLI::IsMember({"datamax", "grid"}));
  ta->add_option("--bound", ta_bound, "grid method: search ||x - median||_inf <= bound");
  add_kernel_flags(ta, ta_kf);

  // ---- radius ----
  auto* r = app.add_subcommand("radius", "Resolve an uncertainty radius theta");
  std::string r_spec, r_data, r_model = "gaussian", r_method = "datamax";
  double r_tau = -1.0, r_bound = 0.0;
  KernelFlags r_kf;
  r->add_option("--spec", r_spec, "huber:V, band:V, ttail:V, explicit:V")->required();
  r->add_option("--tau", r_tau, "use this tau_inf value directly");
  r->add_option("--data", r_data, "estimate tau from this CSV instead");
  r->add_option("--model", r_model);
  r->add_option("--method", r_method)->check(CLI::IsMember({"datamax", "grid"}));
  r->add_option("--bound", r_bound);
  add_kernel_flags(r, r_kf);

  // ---- experiment ----
  auto* e = app.add_subcommand("experiment", "Run a sweep from a JSON config");
  std::string e_config, e_csv, e_json;
  e->add_option("--config", e_config)->required();
  e->add_option("--csv", e_csv, "override the config's CSV output path");
  e->add_option("--json", e_json, "override the config's JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 1;  // usage errors are always exit 1
  }
  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    if (*t) {
      const rksd::DataSet data = rksd::load_csv(t_data);
      const rksd::ScoreModel model = parse_model(t_model, data.cols());
      const rksd::RadiusSpec radius = parse_theta_spec(t_theta);
      auto [kernel, lambda] = t_kf.to_spec(data.cols()).instantiate(data);
      const rksd::SteinGram gram = rksd::stein_gram(model, kernel, data);
      if (!t_dump.empty()) rksd::dump_gram_csv(gram, t_dump);
      const double tau = gram.diag_max;
      const double theta = rksd::resolve_theta(radius, tau, &model);
      const std::uint64_t seed = effective_seed(t_seed);
      rksd::BootstrapConfig boot{
          t_scheme == "wild" ? rksd::BootScheme::Wild : rksd::BootScheme::Weighted, t_B, seed};
      rksd::TestOutcome out;
      if (t_dev)
        out = rksd::robust_ksd_dev_test_gram(gram, theta, t_alpha, tau);
      else if (t_estimator == "u")
        out = rksd::robust_ksd_test_ustat_gram(gram, theta, t_alpha, boot);
      else if (radius.kind == rksd::RadiusSpec::Kind::Explicit && radius.value == 0.0)
        out = rksd::standard_ksd_test_gram(gram, t_alpha, boot);
      else
        out = rksd::robust_ksd_test_gram(gram, theta, t_alpha, boot);
      Json j = rksd::outcome_to_json(out);
      j["tau_datamax"] = tau;
      j["lambda"] = lambda;
      j["n"] = data.rows();
      j["d"] = data.cols();
      j["version"] = rksd::kLibraryVersion;
      print_json(j);
      return 0;
    }
    if (*k) {
      const rksd::DataSet data = rksd::load_csv(k_data);
      const rksd::ScoreModel model = parse_model(k_model, data.cols());
      auto [kernel, lambda] = k_kf.to_spec(data.cols()).instantiate(data);
      const rksd::SteinGram gram = rksd::stein_gram(model, kernel, data);
      if (!k_dump.empty()) rksd::dump_gram_csv(gram, k_dump);
      const double d2 =
          k_estimator == "u" ? rksd::ksd_u_stat(gram) : rksd::ksd_v_stat(gram);
      Json j;
      j["ksd_squared"] = d2;
      j["ksd"] = std::sqrt(std::max(0.0, d2));
      j["estimator"] = k_estimator;
      j["lambda"] = lambda;
      j["n"] = data.rows();
      j["d"] = data.cols();
      j["version"] = rksd::kLibraryVersion;
      print_json(j);
      return 0;
    }
    if (*ta) {
      const rksd::DataSet data = rksd::load_csv(ta_data);
      const rksd::ScoreModel model = parse_model(ta_model, data.cols());
      auto [kernel, lambda] = ta_kf.to_spec(data.cols()).instantiate(data);
      const rksd::TauEstimate est = rksd::tau_inf(
          model, kernel, data,
          ta_method == "grid" ? rksd::TauMethod::GridLocal : rksd::TauMethod::DataMax, ta_bound);
      Json j;
      j["tau"] = est.value;
      j["method"] = ta_method;
      j["argmax"] = rksd::vec_to_json(est.argmax);
      if (ta_method == "grid") j["locality_bound"] = est.locality_bound;
      j["lambda"] = lambda;
      j["version"] = rksd::kLibraryVersion;
      print_json(j);
      return 0;
    }
    if (*r) {
      const rksd::RadiusSpec spec = parse_theta_spec(r_spec);
      Json j;
      double tau = r_tau;
      std::optional<rksd::ScoreModel> model;
      if (tau < 0.0) {
        if (r_data.empty())
          throw rksd::DomainError("radius needs either --tau or --data to estimate it");
        const rksd::DataSet data = rksd::load_csv(r_data);
        model = parse_model(r_model, data.cols());
        auto [kernel, lambda] = r_kf.to_spec(data.cols()).instantiate(data);
        const rksd::TauEstimate est = rksd::tau_inf(
            *model, kernel, data,
            r_method == "grid" ? rksd::TauMethod::GridLocal : rksd::TauMethod::DataMax, r_bound);
        tau = est.value;
        j["tau_method"] = r_method;
        j["lambda"] = lambda;
      } else {
        j["tau_method"] = "given";
      }
      if (spec.kind == rksd::RadiusSpec::Kind::ScaledTTail && !model)
        model = rksd::ScoreModel::standard_gaussian(1);
      j["theta"] = rksd::resolve_theta(spec, tau, model ? &*model : nullptr);
      j["tau"] = tau;
      j["spec"] = r_spec;
      j["version"] = rksd::kLibraryVersion;
      print_json(j);
      return 0;
    }
    if (*e) {
      const rksd::ExperimentConfig cfg = rksd::load_config(e_config);
      const std::string csv = e_csv.empty() ? cfg.csv_path : e_csv;
      const std::string json = e_json.empty() ? cfg.json_path : e_json;
      if (csv.empty() || json.empty())
        throw rksd::SchemaError("output: csv and json paths are required");
      const rksd::RejectionCurve curve = rksd::run_experiment(cfg);
      rksd::persist(curve, cfg, csv, json);
      std::cout << "wrote " << csv << " and " << json << "\n";
      for (const rksd::CellResult& c : curve.cells) {
        std::cout << "  value=" << c.value << " rate=" << c.rate << " [" << c.ci_low << ", "
                  << c.ci_high << "]";
        if (!c.error.empty()) std::cout << "  ERROR: " << c.error;
        std::cout << "\n";
      }
      return 0;
    }
  } catch (const rksd::SchemaError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  } catch (const rksd::RksdError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
