#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "rksd/common.hpp"
#include "rksd/hyptest.hpp"
#include "rksd/kernels.hpp"
#include "rksd/models.hpp"

namespace rksd {

// ordered_json keeps insertion order, so serialized output has stable keys.
using Json = nlohmann::ordered_json;

inline Json vec_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector json_to_vec(const Json& j, const std::string& key) {
  if (!j.is_array()) throw SchemaError(key + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(key + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

// Matrices are arrays of rows (row-major).
inline Json mat_to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_to_json(m.row(i).transpose()));
  return a;
}

inline Matrix json_to_mat(const Json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw SchemaError(key + ": expected a non-empty array of rows");
  const Vector r0 = json_to_vec(j[0], key);
  Matrix m(static_cast<Eigen::Index>(j.size()), r0.size());
  m.row(0) = r0.transpose();
  for (std::size_t i = 1; i < j.size(); ++i) {
    const Vector r = json_to_vec(j[i], key);
    if (r.size() != r0.size()) throw SchemaError(key + ": ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

namespace detail {

// Strict schema check: every present key must be allowed, every required key
// must be present. Throws SchemaError naming the offending key.
inline void check_keys(const Json& j, const std::string& where,
                       std::initializer_list<const char*> allowed,
                       std::initializer_list<const char*> required) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end())
      throw SchemaError(where + ": unknown key '" + item.key() + "'");
  }
  for (const char* k : required)
    if (!j.contains(k)) throw SchemaError(where + ": missing key '" + k + "'");
}

}  // namespace detail

inline Json model_to_json(const ScoreModel& m) {
  Json j;
  switch (m.kind()) {
    case ScoreModel::Kind::Gaussian:
      j["type"] = "gaussian";
      j["mean"] = vec_to_json(m.mean());
      j["variances"] = vec_to_json(m.variances());
      break;
    case ScoreModel::Kind::GaussianMixture: {
      j["type"] = "mixture";
      j["weights"] = vec_to_json(m.mix_weights());
      Json means = Json::array();
      for (const auto& mu : m.mix_means()) means.push_back(vec_to_json(mu));
      j["means"] = means;
      break;
    }
    case ScoreModel::Kind::RBM:
      j["type"] = "rbm";
      j["B"] = mat_to_json(m.rbm_B());
      j["b"] = vec_to_json(m.rbm_b());
      j["c"] = vec_to_json(m.rbm_c());
      break;
    case ScoreModel::Kind::PowerExponential:
      j["type"] = "power_exponential";
      j["r"] = m.power_r();
      j["dim"] = m.dim();
      break;
    case ScoreModel::Kind::KEF:
      j["type"] = "kef";
      j["eta"] = vec_to_json(m.kef_eta());
      break;
  }
  return j;
}

inline ScoreModel model_from_json(const Json& j) {
  detail::check_keys(j, "model", {"type", "mean", "variances", "weights", "means", "B", "b", "c",
                                  "r", "dim", "eta"},
                     {"type"});
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    detail::check_keys(j, "model.gaussian", {"type", "mean", "variances", "dim"}, {});
    if (j.contains("dim")) {
      // shorthand for the standard gaussian
      detail::check_keys(j, "model.gaussian", {"type", "dim"}, {"dim"});
      return ScoreModel::standard_gaussian(j.at("dim").get<Eigen::Index>());
    }
    detail::check_keys(j, "model.gaussian", {"type", "mean", "variances"},
                       {"mean", "variances"});
    return ScoreModel::gaussian(json_to_vec(j.at("mean"), "model.mean"),
                                json_to_vec(j.at("variances"), "model.variances"));
  }
  if (type == "mixture") {
    detail::check_keys(j, "model.mixture", {"type", "weights", "means"}, {"weights", "means"});
    std::vector<Vector> means;
    for (const auto& mu : j.at("means")) means.push_back(json_to_vec(mu, "model.means"));
    return ScoreModel::gaussian_mixture(json_to_vec(j.at("weights"), "model.weights"),
                                        std::move(means));
  }
  if (type == "rbm") {
    detail::check_keys(j, "model.rbm", {"type", "B", "b", "c"}, {"B", "b", "c"});
    return ScoreModel::rbm(json_to_mat(j.at("B"), "model.B"), json_to_vec(j.at("b"), "model.b"),
                           json_to_vec(j.at("c"), "model.c"));
  }
  if (type == "power_exponential") {
    detail::check_keys(j, "model.power_exponential", {"type", "r", "dim"}, {"r", "dim"});
    return ScoreModel::power_exponential(j.at("r").get<double>(),
                                         j.at("dim").get<Eigen::Index>());
  }
  if (type == "kef") {
    detail::check_keys(j, "model.kef", {"type", "eta"}, {"eta"});
    return ScoreModel::kef(json_to_vec(j.at("eta"), "model.eta"));
  }
  throw SchemaError("model.type: unknown model '" + type + "'");
}

inline Json weight_to_json(const Weight& w) {
  Json j;
  if (w.kind() == Weight::Kind::Unit) {
    j["type"] = "unit";
  } else {
    j["type"] = "imq";
    j["center"] = vec_to_json(w.center());
    j["scale"] = w.scale();
    j["exponent"] = w.exponent();
  }
  return j;
}

inline Weight weight_from_json(const Json& j) {
  detail::check_keys(j, "weight", {"type", "center", "scale", "exponent"}, {"type"});
  const std::string type = j.at("type").get<std::string>();
  if (type == "unit") return Weight::unit();
  if (type == "imq") {
    detail::check_keys(j, "weight.imq", {"type", "center", "scale", "exponent"},
                       {"center", "scale", "exponent"});
    return Weight::imq(json_to_vec(j.at("center"), "weight.center"),
                       j.at("scale").get<double>(), j.at("exponent").get<double>());
  }
  throw SchemaError("weight.type: unknown weight '" + type + "'");
}

inline Json base_kernel_to_json(const BaseKernel& k) {
  Json j;
  switch (k.kind()) {
    case BaseKernel::Kind::IMQ:
      j["type"] = "imq";
      j["bandwidth2"] = k.bandwidths_sq()[0];
      j["exponent"] = k.exponent();
      break;
    case BaseKernel::Kind::SquaredExponential:
      j["type"] = "se";
      j["bandwidth2"] = k.bandwidths_sq()[0];
      break;
    case BaseKernel::Kind::SumIMQ:
      j["type"] = "sum_imq";
      j["bandwidth2"] = Json(k.bandwidths_sq());
      j["exponent"] = k.exponent();
      j["half_bandwidth"] = k.half_bandwidth();
      break;
  }
  return j;
}

inline Json kernel_to_json(const TiltedKernel& k) {
  Json j;
  j["base"] = base_kernel_to_json(k.base);
  j["weight"] = weight_to_json(k.weight);
  return j;
}

inline Json outcome_to_json(const TestOutcome& o) {
  Json j;
  j["test_kind"] = o.test_kind == TestKind::Standard
                       ? "standard"
                       : (o.test_kind == TestKind::RobustBootstrap ? "robust" : "robust_dev");
  j["estimator"] = o.estimator == Estimator::V ? "v" : "u";
  j["statistic"] = o.statistic;
  j["threshold"] = o.threshold;
  j["threshold_defined"] = o.threshold_defined;
  j["reject"] = o.reject;
  j["theta"] = o.theta;
  j["alpha"] = o.alpha;
  j["B"] = o.B;
  j["seed"] = o.seed;
  return j;
}

}  // namespace rksd
