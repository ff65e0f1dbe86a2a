#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace rksd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// All recoverable failures are reported through exceptions derived from
// RksdError so callers (and the CLI) can distinguish them from bugs.
class RksdError : public std::runtime_error {
 public:
  explicit RksdError(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateSample : public RksdError {
 public:
  explicit DegenerateSample(const std::string& msg) : RksdError(msg) {}
};

class SingularPoint : public RksdError {
 public:
  explicit SingularPoint(const std::string& msg) : RksdError(msg) {}
};

class Unavailable : public RksdError {
 public:
  explicit Unavailable(const std::string& msg) : RksdError(msg) {}
};

class Unsupported : public RksdError {
 public:
  explicit Unsupported(const std::string& msg) : RksdError(msg) {}
};

class IllConditioned : public RksdError {
 public:
  explicit IllConditioned(const std::string& msg) : RksdError(msg) {}
};

class NegativeVStat : public RksdError {
 public:
  explicit NegativeVStat(const std::string& msg) : RksdError(msg) {}
};

class TooFewPoints : public RksdError {
 public:
  explicit TooFewPoints(const std::string& msg) : RksdError(msg) {}
};

class EmptyData : public RksdError {
 public:
  explicit EmptyData(const std::string& msg) : RksdError(msg) {}
};

class BadGrid : public RksdError {
 public:
  explicit BadGrid(const std::string& msg) : RksdError(msg) {}
};

class BadWeights : public RksdError {
 public:
  explicit BadWeights(const std::string& msg) : RksdError(msg) {}
};

class ModelMismatch : public RksdError {
 public:
  explicit ModelMismatch(const std::string& msg) : RksdError(msg) {}
};

class DomainError : public RksdError {
 public:
  explicit DomainError(const std::string& msg) : RksdError(msg) {}
};

class RootCountError : public RksdError {
 public:
  explicit RootCountError(const std::string& msg) : RksdError(msg) {}
};

class BadSimplex : public RksdError {
 public:
  explicit BadSimplex(const std::string& msg) : RksdError(msg) {}
};

class SchemaError : public RksdError {
 public:
  explicit SchemaError(const std::string& key)
      : RksdError("config schema error: " + key), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class IOError : public RksdError {
 public:
  explicit IOError(const std::string& msg) : RksdError(msg) {}
};

}  // namespace rksd
