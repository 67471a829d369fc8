#pragma once

#include <stdexcept>
#include <string>

namespace anatgraph {

/// Shape or dimension mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Misuse of the autodiff graph (e.g. a second backward over a consumed graph).
class AutodiffError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid hyperparameter or configuration value. `path()` names the field when known.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : std::invalid_argument(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed or inconsistent sensor layout / relation rules.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN reached an operation that cannot propagate it meaningfully.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rows that should be probability distributions (or one-hot labels) are not.
class DistributionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Class or user label outside its declared range.
class LabelError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Input data does not match the declared CSV schema or manifest.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint file missing, malformed, or incompatible with the model.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment protocol violated (too few clusters, empty run, ...).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss term became NaN or infinite during training.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string& term, double value)
      : std::runtime_error("non-finite loss term " + term + " = " + std::to_string(value)),
        term_(term) {}
  NonFiniteLossError(const std::string& term, const std::string& message)
      : std::runtime_error(message), term_(term) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace anatgraph
