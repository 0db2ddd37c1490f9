#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfq/dde.hpp"
#include "mfq/model.hpp"

namespace mfq::cli {

using nlohmann::json;

struct ChoiceSpec {
  std::string type = "logistic";
  double gamma = 1.0;
  double theta = 1.0;
  double f0 = 0.5;
  double fprime0 = -0.25;

  /// Custom choices from a config carry only f(0) and f'(0); they are
  /// evaluated as the clamped linearization max(0, f0 + f'(0) x).
  ChoiceFunction make() const;
};

struct HistoryBlock {
  std::string type = "equilibrium";  ///< "constant" or "equilibrium"
  QueueState values;                 ///< for "constant"
  double perturbation = 0.0;         ///< for "equilibrium": q* -/+ perturbation
};

struct StochasticBlock {
  int eta = 100;
  std::vector<std::uint64_t> seeds{1};
};

struct SweepBlock {
  double c_min = 0.0;
  double c_max = 0.0;
  int steps = 21;
  double tol = 1e-3;

  std::vector<double> c_values() const;
};

struct FindBlock {
  std::optional<double> lo;
  std::optional<double> hi;
  double tol = 1e-3;
};

struct ExperimentConfig {
  ModelParams model;
  ChoiceSpec choice;
  HistoryBlock history;
  IntegratorConfig integrator;
  std::optional<StochasticBlock> stochastic;
  std::optional<SweepBlock> sweep;
  FindBlock find;
  json source;  ///< the JSON this config was parsed from (echoed into outputs)

  HistorySpec make_history(const ChoiceFunction& f) const;
};

/// Parses and validates one experiment. Throws InputError with a readable
/// message on missing or malformed fields.
ExperimentConfig parse_config(const json& doc);

/// A document with a "panels" array expands to one config per panel, each the
/// base document (without "panels") merge-patched with the panel object.
std::vector<json> expand_panels(const json& doc);

}  // namespace mfq::cli
