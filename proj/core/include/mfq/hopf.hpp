#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfq/dde.hpp"
#include "mfq/model.hpp"

namespace mfq {

enum class Oscillation { Decaying, Sustained };

std::string_view to_string(Oscillation o);

struct OscillationVerdict {
  Oscillation classification = Oscillation::Decaying;
  double terminal_amplitude = 0.0;  ///< peak-to-peak of queue 1 on [3T/4, T]
  double growth_ratio = 0.0;        ///< terminal / amplitude on [T/2, 3T/4]
  double horizon = 0.0;             ///< T actually integrated
};

/// Tunables of the two-window amplitude classifier.
struct ClassifierOptions {
  double margin = 0.02;           ///< Sustained iff growth_ratio >= 1 - margin
  double amplitude_floor = 0.5;   ///< Decaying needs terminal < floor * perturbation
  double step = 0.0;              ///< <= 0: min(delta/100, 0.01)
  double horizon = 0.0;           ///< <= 0: max(60, 30 delta)
  /// A run that is shrinking (growth < 1 - margin) but still above the floor is
  /// re-integrated with a doubled horizon, at most this many times; if it is
  /// still ambiguous it is reported as Decaying.
  int max_extensions = 3;
  /// Constant history to start from instead of q* -/+ perturbation. The
  /// perturbation still scales the amplitude thresholds.
  std::optional<QueueState> history;
};

/// Integrates from the constant history q* -/+ perturbation (alternating
/// across queues) and classifies the late-time oscillation of queue 1.
OscillationVerdict classify_delay(const ModelParams& params, const ChoiceFunction& f,
                                  double delta, double perturbation,
                                  const ClassifierOptions& options = {});

/// Default perturbation: 0.002 q* (0.01 around q* = 5).
double default_perturbation(const ModelParams& params, const ChoiceFunction& f);

struct FindOptions {
  double tol = 1e-3;
  int max_iterations = 60;
  std::optional<double> perturbation;  ///< default_perturbation() when empty
  ClassifierOptions classifier;
};

/// Bisection on delta between a Decaying lower end and a Sustained upper end.
/// Throws BracketError when the ends do not straddle the switch and
/// ConvergenceError when max_iterations is exhausted.
double find_critical_delay(const ModelParams& params, const ChoiceFunction& f,
                           std::pair<double, double> bracket, const FindOptions& options = {});

struct SweepResult {
  std::vector<double> c_values;
  std::vector<std::optional<double>> delta_cr_numeric;
  std::vector<std::optional<double>> delta_cr_closed_form;  ///< empty at the boundary
  std::vector<std::string> errors;                          ///< empty string on success
};

/// Numeric and closed-form critical delay for each c. Brackets are
/// [0.25, 4] x the closed-form value; boundary entries use the mean of their
/// nearest numeric neighbours. Per-c failures are recorded, not thrown.
SweepResult sweep_c(const ModelParams& params_template, const ChoiceFunction& f,
                    const std::vector<double>& c_values, const FindOptions& options = {});

}  // namespace mfq
