#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mfq/dde.hpp"
#include "mfq/model.hpp"

namespace mfq {

/// Name of the pseudo-random engine behind simulate_path (recorded in outputs).
inline constexpr std::string_view kGeneratorName = "mt19937_64";

struct SimConfig {
  int eta = 100;              ///< scaling: jumps are +-1/eta, rates are multiplied by eta
  std::uint64_t seed = 1;
  double horizon = 10.0;
  HistorySpec history = HistorySpec::constant({});
  /// Recompute every rate from scratch at each epoch and compare with the
  /// incrementally maintained totals (relative 1e-9). Slow; for tests.
  bool check_rates = false;
};

enum class EventKind : std::uint8_t { Arrival, Service, Abandonment };

std::string_view to_string(EventKind kind);

struct Event {
  double time;
  EventKind kind;
  int queue;  ///< 0-based
};

/// One realization of the scaled queue network on [0, T].
struct SamplePath {
  ModelParams params;
  int eta = 1;
  double horizon = 0.0;
  HistorySpec initial_segment = HistorySpec::constant({});
  QueueState initial_state;      ///< state at t = 0, on the 1/eta lattice
  std::vector<Event> events;     ///< increasing times in (0, T]
  Matrix states;                 ///< post-jump state per event

  int dimension() const { return static_cast<int>(initial_state.size()); }
};

/// Exact simulation with piecewise-constant rates:
///   arrival_i = eta lambda f(x_i(t - delta)),
///   service_i = eta mu min(q_i, c),
///   abandon_i = eta beta (q_i - c)^+.
/// Every jump at time s schedules a re-rate of the arrival intensities at
/// s + delta; exponential clocks are redrawn at each such epoch. The segment on
/// [-delta, 0) is deterministic and read from the history (step-wise between
/// the samples of a sampled history). Identical inputs give identical paths.
SamplePath simulate_path(const ModelParams& params, const ChoiceFunction& f,
                         const SimConfig& config);

/// Right-continuous lookup of the path state at each grid time in [0, T].
Matrix path_on_grid(const SamplePath& path, std::span<const double> grid);

/// sup over trajectory grid times t <= T of max_i |Q_i(t) - q_i(t)|.
double fluid_gap(const SamplePath& path, const Trajectory& trajectory);

/// Largest absolute entrywise difference of two equally shaped matrices.
double max_abs_gap(const Matrix& a, const Matrix& b);

}  // namespace mfq
