#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mfq/model.hpp"

namespace mfq {

/// Dense row-major matrix of doubles; rows are time points, columns queues.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  void reserve_rows(std::size_t rows) { data_.reserve(rows * cols_); }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Initial segment of a DDE solution on [-delta, 0].
class HistorySpec {
public:
  /// Same state for every t <= 0.
  static HistorySpec constant(QueueState values);

  /// Samples on a strictly increasing grid ending at 0; interpolated with
  /// cubic Hermite using finite-difference slopes.
  static HistorySpec sampled(std::vector<double> times, std::vector<QueueState> states);

  bool is_constant() const { return times_.empty(); }
  int dimension() const { return static_cast<int>(values_.cols()); }

  /// Earliest time covered (-infinity for constant histories).
  double start() const;

  /// Throws InputError unless the history has `n` columns, nonnegative values
  /// and (when sampled) spans exactly [-delta, 0].
  void validate(int n, double delta) const;

  void eval(double t, std::span<double> out) const;
  QueueState eval(double t) const;

  const std::vector<double>& times() const { return times_; }
  const Matrix& values() const { return values_; }

  bool operator==(const HistorySpec&) const = default;

private:
  HistorySpec() = default;

  std::vector<double> times_;  // empty => constant
  Matrix values_;              // 1 row when constant
  Matrix slopes_;
};

struct IntegratorConfig {
  double step = 0.0;       ///< requested time step; <= 0 selects min(delta/100, 0.01)
  double horizon = 60.0;   ///< end time T
  bool store_derivatives = true;

  /// Step actually used: shrunk so that delta is an integer number of steps.
  double resolved_step(double delta) const;
};

/// Fixed-step solution on the grid t_k = k*h, k = 0..K with K*h >= T.
struct Trajectory {
  std::vector<double> times;
  Matrix states;
  Matrix derivs;  ///< empty unless derivatives were stored
  ModelParams params;
  HistorySpec history = HistorySpec::constant({});
  double step = 0.0;

  int dimension() const { return static_cast<int>(states.cols()); }
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
  bool has_derivatives() const { return !derivs.empty(); }
};

/// Right-hand side of a generic delayed system: out = F(t, y(t), y(t - delta)).
using DelayedRhs = std::function<void(double t, std::span<const double> now,
                                      std::span<const double> delayed, std::span<double> out)>;

struct DelayedProblem {
  int dimension = 1;
  double delta = 0.0;
  DelayedRhs rhs;
  bool require_nonnegative = false;
};

/// Method of steps with classical RK4; lagged states come from cubic Hermite
/// interpolation of the stored solution (or from the history for t < 0).
/// With delta == 0 this is a plain ODE solve with delayed == now.
/// Throws DivergenceError when a state leaves the finite range (|y| > 1e9) or,
/// with require_nonnegative, goes below zero.
Trajectory integrate_delayed(const DelayedProblem& problem, const HistorySpec& history,
                             const IntegratorConfig& config);

/// Integrates the mean-field queue DDE.
Trajectory integrate(const ModelParams& params, const ChoiceFunction& f,
                     const HistorySpec& history, const IntegratorConfig& config);

/// State at time t in [-delta, end]. Grid nodes return stored rows exactly.
QueueState history_eval(const Trajectory& trajectory, double t);
QueueState history_eval(const HistorySpec& history, double t);

struct PhasePoint {
  double q;
  double dq;
};

/// (q_i, dq_i/dt) pairs for every stored grid point, one series per queue.
std::vector<std::vector<PhasePoint>> phase_series(const Trajectory& trajectory);

/// Cubic Hermite interpolation on [0, h] at fraction s in [0, 1].
inline double hermite(double y0, double d0, double y1, double d1, double h, double s) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
}

}  // namespace mfq
