#include "mfq/dde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfq/error.hpp"

namespace mfq {

namespace {

constexpr double kDivergenceBound = 1e9;

void check_finite_row(std::span<const double> row, const char* what) {
  for (double v : row) {
    if (!std::isfinite(v)) throw InputError(std::string(what) + " contains non-finite values");
  }
}

}  // namespace

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw InputError("matrix row has wrong width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

// ---------------------------------------------------------------------------
// HistorySpec

HistorySpec HistorySpec::constant(QueueState values) {
  HistorySpec h;
  h.values_ = Matrix(1, values.size());
  std::copy(values.begin(), values.end(), h.values_.row(0).begin());
  return h;
}

HistorySpec HistorySpec::sampled(std::vector<double> times, std::vector<QueueState> states) {
  if (times.size() < 2) throw InputError("sampled history needs at least two points");
  if (times.size() != states.size()) throw InputError("sampled history: times/states mismatch");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InputError("sampled history times must increase");
  }
  if (times.back() != 0.0) throw InputError("sampled history must end at t=0");

  HistorySpec h;
  h.times_ = std::move(times);
  for (const auto& s : states) {
    check_finite_row(s, "sampled history");
    h.values_.append_row(s);
  }

  // Finite-difference slopes: central inside, one-sided at the ends.
  const std::size_t m = h.times_.size();
  const std::size_t n = h.values_.cols();
  h.slopes_ = Matrix(m, n);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == m ? k : k + 1;
    const double dt = h.times_[hi] - h.times_[lo];
    for (std::size_t i = 0; i < n; ++i)
      h.slopes_(k, i) = (h.values_(hi, i) - h.values_(lo, i)) / dt;
  }
  return h;
}

double HistorySpec::start() const {
  return is_constant() ? -std::numeric_limits<double>::infinity() : times_.front();
}

void HistorySpec::validate(int n, double delta) const {
  if (dimension() != n)
    throw InputError("history has " + std::to_string(dimension()) + " queues, expected " +
                     std::to_string(n));
  for (double v : values_.data()) {
    if (!std::isfinite(v) || v < 0.0)
      throw InputError("history values must be finite and nonnegative");
  }
  if (!is_constant()) {
    const double tol = 1e-12 * std::max(1.0, delta);
    if (std::abs(times_.front() + delta) > tol)
      throw InputError("sampled history must span exactly [-delta, 0]");
  }
}

void HistorySpec::eval(double t, std::span<double> out) const {
  if (out.size() != values_.cols()) throw InputError("history eval: wrong output width");
  if (!(t <= 0.0)) throw RangeError("history is only defined for t <= 0");
  if (is_constant()) {
    std::copy_n(values_.row(0).begin(), out.size(), out.begin());
    return;
  }
  if (t < times_.front()) throw RangeError("time precedes the sampled history");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) {
    std::copy_n(values_.row(times_.size() - 1).begin(), out.size(), out.begin());
    return;
  }
  const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  const std::size_t lo = hi - 1;
  if (t == times_[lo]) {
    std::copy_n(values_.row(lo).begin(), out.size(), out.begin());
    return;
  }
  const double h = times_[hi] - times_[lo];
  const double s = (t - times_[lo]) / h;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = hermite(values_(lo, i), slopes_(lo, i), values_(hi, i), slopes_(hi, i), h, s);
}

QueueState HistorySpec::eval(double t) const {
  QueueState out(values_.cols());
  eval(t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Integration

double IntegratorConfig::resolved_step(double delta) const {
  double h = step > 0.0 ? step : (delta > 0.0 ? std::min(delta / 100.0, 0.01) : 0.01);
  if (!std::isfinite(h) || h <= 0.0) throw InputError("integrator step must be positive");
  if (delta > 0.0) {
    const double steps_per_delay = std::ceil(delta / h - 1e-9);
    h = delta / steps_per_delay;
  }
  return h;
}

namespace {

// Lagged-state lookup by grid index. The lag is an integer number of steps,
// so a stage at t_k + s*h reads the solution at t_{k-m} + s*h.
class LagReader {
public:
  LagReader(const HistorySpec& history, const Matrix& states, const Matrix& derivs, double h)
      : history_(history), states_(states), derivs_(derivs), h_(h) {}

  void read(long j, double s, std::span<double> out) const {
    if (j >= 0) {
      const auto u = static_cast<std::size_t>(j);
      if (s == 0.0) {
        std::copy_n(states_.row(u).begin(), out.size(), out.begin());
      } else if (s == 1.0) {
        std::copy_n(states_.row(u + 1).begin(), out.size(), out.begin());
      } else {
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = hermite(states_(u, i), derivs_(u, i), states_(u + 1, i), derivs_(u + 1, i),
                           h_, s);
      }
      return;
    }
    if (j == -1 && s == 1.0) {
      std::copy_n(states_.row(0).begin(), out.size(), out.begin());
      return;
    }
    const double t = (static_cast<double>(j) + s) * h_;
    history_.eval(std::max(t, history_.start()), out);
  }

private:
  const HistorySpec& history_;
  const Matrix& states_;
  const Matrix& derivs_;
  double h_;
};

void guard(std::span<const double> y, double t, bool require_nonnegative) {
  for (double v : y) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite state", t);
    if (std::abs(v) > kDivergenceBound) throw DivergenceError("state exceeded 1e9", t);
    if (require_nonnegative && v < 0.0) throw DivergenceError("negative queue length", t);
  }
}

}  // namespace

Trajectory integrate_delayed(const DelayedProblem& problem, const HistorySpec& history,
                             const IntegratorConfig& config) {
  if (problem.dimension < 1) throw InputError("system dimension must be >= 1");
  if (!problem.rhs) throw InputError("missing right-hand side");
  if (!std::isfinite(problem.delta) || problem.delta < 0.0)
    throw InputError("delta must be finite and >= 0");
  if (!std::isfinite(config.horizon) || config.horizon <= 0.0)
    throw InputError("integrator horizon must be positive");
  if (history.dimension() != problem.dimension) throw InputError("history dimension mismatch");
  if (!history.is_constant()) {
    const double tol = 1e-12 * std::max(1.0, problem.delta);
    if (history.start() > -problem.delta + tol)
      throw InputError("history does not cover [-delta, 0]");
  }

  const double h = config.resolved_step(problem.delta);
  const auto n = static_cast<std::size_t>(problem.dimension);
  const auto steps = static_cast<std::size_t>(std::ceil(config.horizon / h - 1e-9));
  const long lag = problem.delta > 0.0 ? std::lround(problem.delta / h) : 0;

  Trajectory out;
  out.params.n = problem.dimension;
  out.params.delta = problem.delta;
  out.step = h;
  out.history = history;
  out.times.reserve(steps + 1);
  out.states = Matrix(0, n);
  out.derivs = Matrix(0, n);
  out.states.reserve_rows(steps + 1);
  out.derivs.reserve_rows(steps + 1);

  std::vector<double> y = history.eval(0.0);
  guard(y, 0.0, problem.require_nonnegative);
  out.times.push_back(0.0);
  out.states.append_row(y);

  LagReader lagged(history, out.states, out.derivs, h);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n), yd(n);

  auto eval = [&](double t, std::span<const double> now, long k, double s,
                  std::span<double> dst) {
    if (lag == 0) {
      problem.rhs(t, now, now, dst);
    } else {
      lagged.read(k - lag, s, yd);
      problem.rhs(t, now, yd, dst);
    }
  };

  for (std::size_t k = 0; k < steps; ++k) {
    const auto kk = static_cast<long>(k);
    const double t = static_cast<double>(k) * h;

    eval(t, y, kk, 0.0, k1);
    out.derivs.append_row(k1);

    for (std::size_t i = 0; i < n; ++i) stage[i] = y[i] + 0.5 * h * k1[i];
    eval(t + 0.5 * h, stage, kk, 0.5, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = y[i] + 0.5 * h * k2[i];
    eval(t + 0.5 * h, stage, kk, 0.5, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = y[i] + h * k3[i];
    eval(t + h, stage, kk, 1.0, k4);

    for (std::size_t i = 0; i < n; ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    const double t_next = static_cast<double>(k + 1) * h;
    guard(y, t_next, problem.require_nonnegative);
    out.times.push_back(t_next);
    out.states.append_row(y);
  }

  // Derivative at the final node, for dense output and phase plots.
  eval(out.times.back(), y, static_cast<long>(steps), 0.0, k1);
  out.derivs.append_row(k1);

  if (!config.store_derivatives) out.derivs = Matrix();
  return out;
}

Trajectory integrate(const ModelParams& params, const ChoiceFunction& f,
                     const HistorySpec& history, const IntegratorConfig& config) {
  params.validate();
  history.validate(params.n, params.delta);

  DelayedProblem problem;
  problem.dimension = params.n;
  problem.delta = params.delta;
  problem.require_nonnegative = true;
  problem.rhs = [&params, &f](double, std::span<const double> now, std::span<const double> delayed,
                              std::span<double> dst) { drift(params, f, now, delayed, dst); };

  Trajectory traj = integrate_delayed(problem, history, config);
  traj.params = params;
  return traj;
}

QueueState history_eval(const HistorySpec& history, double t) { return history.eval(t); }

QueueState history_eval(const Trajectory& trajectory, double t) {
  if (trajectory.times.empty()) throw RangeError("empty trajectory");
  if (std::isnan(t)) throw RangeError("time is NaN");
  const double lower = -trajectory.params.delta;
  if (t < lower) throw RangeError("time precedes the history segment");
  if (t > trajectory.end_time()) throw RangeError("time is beyond the integrated horizon");
  if (t < 0.0) return trajectory.history.eval(t);

  const auto& times = trajectory.times;
  auto k = static_cast<std::size_t>(std::floor(t / trajectory.step));
  k = std::min(k, times.size() - 1);
  // floor() may land one cell off when t sits on a node; check both sides.
  if (k > 0 && t < times[k]) --k;
  if (k + 1 < times.size() && t >= times[k + 1]) ++k;

  const auto row = trajectory.states.row(k);
  if (t == times[k] || k + 1 == times.size()) return QueueState(row.begin(), row.end());

  if (!trajectory.has_derivatives())
    throw ConfigError("interpolation between nodes needs stored derivatives");
  const double h = times[k + 1] - times[k];
  const double s = (t - times[k]) / h;
  QueueState out(row.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = hermite(trajectory.states(k, i), trajectory.derivs(k, i),
                     trajectory.states(k + 1, i), trajectory.derivs(k + 1, i), h, s);
  return out;
}

std::vector<std::vector<PhasePoint>> phase_series(const Trajectory& trajectory) {
  if (!trajectory.has_derivatives()) throw ConfigError("trajectory has no stored derivatives");
  const std::size_t n = trajectory.states.cols();
  std::vector<std::vector<PhasePoint>> series(n);
  for (std::size_t i = 0; i < n; ++i) {
    series[i].reserve(trajectory.states.rows());
    for (std::size_t k = 0; k < trajectory.states.rows(); ++k)
      series[i].push_back({trajectory.states(k, i), trajectory.derivs(k, i)});
  }
  return series;
}

}  // namespace mfq
