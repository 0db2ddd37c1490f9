#include "mfq/hopf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mfq/error.hpp"
#include "mfq/stability.hpp"

namespace mfq {

std::string_view to_string(Oscillation o) {
  return o == Oscillation::Decaying ? "decaying" : "sustained";
}

double default_perturbation(const ModelParams& params, const ChoiceFunction& f) {
  return 0.002 * equilibrium(params, f);
}

namespace {

// Amplitudes below this fraction of the perturbation are rounding noise around
// a converged equilibrium; their ratio carries no information.
constexpr double kNoiseFraction = 1e-6;

double peak_to_peak(const Trajectory& traj, double from, double to) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    if (t < from || t > to) continue;
    lo = std::min(lo, traj.states(k, 0));
    hi = std::max(hi, traj.states(k, 0));
  }
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace

OscillationVerdict classify_delay(const ModelParams& params, const ChoiceFunction& f,
                                  double delta, double perturbation,
                                  const ClassifierOptions& options) {
  if (!(perturbation > 0.0) || !std::isfinite(perturbation))
    throw InputError("perturbation must be positive");
  ModelParams run = params;
  run.delta = delta;
  run.validate();

  const double q_star = equilibrium(run, f);
  QueueState start(static_cast<std::size_t>(run.n));
  for (std::size_t i = 0; i < start.size(); ++i)
    start[i] = q_star + (i % 2 == 0 ? -perturbation : perturbation);
  const HistorySpec history = HistorySpec::constant(options.history.value_or(start));

  IntegratorConfig config;
  config.step = options.step;
  config.horizon = options.horizon > 0.0 ? options.horizon : std::max(60.0, 30.0 * delta);
  config.store_derivatives = false;

  for (int attempt = 0;; ++attempt) {
    const Trajectory traj = integrate(run, f, history, config);
    const double T = config.horizon;
    const double previous = peak_to_peak(traj, 0.5 * T, 0.75 * T);
    const double terminal = peak_to_peak(traj, 0.75 * T, traj.end_time());

    OscillationVerdict v;
    v.terminal_amplitude = terminal;
    v.horizon = T;
    if (previous > 0.0) {
      v.growth_ratio = terminal / previous;
    } else {
      v.growth_ratio = terminal > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    if (terminal < kNoiseFraction * perturbation) {
      v.classification = Oscillation::Decaying;
      return v;
    }
    if (v.growth_ratio >= 1.0 - options.margin) {
      v.classification = Oscillation::Sustained;
      return v;
    }
    if (terminal < options.amplitude_floor * perturbation || attempt >= options.max_extensions) {
      v.classification = Oscillation::Decaying;
      return v;
    }
    config.horizon *= 2.0;
  }
}

double find_critical_delay(const ModelParams& params, const ChoiceFunction& f,
                           std::pair<double, double> bracket, const FindOptions& options) {
  auto [lo, hi] = bracket;
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi))
    throw BracketError("bracket must satisfy 0 <= lo < hi");
  if (!(options.tol > 0.0)) throw InputError("tolerance must be positive");
  const double pert = options.perturbation.value_or(default_perturbation(params, f));

  auto sustained = [&](double delta) {
    return classify_delay(params, f, delta, pert, options.classifier).classification ==
           Oscillation::Sustained;
  };

  if (sustained(lo)) throw BracketError("lower end of the bracket already oscillates");
  if (!sustained(hi)) throw BracketError("upper end of the bracket does not oscillate");

  for (int it = 0; hi - lo >= options.tol; ++it) {
    if (it >= options.max_iterations)
      throw ConvergenceError("bisection did not reach the tolerance");
    const double mid = 0.5 * (lo + hi);
    (sustained(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

SweepResult sweep_c(const ModelParams& params_template, const ChoiceFunction& f,
                    const std::vector<double>& c_values, const FindOptions& options) {
  for (std::size_t k = 1; k < c_values.size(); ++k) {
    if (!(c_values[k] > c_values[k - 1])) throw InputError("c values must be increasing");
  }
  const std::size_t m = c_values.size();
  SweepResult result;
  result.c_values = c_values;
  result.delta_cr_numeric.assign(m, std::nullopt);
  result.delta_cr_closed_form.assign(m, std::nullopt);
  result.errors.assign(m, "");

  auto params_at = [&](std::size_t k) {
    ModelParams p = params_template;
    p.c = c_values[k];
    return p;
  };

  std::vector<std::size_t> off_boundary;
  std::vector<std::size_t> on_boundary;
  for (std::size_t k = 0; k < m; ++k) {
    const ModelParams p = params_at(k);
    try {
      p.validate();
      if (classify_region(p, f) == Region::Boundary) {
        on_boundary.push_back(k);
        continue;
      }
      const StabilityReport report = critical_delay(p, f);
      if (!report.delta_cr) {
        result.errors[k] = "no finite critical delay (" +
                           std::string(to_string(*report.delay_class)) + ")";
        continue;
      }
      result.delta_cr_closed_form[k] = report.delta_cr;
      off_boundary.push_back(k);
    } catch (const Error& e) {
      result.errors[k] = e.what();
    }
  }

  auto solve = [&](std::size_t k, double centre) {
    try {
      result.delta_cr_numeric[k] =
          find_critical_delay(params_at(k), f, {0.25 * centre, 4.0 * centre}, options);
    } catch (const Error& e) {
      result.errors[k] = e.what();
    }
  };

  // Each c is independent; slots are written by exactly one worker.
  auto run_parallel = [&](const std::vector<std::size_t>& indices, auto&& body) {
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(indices.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < indices.size(); j = next++) body(indices[j]);
      });
    }
  };

  run_parallel(off_boundary, [&](std::size_t k) { solve(k, *result.delta_cr_closed_form[k]); });

  // Boundary points have no closed form; seed them from the numeric values of
  // their nearest off-boundary neighbours.
  std::vector<std::size_t> seeded;
  std::vector<double> centres(m, 0.0);
  for (std::size_t k : on_boundary) {
    std::optional<double> left, right;
    for (std::size_t j = k; j-- > 0;) {
      if (result.delta_cr_numeric[j]) {
        left = result.delta_cr_numeric[j];
        break;
      }
    }
    for (std::size_t j = k + 1; j < m; ++j) {
      if (result.delta_cr_numeric[j]) {
        right = result.delta_cr_numeric[j];
        break;
      }
    }
    if (!left && !right) {
      result.errors[k] = "boundary point without a numeric neighbour to seed the bracket";
      continue;
    }
    centres[k] = left && right ? 0.5 * (*left + *right) : left ? *left : *right;
    seeded.push_back(k);
  }
  run_parallel(seeded, [&](std::size_t k) { solve(k, centres[k]); });

  return result;
}

}  // namespace mfq
