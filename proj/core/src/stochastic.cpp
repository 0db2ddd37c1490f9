#include "mfq/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "mfq/error.hpp"

namespace mfq {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Service: return "service";
    case EventKind::Abandonment: return "abandonment";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform in [0, 1) from the top 53 bits; avoids the implementation-defined
// std::*_distribution algorithms so paths are identical across toolchains.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

struct PendingUpdate {
  double time;
  int queue;
  int step;  // +1 or -1
};

class Simulator {
public:
  Simulator(const ModelParams& params, const ChoiceFunction& f, const SimConfig& config)
      : params_(params),
        f_(f),
        config_(config),
        n_(static_cast<std::size_t>(params.n)),
        eta_(static_cast<double>(config.eta)),
        rng_(config.seed),
        counts_(n_),
        q_(n_),
        delayed_(n_),
        delayed_counts_(n_),
        arrival_(n_),
        service_(n_),
        abandon_(n_) {}

  SamplePath run() {
    SamplePath path;
    path.params = params_;
    path.eta = config_.eta;
    path.horizon = config_.horizon;
    path.initial_segment = config_.history;
    path.states = Matrix(0, n_);

    const QueueState phi0 = config_.history.eval(0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      counts_[i] = std::llround(phi0[i] * eta_);
      q_[i] = static_cast<double>(counts_[i]) / eta_;
    }
    path.initial_state = q_;
    initial_counts_ = counts_;

    lagged_ = params_.delta > 0.0;
    if (lagged_) {
      build_history_epochs();
      config_.history.eval(std::max(-params_.delta, config_.history.start()), delayed_);
    }
    refresh_all();

    double t = 0.0;
    while (true) {
      const double epoch = next_epoch();
      const double candidate = total_ > 0.0 ? t + exponential(rng_, total_) : kInf;

      if (epoch <= candidate && epoch <= config_.horizon) {
        t = epoch;
        apply_epochs(t);
        refresh_all();
        continue;
      }
      if (candidate > config_.horizon) break;

      t = candidate;
      const Event ev = pick_event(t);
      const int step = ev.kind == EventKind::Arrival ? 1 : -1;
      const auto i = static_cast<std::size_t>(ev.queue);
      counts_[i] += step;
      q_[i] = static_cast<double>(counts_[i]) / eta_;
      path.events.push_back(ev);
      path.states.append_row(q_);

      if (lagged_) {
        pending_.push_back({t + params_.delta, ev.queue, step});
        update_departure_rates(i);
      } else {
        refresh_all();
      }
      if (config_.check_rates) verify_rates();
    }
    return path;
  }

private:
  // Sample times tau_j in (-delta, 0] of a sampled history become re-rate
  // epochs at tau_j + delta; the delayed state is piecewise constant between
  // them. Epoch delta itself hands over from the history to the path.
  void build_history_epochs() {
    if (!config_.history.is_constant()) {
      for (double tau : config_.history.times()) {
        const double e = tau + params_.delta;
        if (e > 0.0 && e < params_.delta) history_epochs_.push_back(e);
      }
    }
    history_epochs_.push_back(params_.delta);
  }

  double next_epoch() const {
    double e = kInf;
    if (next_history_epoch_ < history_epochs_.size()) e = history_epochs_[next_history_epoch_];
    if (!pending_.empty()) e = std::min(e, pending_.front().time);
    return e;
  }

  void apply_epochs(double t) {
    while (next_history_epoch_ < history_epochs_.size() &&
           history_epochs_[next_history_epoch_] <= t) {
      const double e = history_epochs_[next_history_epoch_++];
      if (e == params_.delta) {
        delayed_counts_ = initial_counts_;
        for (std::size_t i = 0; i < n_; ++i)
          delayed_[i] = static_cast<double>(delayed_counts_[i]) / eta_;
      } else {
        // Step-wise history: the sample at tau = e - delta holds until the next one.
        config_.history.eval(e - params_.delta, delayed_);
      }
    }
    while (!pending_.empty() && pending_.front().time <= t) {
      const PendingUpdate u = pending_.front();
      pending_.pop_front();
      const auto i = static_cast<std::size_t>(u.queue);
      delayed_counts_[i] += u.step;
      delayed_[i] = static_cast<double>(delayed_counts_[i]) / eta_;
    }
  }

  std::span<const double> delayed_state() const { return lagged_ ? delayed_ : q_; }

  void compute_arrivals(std::span<double> out) const {
    const auto d = delayed_state();
    const std::vector<double> x = mean_field_offsets(d, params_.p);
    for (std::size_t i = 0; i < n_; ++i) out[i] = eta_ * params_.lambda * f_(x[i]);
  }

  double service_rate(std::size_t i) const { return eta_ * params_.mu * std::min(q_[i], params_.c); }
  double abandon_rate(std::size_t i) const {
    return eta_ * params_.beta * std::max(q_[i] - params_.c, 0.0);
  }

  void refresh_all() {
    compute_arrivals(arrival_);
    arrival_total_ = 0.0;
    departure_total_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      service_[i] = service_rate(i);
      abandon_[i] = abandon_rate(i);
      arrival_total_ += arrival_[i];
      departure_total_ += service_[i] + abandon_[i];
    }
    set_total();
  }

  void update_departure_rates(std::size_t i) {
    const double s = service_rate(i);
    const double a = abandon_rate(i);
    departure_total_ += (s - service_[i]) + (a - abandon_[i]);
    service_[i] = s;
    abandon_[i] = a;
    set_total();
  }

  void set_total() {
    total_ = arrival_total_ + departure_total_;
    if (!std::isfinite(total_) || total_ < 0.0)
      throw SimulationError("total event rate is not finite");
  }

  Event pick_event(double t) {
    const double target = uniform01(rng_) * total_;
    double cum = 0.0;
    Event last{t, EventKind::Arrival, -1};
    auto visit = [&](const std::vector<double>& rates, EventKind kind) -> bool {
      for (std::size_t i = 0; i < n_; ++i) {
        if (rates[i] <= 0.0) continue;
        cum += rates[i];
        last = {t, kind, static_cast<int>(i)};
        if (target < cum) return true;
      }
      return false;
    };
    if (visit(arrival_, EventKind::Arrival) || visit(service_, EventKind::Service) ||
        visit(abandon_, EventKind::Abandonment))
      return last;
    // Rounding left target just past the cumulative sum.
    if (last.queue < 0) throw SimulationError("no event has positive rate");
    return last;
  }

  void verify_rates() const {
    std::vector<double> fresh(n_);
    compute_arrivals(fresh);
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (service_rate(i) != service_[i] || abandon_rate(i) != abandon_[i])
        throw SimulationError("per-queue departure rate out of sync");
      total += fresh[i] + service_rate(i) + abandon_rate(i);
    }
    if (std::abs(total - total_) > 1e-9 * std::max(1.0, total))
      throw SimulationError("incremental rate total drifted from recomputed total");
  }

  const ModelParams& params_;
  const ChoiceFunction& f_;
  const SimConfig& config_;
  std::size_t n_;
  double eta_;
  std::mt19937_64 rng_;

  std::vector<long long> counts_;
  std::vector<double> q_;
  bool lagged_ = false;
  std::vector<double> delayed_;
  std::vector<long long> delayed_counts_;
  std::vector<long long> initial_counts_;
  std::vector<double> history_epochs_;
  std::size_t next_history_epoch_ = 0;
  std::deque<PendingUpdate> pending_;

  std::vector<double> arrival_;
  std::vector<double> service_;
  std::vector<double> abandon_;
  double arrival_total_ = 0.0;
  double departure_total_ = 0.0;
  double total_ = 0.0;
};

}  // namespace

SamplePath simulate_path(const ModelParams& params, const ChoiceFunction& f,
                         const SimConfig& config) {
  params.validate();
  if (config.eta < 1) throw InputError("eta must be >= 1");
  if (!std::isfinite(config.horizon) || config.horizon <= 0.0)
    throw InputError("simulation horizon must be positive");
  config.history.validate(params.n, params.delta);
  return Simulator(params, f, config).run();
}

Matrix path_on_grid(const SamplePath& path, std::span<const double> grid) {
  const std::size_t n = path.initial_state.size();
  Matrix out(grid.size(), n);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const double g = grid[r];
    if (!(g >= 0.0 && g <= path.horizon)) throw RangeError("grid time outside [0, T]");
    auto it = std::upper_bound(path.events.begin(), path.events.end(), g,
                               [](double t, const Event& e) { return t < e.time; });
    const auto row = it == path.events.begin()
                         ? std::span<const double>(path.initial_state)
                         : path.states.row(static_cast<std::size_t>(it - path.events.begin()) - 1);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

double fluid_gap(const SamplePath& path, const Trajectory& trajectory) {
  if (!(path.params == trajectory.params))
    throw InputError("sample path and trajectory use different model parameters");
  if (trajectory.end_time() < path.horizon * (1.0 - 1e-12))
    throw InputError("trajectory horizon is shorter than the sample path");
  if (trajectory.dimension() != path.dimension())
    throw InputError("sample path and trajectory differ in dimension");

  const std::size_t n = path.initial_state.size();
  double gap = 0.0;
  std::size_t e = 0;  // events with time <= t
  for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
    const double t = trajectory.times[k];
    if (t > path.horizon) break;
    while (e < path.events.size() && path.events[e].time <= t) ++e;
    const auto q = e == 0 ? std::span<const double>(path.initial_state) : path.states.row(e - 1);
    for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, std::abs(q[i] - trajectory.states(k, i)));
  }
  return gap;
}

double max_abs_gap(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("matrix shapes differ");
  double gap = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    gap = std::max(gap, std::abs(a.data()[k] - b.data()[k]));
  return gap;
}

}  // namespace mfq
