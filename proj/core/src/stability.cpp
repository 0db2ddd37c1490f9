#include "mfq/stability.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "mfq/error.hpp"

namespace mfq {

std::string_view to_string(Region region) {
  switch (region) {
    case Region::BelowBoundary: return "below_boundary";
    case Region::AboveBoundary: return "above_boundary";
    case Region::Boundary: return "boundary";
  }
  return "unknown";
}

std::string_view to_string(DelayClass kind) {
  switch (kind) {
    case DelayClass::FiniteThreshold: return "finite_threshold";
    case DelayClass::StableForAllDelays: return "stable_for_all_delays";
    case DelayClass::UnstableAtZeroDelay: return "unstable_at_zero_delay";
    case DelayClass::Marginal: return "marginal";
  }
  return "unknown";
}

Region classify_region(const ModelParams& params, const ChoiceFunction& f) {
  const double load = params.lambda * f.value_at_zero();
  const double capacity = params.mu * params.c;
  const double scale = std::max(std::abs(load), std::abs(capacity));
  if (load < capacity - kBoundaryTolerance * scale) return Region::BelowBoundary;
  if (load > capacity + kBoundaryTolerance * scale) return Region::AboveBoundary;
  return Region::Boundary;
}

double equilibrium(const ModelParams& params, const ChoiceFunction& f) {
  const double load = params.lambda * f.value_at_zero();
  if (load <= params.mu * params.c) return load / params.mu;
  return (load - params.mu * params.c + params.beta * params.c) / params.beta;
}

GainDecay gain_and_decay(const ModelParams& params, const ChoiceFunction& f) {
  const Region region = classify_region(params, f);
  if (region == Region::Boundary)
    throw BoundaryError("linearization is undefined at lambda*f(0) == mu*c");
  const double q_star = equilibrium(params, f);
  const double p = params.p;

  double scale = 1.0;  // (q*)^(p-1)
  if (p != 1.0) {
    if (q_star == 0.0 && p != 0.0) throw SingularityError("(q*)^(p-1) is undefined at q* = 0");
    scale = p == 0.0 ? 0.0 : std::pow(q_star, p - 1.0);
  }
  const double gain = p * params.lambda * f.slope_at_zero() * scale;
  const double decay = region == Region::BelowBoundary ? params.mu : params.beta;
  return {gain, decay};
}

Threshold classify_linear_delay(double gain_C, double decay_theta) {
  if (std::abs(gain_C + decay_theta) <= 1e-12 * std::abs(decay_theta))
    return {DelayClass::Marginal, std::nullopt, std::nullopt};
  if (std::abs(gain_C) < decay_theta) return {DelayClass::StableForAllDelays, std::nullopt, std::nullopt};
  if (gain_C >= decay_theta) return {DelayClass::UnstableAtZeroDelay, std::nullopt, std::nullopt};

  // C < -theta: purely imaginary roots i*omega with cos(omega delta) = theta / C
  // and sin(omega delta) = -omega / C > 0, so the principal arccos branch applies.
  const double omega = std::sqrt(gain_C * gain_C - decay_theta * decay_theta);
  const double delta_cr = std::acos(decay_theta / gain_C) / omega;
  return {DelayClass::FiniteThreshold, omega, delta_cr};
}

StabilityReport critical_delay(const ModelParams& params, const ChoiceFunction& f) {
  const GainDecay gd = gain_and_decay(params, f);
  const Threshold th = classify_linear_delay(gd.gain_C, gd.decay_theta);
  StabilityReport report;
  report.region = classify_region(params, f);
  report.q_star = equilibrium(params, f);
  report.gain_C = gd.gain_C;
  report.decay_theta = gd.decay_theta;
  report.delay_class = th.kind;
  report.omega = th.omega;
  report.delta_cr = th.delta_cr;
  return report;
}

StabilityReport analyze(const ModelParams& params, const ChoiceFunction& f) {
  if (classify_region(params, f) == Region::Boundary) {
    StabilityReport report;
    report.region = Region::Boundary;
    report.q_star = equilibrium(params, f);
    return report;
  }
  return critical_delay(params, f);
}

double characteristic_residual(double gain_C, double decay_theta, double delta, double omega) {
  using namespace std::complex_literals;
  const std::complex<double> r = 1i * omega;
  return std::abs(r - gain_C * std::exp(-r * delta) + decay_theta);
}

std::vector<double> mean_field_matrix(int n, double gain_C) {
  if (n < 1) throw InputError("N must be >= 1");
  const auto size = static_cast<std::size_t>(n);
  std::vector<double> a(size * size, -gain_C / n);
  for (std::size_t i = 0; i < size; ++i) a[i * size + i] = gain_C * (n - 1) / n;
  return a;
}

std::vector<Eigenvalue> mean_field_eigenvalues(int n, double gain_C) {
  if (n < 2) throw InputError("mean-field spectrum needs N >= 2");
  if (gain_C == 0.0) return {{0.0, n}};
  return {{0.0, 1}, {gain_C, n - 1}};
}

}  // namespace mfq
