#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mfq/model.hpp"

namespace mfq {

/// Which side of the non-differentiable point lambda*f(0) == mu*c we are on.
enum class Region { BelowBoundary, AboveBoundary, Boundary };

/// Outcome of the linear stability analysis of v' = C v(t - delta) - theta v.
enum class DelayClass {
  FiniteThreshold,     ///< C < -theta: stable below delta_cr, oscillatory above
  StableForAllDelays,  ///< |C| < theta
  UnstableAtZeroDelay, ///< C >= theta: a real root is already nonnegative at delta = 0
  Marginal,            ///< C == -theta: the crossing frequency degenerates to 0
};

std::string_view to_string(Region region);
std::string_view to_string(DelayClass kind);

struct StabilityReport {
  Region region = Region::Boundary;
  double q_star = 0.0;
  std::optional<double> gain_C;       ///< absent at the boundary
  std::optional<double> decay_theta;  ///< mu below, beta above; absent at the boundary
  std::optional<double> omega;        ///< only for FiniteThreshold
  std::optional<DelayClass> delay_class;
  std::optional<double> delta_cr;     ///< only for FiniteThreshold
};

struct GainDecay {
  double gain_C;
  double decay_theta;
};

/// Relative tolerance used to decide that lambda*f(0) == mu*c.
inline constexpr double kBoundaryTolerance = 1e-9;

Region classify_region(const ModelParams& params, const ChoiceFunction& f);

/// Equilibrium queue length shared by all queues. Defined at the boundary too,
/// where both region formulas give q* = c.
double equilibrium(const ModelParams& params, const ChoiceFunction& f);

/// Coefficients of the decoupled linearization. Throws BoundaryError at the
/// boundary and SingularityError when q* == 0 with p != 1.
GainDecay gain_and_decay(const ModelParams& params, const ChoiceFunction& f);

/// Classifies the scalar delayed equation v' = C v(t - delta) - theta v and,
/// when a finite threshold exists, returns (omega, delta_cr). Independent of N.
struct Threshold {
  DelayClass kind;
  std::optional<double> omega;
  std::optional<double> delta_cr;
};
Threshold classify_linear_delay(double gain_C, double decay_theta);

/// Full report. Throws BoundaryError at the boundary (the equilibrium is still
/// available through equilibrium()).
StabilityReport critical_delay(const ModelParams& params, const ChoiceFunction& f);

/// Like critical_delay, but reports the boundary case instead of throwing.
StabilityReport analyze(const ModelParams& params, const ChoiceFunction& f);

/// |i omega - C exp(-i omega delta) + theta|.
double characteristic_residual(double gain_C, double decay_theta, double delta, double omega);

struct Eigenvalue {
  double value;
  int multiplicity;
};

/// Spectrum of C (I - ones/N): 0 once and C with multiplicity N - 1 (merged
/// into {0: N} when C == 0). Throws InputError for N < 2.
std::vector<Eigenvalue> mean_field_eigenvalues(int n, double gain_C);

/// The N x N matrix C (I - ones/N), row-major.
std::vector<double> mean_field_matrix(int n, double gain_C);

}  // namespace mfq
