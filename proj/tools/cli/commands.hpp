#pragma once

#include <iosfwd>
#include <string>

#include "experiment_config.hpp"
#include "mfq/stochastic.hpp"

namespace mfq::cli {

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3 };

/// Entry point shared by the `mfq` binary and the in-process CLI tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Pieces used by run(); exposed for testing.

/// "%.17g"-style text; 17 significant digits round-trip every double.
std::string format_double(double v);

json analyze_report(const ExperimentConfig& cfg);
std::string trajectory_csv(const Trajectory& traj);
std::string sample_path_csv(const SamplePath& path);

}  // namespace mfq::cli
