#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mfq {

/// Scalars of the delayed mean-field queue model.
///
/// `c` is real-valued so that sweeps can move it continuously across the
/// region boundary lambda*f(0) == mu*c.
struct ModelParams {
  int n = 2;            ///< number of queues
  double lambda = 10.0; ///< total possible arrival rate to each queue
  double mu = 1.0;      ///< service rate per server
  double beta = 2.0;    ///< abandonment rate
  double c = 10.0;      ///< servers per queue
  double p = 1.0;       ///< mean-field interaction exponent
  double delta = 0.0;   ///< information lag

  /// Throws InputError when any invariant is violated.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

/// Queue lengths, one entry per queue.
using QueueState = std::vector<double>;

/// Throws InputError unless `q` has `n` finite nonnegative entries.
void validate_state(std::span<const double> q, int n);

/// Routing weight applied to a queue's mean-field offset.
///
/// Logistic:     f(x) = 1 / (gamma + exp(theta x))
/// GaussianTail: f(x) = P(Z > x) for standard normal Z
/// Custom:       arbitrary evaluator with explicitly supplied f(0) and f'(0)
class ChoiceFunction {
public:
  struct Logistic {
    double gamma;
    double theta;
  };
  struct GaussianTail {};
  struct Custom {
    double value_at_zero;
    double slope_at_zero;
    std::function<double(double)> evaluator;
  };

  static ChoiceFunction logistic(double gamma, double theta);
  static ChoiceFunction gaussian_tail();
  static ChoiceFunction custom(double value_at_zero, double slope_at_zero,
                               std::function<double(double)> evaluator);

  /// f(x). Throws InputError for non-finite x.
  double operator()(double x) const;

  /// f(0), exact for the built-in kinds.
  double value_at_zero() const;

  /// f'(0), exact for the built-in kinds.
  double slope_at_zero() const;

  /// "logistic", "gaussian_tail" or "custom".
  std::string name() const;

  const std::variant<Logistic, GaussianTail, Custom>& kind() const { return kind_; }

private:
  explicit ChoiceFunction(std::variant<Logistic, GaussianTail, Custom> kind)
      : kind_(std::move(kind)) {}

  std::variant<Logistic, GaussianTail, Custom> kind_;
};

double choice_eval(const ChoiceFunction& f, double x);
double choice_slope_at_zero(const ChoiceFunction& f);

/// x_i = q_i^p - mean_j(q_j^p), with 0^0 == 1 so that p == 0 gives all zeros.
std::vector<double> mean_field_offsets(std::span<const double> q, double p);

/// Fluid drift dq_i/dt = lambda f(x_i) - mu min(q_i, c) - beta (q_i - c)^+,
/// where x is computed from the delayed state. Writes into `out`.
void drift(const ModelParams& params, const ChoiceFunction& f, std::span<const double> q_now,
           std::span<const double> q_delayed, std::span<double> out);

std::vector<double> drift(const ModelParams& params, const ChoiceFunction& f,
                          std::span<const double> q_now, std::span<const double> q_delayed);

}  // namespace mfq
