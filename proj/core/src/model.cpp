#include "mfq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfq/error.hpp"

namespace mfq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// q^p with the 0^0 == 1 convention (std::pow already does this) and a fast
// path for the common p == 1 case.
double power(double q, double p) {
  if (p == 1.0) return q;
  if (p == 0.0) return 1.0;
  return std::pow(q, p);
}

// Mean taken relative to the first entry, so equal entries give their common
// value exactly and a symmetric state has zero offsets.
double shifted_mean(std::span<const double> v) {
  const double ref = v[0];
  double sum = 0.0;
  for (double x : v) sum += x - ref;
  return ref + sum / static_cast<double>(v.size());
}

}  // namespace

void ModelParams::validate() const {
  if (n < 1) throw InputError("N must be >= 1");
  // lambda == 0 is accepted as the degenerate no-arrival system.
  if (!std::isfinite(lambda) || lambda < 0.0) throw InputError("lambda must be finite and >= 0");
  if (!positive_finite(mu)) throw InputError("mu must be positive and finite");
  if (!positive_finite(beta)) throw InputError("beta must be positive and finite");
  if (!positive_finite(c)) throw InputError("c must be positive and finite");
  if (!std::isfinite(p) || p < 0.0) throw InputError("p must be finite and >= 0");
  if (!std::isfinite(delta) || delta < 0.0) throw InputError("delta must be finite and >= 0");
}

void validate_state(std::span<const double> q, int n) {
  if (static_cast<int>(q.size()) != n)
    throw InputError("queue state has " + std::to_string(q.size()) + " entries, expected " +
                     std::to_string(n));
  for (double v : q) {
    if (!std::isfinite(v) || v < 0.0)
      throw InputError("queue lengths must be finite and nonnegative");
  }
}

ChoiceFunction ChoiceFunction::logistic(double gamma, double theta) {
  if (!positive_finite(gamma) || !positive_finite(theta))
    throw InputError("logistic choice needs gamma > 0 and theta > 0");
  return ChoiceFunction(Logistic{gamma, theta});
}

ChoiceFunction ChoiceFunction::gaussian_tail() { return ChoiceFunction(GaussianTail{}); }

ChoiceFunction ChoiceFunction::custom(double value_at_zero, double slope_at_zero,
                                      std::function<double(double)> evaluator) {
  if (!std::isfinite(value_at_zero) || !std::isfinite(slope_at_zero))
    throw InputError("custom choice needs finite f(0) and f'(0)");
  if (!evaluator) throw InputError("custom choice needs an evaluator");
  return ChoiceFunction(Custom{value_at_zero, slope_at_zero, std::move(evaluator)});
}

double ChoiceFunction::operator()(double x) const {
  if (!std::isfinite(x)) throw InputError("choice function argument must be finite");
  return std::visit(
      overloaded{
          // exp overflow gives +inf and a weight of exactly 0, which is the limit.
          [x](const Logistic& l) { return 1.0 / (l.gamma + std::exp(l.theta * x)); },
          [x](const GaussianTail&) { return 0.5 * std::erfc(x / std::numbers::sqrt2); },
          [x](const Custom& c) { return c.evaluator(x); },
      },
      kind_);
}

double ChoiceFunction::value_at_zero() const {
  return std::visit(overloaded{
                        [](const Logistic& l) { return 1.0 / (l.gamma + 1.0); },
                        [](const GaussianTail&) { return 0.5; },
                        [](const Custom& c) { return c.value_at_zero; },
                    },
                    kind_);
}

double ChoiceFunction::slope_at_zero() const {
  return std::visit(overloaded{
                        [](const Logistic& l) {
                          return -l.theta / ((l.gamma + 1.0) * (l.gamma + 1.0));
                        },
                        [](const GaussianTail&) {
                          return -std::numbers::inv_sqrtpi / std::numbers::sqrt2;
                        },
                        [](const Custom& c) { return c.slope_at_zero; },
                    },
                    kind_);
}

std::string ChoiceFunction::name() const {
  return std::visit(overloaded{
                        [](const Logistic&) { return std::string("logistic"); },
                        [](const GaussianTail&) { return std::string("gaussian_tail"); },
                        [](const Custom&) { return std::string("custom"); },
                    },
                    kind_);
}

double choice_eval(const ChoiceFunction& f, double x) { return f(x); }

double choice_slope_at_zero(const ChoiceFunction& f) { return f.slope_at_zero(); }

std::vector<double> mean_field_offsets(std::span<const double> q, double p) {
  if (!std::isfinite(p) || p < 0.0) throw InputError("p must be finite and >= 0");
  if (q.empty()) throw InputError("queue state is empty");
  std::vector<double> x(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i]) || q[i] < 0.0)
      throw InputError("queue lengths must be finite and nonnegative");
    x[i] = power(q[i], p);
  }
  const double mean = shifted_mean(x);
  for (double& v : x) v -= mean;
  return x;
}

void drift(const ModelParams& params, const ChoiceFunction& f, std::span<const double> q_now,
           std::span<const double> q_delayed, std::span<double> out) {
  const auto n = static_cast<std::size_t>(params.n);
  if (q_now.size() != n || q_delayed.size() != n || out.size() != n)
    throw InputError("drift: dimension mismatch with N=" + std::to_string(params.n));

  // out holds q_delayed^p until it is overwritten with the drift.
  for (std::size_t i = 0; i < n; ++i) {
    if (!(q_delayed[i] >= 0.0)) throw InputError("drift: delayed queue length is negative or NaN");
    out[i] = power(q_delayed[i], params.p);
  }
  const double mean = shifted_mean(out);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = q_now[i];
    const double offset = out[i] - mean;
    out[i] = params.lambda * f(offset) - params.mu * std::min(q, params.c) -
             params.beta * std::max(q - params.c, 0.0);
  }
}

std::vector<double> drift(const ModelParams& params, const ChoiceFunction& f,
                          std::span<const double> q_now, std::span<const double> q_delayed) {
  std::vector<double> out(q_now.size());
  drift(params, f, q_now, q_delayed, out);
  return out;
}

}  // namespace mfq
