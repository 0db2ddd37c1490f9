#include "experiment_config.hpp"

#include <algorithm>
#include <cmath>

#include "mfq/error.hpp"
#include "mfq/stability.hpp"

namespace mfq::cli {

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw InputError("config: missing \"" + std::string(key) + "\" in " + where);
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InputError("config: " + what + " must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), where + "." + key);
}

}  // namespace

ChoiceFunction ChoiceSpec::make() const {
  if (type == "logistic") return ChoiceFunction::logistic(gamma, theta);
  if (type == "gaussian_tail") return ChoiceFunction::gaussian_tail();
  if (type == "custom") {
    const double a = f0;
    const double b = fprime0;
    return ChoiceFunction::custom(f0, fprime0, [a, b](double x) { return std::max(0.0, a + b * x); });
  }
  throw InputError("config: unknown choice type \"" + type + "\"");
}

std::vector<double> SweepBlock::c_values() const {
  std::vector<double> cs;
  if (steps == 1) return {c_min};
  for (int k = 0; k < steps; ++k)
    cs.push_back(c_min + (c_max - c_min) * static_cast<double>(k) / (steps - 1));
  return cs;
}

HistorySpec ExperimentConfig::make_history(const ChoiceFunction& f) const {
  if (history.type == "constant") return HistorySpec::constant(history.values);
  const double q_star = equilibrium(model, f);
  QueueState v(static_cast<std::size_t>(model.n));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = q_star + (i % 2 == 0 ? -history.perturbation : history.perturbation);
  return HistorySpec::constant(v);
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw InputError("config: top level must be a JSON object");
  ExperimentConfig cfg;
  cfg.source = doc;

  const json& m = require(doc, "model", "config");
  const json& n = require(m, "N", "model");
  if (!n.is_number_integer()) throw InputError("config: model.N must be an integer");
  cfg.model.n = n.get<int>();
  cfg.model.lambda = number(require(m, "lambda", "model"), "model.lambda");
  cfg.model.mu = number(require(m, "mu", "model"), "model.mu");
  cfg.model.beta = number(require(m, "beta", "model"), "model.beta");
  cfg.model.c = number(require(m, "c", "model"), "model.c");
  cfg.model.p = number_or(m, "p", 1.0, "model");
  cfg.model.delta = number_or(m, "delta", 0.0, "model");
  cfg.model.validate();

  const json& ch = require(doc, "choice", "config");
  const json& type = require(ch, "type", "choice");
  if (!type.is_string()) throw InputError("config: choice.type must be a string");
  cfg.choice.type = type.get<std::string>();
  cfg.choice.gamma = number_or(ch, "gamma", 1.0, "choice");
  cfg.choice.theta = number_or(ch, "theta", 1.0, "choice");
  if (cfg.choice.type == "custom") {
    cfg.choice.f0 = number(require(ch, "f0", "choice"), "choice.f0");
    cfg.choice.fprime0 = number(require(ch, "fprime0", "choice"), "choice.fprime0");
  }
  const ChoiceFunction f = cfg.choice.make();

  if (doc.contains("history")) {
    const json& h = doc.at("history");
    const json& htype = require(h, "type", "history");
    if (!htype.is_string()) throw InputError("config: history.type must be a string");
    cfg.history.type = htype.get<std::string>();
    if (cfg.history.type == "constant") {
      const json& vals = require(h, "values", "history");
      if (!vals.is_array()) throw InputError("config: history.values must be an array");
      for (const auto& v : vals) cfg.history.values.push_back(number(v, "history.values[]"));
    } else if (cfg.history.type == "equilibrium") {
      cfg.history.perturbation = number_or(h, "perturbation", 0.0, "history");
    } else {
      throw InputError("config: unknown history type \"" + cfg.history.type + "\"");
    }
  }
  cfg.make_history(f).validate(cfg.model.n, cfg.model.delta);

  if (doc.contains("integrator")) {
    const json& in = doc.at("integrator");
    cfg.integrator.step = number_or(in, "step", 0.0, "integrator");
    cfg.integrator.horizon = number_or(in, "horizon", 60.0, "integrator");
  }
  if (!(cfg.integrator.horizon > 0.0) || !std::isfinite(cfg.integrator.horizon))
    throw InputError("config: integrator.horizon must be positive");
  if (cfg.integrator.step < 0.0 || !std::isfinite(cfg.integrator.step))
    throw InputError("config: integrator.step must be >= 0");

  if (doc.contains("stochastic")) {
    const json& s = doc.at("stochastic");
    StochasticBlock block;
    const json& eta = require(s, "eta", "stochastic");
    if (!eta.is_number_integer() || eta.get<long long>() < 1)
      throw InputError("config: stochastic.eta must be a positive integer");
    block.eta = eta.get<int>();
    if (s.contains("seeds")) {
      const json& seeds = s.at("seeds");
      if (!seeds.is_array() || seeds.empty())
        throw InputError("config: stochastic.seeds must be a non-empty array");
      block.seeds.clear();
      for (const auto& v : seeds) {
        if (!v.is_number_unsigned()) throw InputError("config: seeds must be nonnegative integers");
        block.seeds.push_back(v.get<std::uint64_t>());
      }
    }
    cfg.stochastic = block;
  }

  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    SweepBlock block;
    block.c_min = number(require(s, "c_min", "sweep"), "sweep.c_min");
    block.c_max = number(require(s, "c_max", "sweep"), "sweep.c_max");
    const json& steps = require(s, "steps", "sweep");
    if (!steps.is_number_integer() || steps.get<long long>() < 1)
      throw InputError("config: sweep.steps must be a positive integer");
    block.steps = steps.get<int>();
    block.tol = number_or(s, "tol", 1e-3, "sweep");
    if (!(block.c_min > 0.0) || (block.steps > 1 && !(block.c_max > block.c_min)))
      throw InputError("config: sweep needs 0 < c_min < c_max");
    if (!(block.tol > 0.0)) throw InputError("config: sweep.tol must be positive");
    cfg.sweep = block;
  }

  if (doc.contains("find_dcr")) {
    const json& s = doc.at("find_dcr");
    if (s.contains("lo")) cfg.find.lo = number(s.at("lo"), "find_dcr.lo");
    if (s.contains("hi")) cfg.find.hi = number(s.at("hi"), "find_dcr.hi");
    cfg.find.tol = number_or(s, "tol", 1e-3, "find_dcr");
    if (cfg.find.lo.has_value() != cfg.find.hi.has_value())
      throw InputError("config: find_dcr needs both lo and hi, or neither");
  }
  return cfg;
}

std::vector<json> expand_panels(const json& doc) {
  if (!doc.is_object() || !doc.contains("panels")) return {doc};
  const json& panels = doc.at("panels");
  if (!panels.is_array() || panels.empty())
    throw InputError("config: \"panels\" must be a non-empty array");
  json base = doc;
  base.erase("panels");
  std::vector<json> out;
  for (const auto& patch : panels) {
    if (!patch.is_object()) throw InputError("config: each panel must be an object");
    json merged = base;
    merged.merge_patch(patch);
    out.push_back(std::move(merged));
  }
  return out;
}

}  // namespace mfq::cli
