#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mfq/error.hpp"
#include "mfq/hopf.hpp"
#include "mfq/stability.hpp"

namespace mfq::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string command;
  std::string config_path;
  std::string out_path;
  std::string seed_list;
  std::optional<double> tol;
};

// Files written so far by this invocation; removed again on numerical failure.
class OutputSet {
public:
  void write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    written_.push_back(path);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open output file " + path.string());
    os << content;
    if (!os) throw InputError("failed writing " + path.string());
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

private:
  std::vector<fs::path> written_;
};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metadata(const std::string& command, const ExperimentConfig& cfg) {
  return {{"command", command}, {"config", cfg.source}, {"version", kVersion}};
}

json load_document(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read config file " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::uint64_t v = 0;
    const auto* first = item.data();
    const auto* last = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw InputError("--seed-list: bad seed \"" + item + "\"");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw InputError("--seed-list is empty");
  return seeds;
}

std::string panel_label(const json& doc, std::size_t index) {
  if (doc.contains("label") && doc.at("label").is_string()) {
    std::string s = doc.at("label").get<std::string>();
    for (char& ch : s) {
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.')
        ch = '_';
    }
    if (!s.empty()) return s;
  }
  return "panel_" + std::to_string(index + 1);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

FindOptions find_options(double tol) {
  FindOptions o;
  o.tol = tol;
  return o;
}

// --- commands --------------------------------------------------------------

json cmd_find_dcr(const ExperimentConfig& cfg) {
  const ChoiceFunction f = cfg.choice.make();
  const double tol = cfg.find.tol;
  std::optional<double> closed;
  if (classify_region(cfg.model, f) != Region::Boundary) closed = critical_delay(cfg.model, f).delta_cr;

  std::pair<double, double> bracket;
  if (cfg.find.lo) {
    bracket = {*cfg.find.lo, *cfg.find.hi};
  } else if (closed) {
    bracket = {0.25 * *closed, 4.0 * *closed};
  } else {
    throw InputError("find-dcr: no closed-form value to seed the bracket; set find_dcr.lo/hi");
  }
  const double numeric = find_critical_delay(cfg.model, f, bracket, find_options(tol));
  return {{"delta_cr_numeric", numeric},
          {"delta_cr_closed_form", optional_number(closed)},
          {"bracket", {bracket.first, bracket.second}},
          {"tol", tol},
          {"metadata", metadata("find-dcr", cfg)}};
}

std::string sweep_csv(const SweepResult& r) {
  std::string out = "c,delta_cr_numeric,delta_cr_closed_form\n";
  for (std::size_t k = 0; k < r.c_values.size(); ++k) {
    out += format_double(r.c_values[k]);
    out += ',';
    if (r.delta_cr_numeric[k]) out += format_double(*r.delta_cr_numeric[k]);
    out += ',';
    if (r.delta_cr_closed_form[k]) out += format_double(*r.delta_cr_closed_form[k]);
    out += '\n';
  }
  return out;
}

void cmd_simulate(const ExperimentConfig& cfg, const fs::path& out, OutputSet& files) {
  const ChoiceFunction f = cfg.choice.make();
  IntegratorConfig ic = cfg.integrator;
  ic.store_derivatives = true;
  const Trajectory traj = integrate(cfg.model, f, cfg.make_history(f), ic);
  files.write(out, trajectory_csv(traj));
  json meta = metadata("simulate", cfg);
  meta["step"] = traj.step;
  files.write(out.string() + ".meta.json", meta.dump(2) + "\n");
}

void cmd_sweep(const ExperimentConfig& cfg, const fs::path& out, OutputSet& files) {
  if (!cfg.sweep) throw InputError("sweep: config has no \"sweep\" block");
  const ChoiceFunction f = cfg.choice.make();
  const double tol = cfg.sweep->tol;
  const SweepResult r = sweep_c(cfg.model, f, cfg.sweep->c_values(), find_options(tol));
  files.write(out, sweep_csv(r));
  json meta = metadata("sweep", cfg);
  json errors = json::array();
  for (std::size_t k = 0; k < r.errors.size(); ++k) {
    if (!r.errors[k].empty()) errors.push_back({{"c", r.c_values[k]}, {"error", r.errors[k]}});
  }
  meta["errors"] = errors;
  files.write(out.string() + ".meta.json", meta.dump(2) + "\n");
}

void cmd_stoch(const ExperimentConfig& cfg, const fs::path& dir, OutputSet& files) {
  if (!cfg.stochastic) throw InputError("stoch: config has no \"stochastic\" block");
  const ChoiceFunction f = cfg.choice.make();
  const std::vector<std::uint64_t>& seeds = cfg.stochastic->seeds;

  const HistorySpec history = cfg.make_history(f);
  IntegratorConfig ic = cfg.integrator;
  ic.store_derivatives = false;
  const Trajectory fluid = integrate(cfg.model, f, history, ic);

  std::vector<double> gaps;
  for (std::uint64_t seed : seeds) {
    SimConfig sc;
    sc.eta = cfg.stochastic->eta;
    sc.seed = seed;
    sc.horizon = cfg.integrator.horizon;
    sc.history = history;
    const SamplePath path = simulate_path(cfg.model, f, sc);
    gaps.push_back(fluid_gap(path, fluid));
    files.write(dir / ("seed_" + std::to_string(seed) + ".csv"), sample_path_csv(path));
  }

  json summary = {{"eta", cfg.stochastic->eta},
                  {"seeds", seeds},
                  {"fluid_gaps", gaps},
                  {"fluid_gap_median", median(gaps)},
                  {"generator", std::string(kGeneratorName)},
                  {"metadata", metadata("stoch", cfg)}};
  files.write(dir / "summary.json", summary.dump(2) + "\n");
}

// Command-line overrides are folded into the document so the echoed config
// alone reproduces the run.
void apply_overrides(json& doc, const Options& opt) {
  if (!doc.is_object()) return;
  if (!opt.seed_list.empty() && doc.contains("stochastic") && doc["stochastic"].is_object())
    doc["stochastic"]["seeds"] = parse_seed_list(opt.seed_list);
  if (opt.tol) {
    if (doc.contains("sweep") && doc["sweep"].is_object()) doc["sweep"]["tol"] = *opt.tol;
    if (opt.command == "find-dcr") doc["find_dcr"]["tol"] = *opt.tol;
  }
}

int dispatch(const Options& opt, std::ostream& out) {
  const json doc = load_document(opt.config_path);
  std::vector<json> panels = expand_panels(doc);
  const bool multi = doc.contains("panels");
  for (auto& p : panels) apply_overrides(p, opt);

  std::vector<ExperimentConfig> configs;
  for (const auto& p : panels) configs.push_back(parse_config(p));

  if (opt.command == "analyze" || opt.command == "find-dcr") {
    json result = json::array();
    for (const auto& cfg : configs) {
      if (opt.command == "analyze") {
        json r = analyze_report(cfg);
        r["metadata"] = metadata("analyze", cfg);
        result.push_back(std::move(r));
      } else {
        result.push_back(cmd_find_dcr(cfg));
      }
    }
    const json& shown = multi ? result : result.front();
    const std::string text = shown.dump(2) + "\n";
    out << text;
    if (!opt.out_path.empty()) {
      OutputSet files;
      files.write(opt.out_path, text);
    }
    return kOk;
  }

  if (opt.out_path.empty()) throw InputError(opt.command + " requires --out");
  OutputSet files;
  try {
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const fs::path base = opt.out_path;
      const std::string label = panel_label(panels[k], k);
      if (opt.command == "simulate") {
        cmd_simulate(configs[k], multi ? base / (label + ".csv") : base, files);
      } else if (opt.command == "sweep") {
        cmd_sweep(configs[k], multi ? base / (label + ".csv") : base, files);
      } else if (opt.command == "stoch") {
        cmd_stoch(configs[k], multi ? base / label : base, files);
      }
    }
  } catch (const NumericalError&) {
    files.rollback();
    throw;
  }
  return kOk;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

json analyze_report(const ExperimentConfig& cfg) {
  const ChoiceFunction f = cfg.choice.make();
  const StabilityReport r = analyze(cfg.model, f);
  json delta_cr = nullptr;
  if (r.delay_class) {
    delta_cr = {{"kind", std::string(to_string(*r.delay_class))},
                {"value", optional_number(r.delta_cr)}};
  }
  return {{"region", std::string(to_string(r.region))},
          {"q_star", r.q_star},
          {"gain_C", optional_number(r.gain_C)},
          {"decay_theta", optional_number(r.decay_theta)},
          {"omega", optional_number(r.omega)},
          {"delta_cr", delta_cr}};
}

std::string trajectory_csv(const Trajectory& traj) {
  if (!traj.has_derivatives()) throw ConfigError("trajectory CSV needs stored derivatives");
  const std::size_t n = traj.states.cols();
  std::string out = "t";
  for (std::size_t i = 1; i <= n; ++i) out += ",q_" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) out += ",dq_" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out += format_double(traj.times[k]);
    for (std::size_t i = 0; i < n; ++i) (out += ',') += format_double(traj.states(k, i));
    for (std::size_t i = 0; i < n; ++i) (out += ',') += format_double(traj.derivs(k, i));
    out += '\n';
  }
  return out;
}

std::string sample_path_csv(const SamplePath& path) {
  const std::size_t n = path.initial_state.size();
  std::string out = "time,kind,queue_index";
  for (std::size_t i = 1; i <= n; ++i) out += ",q_" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < path.events.size(); ++k) {
    const Event& e = path.events[k];
    out += format_double(e.time);
    (out += ',') += to_string(e.kind);
    (out += ',') += std::to_string(e.queue + 1);
    for (std::size_t i = 0; i < n; ++i) (out += ',') += format_double(path.states(k, i));
    out += '\n';
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Delayed mean-field queue laboratory"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", opt.out_path, "Output file or directory");
    sub->add_option("--tol", opt.tol, "Bisection tolerance on delta");
    sub->add_option("--seed-list", opt.seed_list, "Comma-separated seeds (stoch)");
  };
  add_common(app.add_subcommand("analyze", "Equilibrium, linearization and closed-form critical delay"));
  add_common(app.add_subcommand("simulate", "Integrate the fluid DDE and write a trajectory CSV"));
  add_common(app.add_subcommand("stoch", "Simulate stochastic sample paths and their fluid gap"));
  add_common(app.add_subcommand("find-dcr", "Locate the critical delay numerically by bisection"));
  add_common(app.add_subcommand("sweep", "Numeric and closed-form critical delay across c"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  opt.command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(opt, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const InputError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace mfq::cli
