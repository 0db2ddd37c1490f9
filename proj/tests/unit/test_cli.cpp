#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli/commands.hpp"

using Catch::Approx;
using namespace mfq::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mfq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Scratch {
public:
  Scratch() {
    dir_ = fs::temp_directory_path() / ("mfq_cli_" + std::to_string(counter_++) + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string write(const std::string& name, const json& doc) const {
    return write_text(name, doc.dump(2));
  }
  std::string write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name).string();
  }

private:
  static inline int counter_ = 0;
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell.empty() ? NAN : std::strtod(cell.c_str(), nullptr));
    if (!line.empty() && line.back() == ',') row.push_back(NAN);
    rows.push_back(row);
  }
  return rows;
}

json fig1_doc(double delta) {
  return {{"model", {{"N", 2}, {"lambda", 10}, {"mu", 1}, {"beta", 2}, {"c", 10}, {"p", 1}, {"delta", delta}}},
          {"choice", {{"type", "logistic"}, {"gamma", 1}, {"theta", 1}}},
          {"history", {{"type", "constant"}, {"values", {4.99, 5.01}}}},
          {"integrator", {{"horizon", 60}}}};
}

json fig5_doc(double c) {
  return {{"model", {{"N", 2}, {"lambda", 10}, {"mu", 1}, {"beta", 2}, {"c", c}}},
          {"choice", {{"type", "logistic"}, {"gamma", 1}, {"theta", 2}}}};
}

json load_figure(const std::string& name) {
  std::ifstream is(std::string(MFQ_FIGURES_DIR) + "/configs/" + name);
  return json::parse(is);
}

}  // namespace

TEST_CASE("number formatting keeps 17 significant digits", "[cli]") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(5.0) == "5");
  CHECK(format_double(-2.5e-10) == "-2.5000000000000002e-10");
  for (double v : {0.36173947100747128, 1.0 / 3.0, 123456.789, 1e-300}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("analyze", "[cli][analyze]") {
  Scratch s;
  auto r = invoke({"analyze", "--config", s.write("a.json", fig5_doc(10))});
  REQUIRE(r.code == kOk);
  const json out = json::parse(r.out);
  CHECK(out["region"] == "below_boundary");
  CHECK(out["q_star"].get<double>() == Approx(5.0));
  CHECK(out["gain_C"].get<double>() == Approx(-5.0));
  CHECK(out["decay_theta"].get<double>() == 1.0);
  CHECK(out["omega"].get<double>() == Approx(std::sqrt(24.0)));
  CHECK(out["delta_cr"]["kind"] == "finite_threshold");
  // Exact value 0.361739; the reference value is 0.3618.
  CHECK(out["delta_cr"]["value"].get<double>() == Approx(0.3618).margin(5e-4));
  CHECK(std::round(out["delta_cr"]["value"].get<double>() * 1e4) / 1e4 == Approx(0.3617).margin(1e-12));
  CHECK(out["metadata"]["config"] == fig5_doc(10));

  r = invoke({"analyze", "--config", s.write("b.json", fig5_doc(5))});
  REQUIRE(r.code == kOk);
  const json boundary = json::parse(r.out);
  CHECK(boundary["region"] == "boundary");
  CHECK(boundary["delta_cr"].is_null());
  CHECK(boundary["gain_C"].is_null());

  json calm = fig5_doc(10);
  calm["model"]["lambda"] = 1;
  r = invoke({"analyze", "--config", s.write("c.json", calm)});
  REQUIRE(r.code == kOk);
  CHECK(json::parse(r.out)["delta_cr"]["kind"] == "stable_for_all_delays");
  CHECK(json::parse(r.out)["delta_cr"]["value"].is_null());
}

TEST_CASE("configuration errors exit with 2", "[cli][errors]") {
  Scratch s;
  CHECK(invoke({"analyze", "--config", s.write_text("bad.json", "{\"model\": ")}).code == kConfigError);
  CHECK(invoke({"analyze", "--config", s.path("missing.json").string()}).code == kConfigError);
  CHECK(invoke({"frobnicate"}).code == kConfigError);
  CHECK(invoke({"analyze"}).code == kConfigError);

  json no_mu = fig5_doc(10);
  no_mu["model"].erase("mu");
  const auto r = invoke({"analyze", "--config", s.write("nomu.json", no_mu)});
  CHECK(r.code == kConfigError);
  CHECK(r.err.find("mu") != std::string::npos);

  json bad_choice = fig5_doc(10);
  bad_choice["choice"]["type"] = "softmax";
  CHECK(invoke({"analyze", "--config", s.write("bc.json", bad_choice)}).code == kConfigError);

  json neg = fig5_doc(10);
  neg["model"]["beta"] = -1;
  CHECK(invoke({"analyze", "--config", s.write("neg.json", neg)}).code == kConfigError);

  CHECK(invoke({"simulate", "--config", s.write("ok.json", fig1_doc(0.6))}).code == kConfigError);
  CHECK(invoke({"sweep", "--config", s.write("nosweep.json", fig5_doc(10)), "--out",
                s.path("x.csv").string()})
            .code == kConfigError);
}

TEST_CASE("simulate", "[cli][simulate]") {
  Scratch s;

  SECTION("equilibrium history gives constant columns") {
    json doc = fig1_doc(0.6);
    doc["history"] = {{"type", "equilibrium"}};
    doc["integrator"]["horizon"] = 10;
    REQUIRE(invoke({"simulate", "--config", s.write("eq.json", doc), "--out", s.path("eq.csv").string()})
                .code == kOk);
    std::string header;
    const auto rows = read_csv(s.path("eq.csv"), &header);
    CHECK(header == "t,q_1,q_2,dq_1,dq_2");
    for (const auto& row : rows) {
      REQUIRE(row[1] == 5.0);
      REQUIRE(row[2] == 5.0);
    }
  }

  SECTION("figure 1 and 2 runs") {
    REQUIRE(invoke({"simulate", "--config", s.write("st.json", fig1_doc(0.6)), "--out",
                    s.path("st.csv").string()})
                .code == kOk);
    const auto rows = read_csv(s.path("st.csv"));
    CHECK(rows.front()[0] == 0.0);
    CHECK(rows.back()[0] == Approx(60.0));
    CHECK(std::abs(rows.back()[1] - 5.0) < 1e-3);
    CHECK(std::abs(rows.back()[2] - 5.0) < 1e-3);

    // The above-boundary orbit grows slowly out of the start-up transient.
    json fig2 = fig1_doc(4.5);
    fig2["model"]["c"] = 2;
    fig2["integrator"]["horizon"] = 120;
    REQUIRE(invoke({"simulate", "--config", s.write("f2.json", fig2), "--out", s.path("f2.csv").string()})
                .code == kOk);
    double lo = 1e300, hi = -1e300;
    for (const auto& row : read_csv(s.path("f2.csv"))) {
      if (row[0] < 90.0) continue;
      lo = std::min(lo, row[1]);
      hi = std::max(hi, row[1]);
    }
    CHECK(hi - lo > 0.5);
  }

  SECTION("bytes are deterministic and the echoed config reproduces them") {
    const std::string cfg = s.write("d.json", fig1_doc(2.0));
    REQUIRE(invoke({"simulate", "--config", cfg, "--out", s.path("d1.csv").string()}).code == kOk);
    REQUIRE(invoke({"simulate", "--config", cfg, "--out", s.path("d2.csv").string()}).code == kOk);
    CHECK(slurp(s.path("d1.csv")) == slurp(s.path("d2.csv")));

    const json meta = json::parse(slurp(s.path("d1.csv.meta.json")));
    CHECK(meta["command"] == "simulate");
    const std::string echoed = s.write("echo.json", meta["config"]);
    REQUIRE(invoke({"simulate", "--config", echoed, "--out", s.path("d3.csv").string()}).code == kOk);
    CHECK(slurp(s.path("d1.csv")) == slurp(s.path("d3.csv")));
  }

  SECTION("divergence exits with 3 and leaves no file") {
    json doc = fig1_doc(0.6);
    doc["choice"] = {{"type", "custom"}, {"f0", 0.5}, {"fprime0", 50.0}};
    doc["integrator"]["horizon"] = 200;
    const auto r = invoke({"simulate", "--config", s.write("div.json", doc), "--out", s.path("div.csv").string()});
    CHECK(r.code == kNumericalError);
    CHECK_FALSE(fs::exists(s.path("div.csv")));
    CHECK_FALSE(fs::exists(s.path("div.csv.meta.json")));
  }

  SECTION("panels write one file per label") {
    json doc = fig1_doc(0.6);
    doc["integrator"]["horizon"] = 5;
    doc["panels"] = {{{"label", "stable"}}, {{"label", "unstable"}, {"model", {{"delta", 2.0}}}}};
    REQUIRE(invoke({"simulate", "--config", s.write("p.json", doc), "--out", s.path("panels").string()})
                .code == kOk);
    CHECK(fs::exists(s.path("panels") / "stable.csv"));
    CHECK(fs::exists(s.path("panels") / "unstable.csv"));
    const json meta = json::parse(slurp(s.path("panels") / "unstable.csv.meta.json"));
    CHECK(meta["config"]["model"]["delta"] == 2.0);
    CHECK_FALSE(meta["config"].contains("panels"));
  }
}

TEST_CASE("stoch", "[cli][stoch]") {
  Scratch s;

  SECTION("no arrivals gives empty event files and zero gap") {
    json doc = fig1_doc(0.6);
    doc["model"]["lambda"] = 0;
    doc["history"]["values"] = {0.0, 0.0};
    doc["integrator"]["horizon"] = 5;
    doc["stochastic"] = {{"eta", 100}, {"seeds", {1, 2}}};
    REQUIRE(invoke({"stoch", "--config", s.write("z.json", doc), "--out", s.path("z").string()}).code == kOk);
    CHECK(slurp(s.path("z") / "seed_1.csv") == "time,kind,queue_index,q_1,q_2\n");
    const json summary = json::parse(slurp(s.path("z") / "summary.json"));
    CHECK(summary["fluid_gap_median"] == 0.0);
    CHECK(summary["generator"] == "mt19937_64");
    CHECK(summary["seeds"] == json({1, 2}));
  }

  SECTION("gap shrinks with eta") {
    json doc = fig1_doc(0.6);
    doc["integrator"]["horizon"] = 5;
    std::vector<double> medians;
    for (int eta : {10, 1000}) {
      doc["stochastic"] = {{"eta", eta}};
      const std::string dir = s.path("eta" + std::to_string(eta)).string();
      REQUIRE(invoke({"stoch", "--config", s.write("e.json", doc), "--out", dir, "--seed-list",
                      "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20"})
                  .code == kOk);
      const json summary = json::parse(slurp(fs::path(dir) / "summary.json"));
      CHECK(summary["fluid_gaps"].size() == 20);
      medians.push_back(summary["fluid_gap_median"].get<double>());
    }
    CHECK(medians[1] < medians[0]);
  }

  SECTION("reruns are byte-identical, also from the echoed config") {
    json doc = fig1_doc(0.6);
    doc["integrator"]["horizon"] = 2;
    doc["stochastic"] = {{"eta", 50}, {"seeds", {9}}};
    const std::string cfg = s.write("r.json", doc);
    REQUIRE(invoke({"stoch", "--config", cfg, "--out", s.path("r1").string(), "--seed-list", "4,5"}).code == kOk);
    REQUIRE(invoke({"stoch", "--config", cfg, "--out", s.path("r2").string(), "--seed-list", "4,5"}).code == kOk);
    for (const char* f : {"seed_4.csv", "seed_5.csv", "summary.json"})
      CHECK(slurp(s.path("r1") / f) == slurp(s.path("r2") / f));
    CHECK_FALSE(fs::exists(s.path("r1") / "seed_9.csv"));

    const json summary = json::parse(slurp(s.path("r1") / "summary.json"));
    const std::string echoed = s.write("echo.json", summary["metadata"]["config"]);
    REQUIRE(invoke({"stoch", "--config", echoed, "--out", s.path("r3").string()}).code == kOk);
    for (const char* f : {"seed_4.csv", "seed_5.csv", "summary.json"})
      CHECK(slurp(s.path("r1") / f) == slurp(s.path("r3") / f));

    std::string header;
    const auto rows = read_csv(s.path("r1") / "seed_4.csv", &header);
    CHECK(header == "time,kind,queue_index,q_1,q_2");
    CHECK_FALSE(rows.empty());
  }

  SECTION("bad seed list") {
    json doc = fig1_doc(0.6);
    doc["stochastic"] = {{"eta", 10}};
    CHECK(invoke({"stoch", "--config", s.write("b.json", doc), "--out", s.path("b").string(), "--seed-list",
                  "1,x"})
              .code == kConfigError);
  }
}

TEST_CASE("find-dcr", "[cli][find]") {
  Scratch s;
  const auto r = invoke({"find-dcr", "--config", s.write("f.json", fig5_doc(10)), "--tol", "0.001"});
  REQUIRE(r.code == kOk);
  const json out = json::parse(r.out);
  CHECK(out["delta_cr_numeric"].get<double>() == Approx(0.3618).margin(0.02));
  CHECK(out["delta_cr_closed_form"].get<double>() == Approx(0.3617).margin(1e-3));
  CHECK(out["tol"] == 0.001);
  CHECK(out["metadata"]["config"]["find_dcr"]["tol"] == 0.001);

  json bad = fig5_doc(10);
  bad["find_dcr"] = {{"lo", 1.0}, {"hi", 2.0}};
  CHECK(invoke({"find-dcr", "--config", s.write("g.json", bad)}).code == kConfigError);
  CHECK(invoke({"find-dcr", "--config", s.write("h.json", fig5_doc(5))}).code == kConfigError);
}

TEST_CASE("sweep", "[cli][sweep]") {
  Scratch s;

  SECTION("single point matches analyze") {
    json doc = fig5_doc(10);
    doc["sweep"] = {{"c_min", 10}, {"c_max", 10}, {"steps", 1}, {"tol", 1e-3}};
    REQUIRE(invoke({"sweep", "--config", s.write("one.json", doc), "--out", s.path("one.csv").string()}).code ==
            kOk);
    std::string header;
    const auto rows = read_csv(s.path("one.csv"), &header);
    CHECK(header == "c,delta_cr_numeric,delta_cr_closed_form");
    REQUIRE(rows.size() == 1);
    const json a = json::parse(invoke({"analyze", "--config", s.path("one.json").string()}).out);
    CHECK(rows[0][2] == a["delta_cr"]["value"].get<double>());
    CHECK(std::abs(rows[0][1] - rows[0][2]) < 0.02);
  }

  SECTION("figure left panels reproduce the reference endpoints") {
    struct Case {
      const char* file;
      double first, last;
    };
    for (const Case& c : {Case{"fig05.json", 0.4326, 0.3618}, Case{"fig12.json", 0.4286, 0.4723}}) {
      json doc = load_figure(c.file);
      json left = doc["panels"][0];
      doc.erase("panels");
      doc.merge_patch(left);
      doc["sweep"]["steps"] = 2;
      const auto r = invoke({"sweep", "--config", s.write("fig.json", doc), "--out", s.path("fig.csv").string()});
      REQUIRE(r.code == kOk);
      const auto rows = read_csv(s.path("fig.csv"));
      REQUIRE(rows.size() == 2);
      CHECK(rows[0][1] == Approx(c.first).margin(0.02));
      CHECK(rows[1][1] == Approx(c.last).margin(0.02));
    }
  }

  SECTION("boundary rows have an empty closed-form cell") {
    json doc = fig5_doc(4);
    doc["sweep"] = {{"c_min", 4}, {"c_max", 6}, {"steps", 3}};
    REQUIRE(invoke({"sweep", "--config", s.write("b.json", doc), "--out", s.path("b.csv").string()}).code == kOk);
    const std::string text = slurp(s.path("b.csv"));
    CHECK(text.find("\n5,") != std::string::npos);
    const auto rows = read_csv(s.path("b.csv"));
    CHECK(std::isnan(rows[1][2]));
    CHECK_FALSE(std::isnan(rows[1][1]));
  }
}

TEST_CASE("figure manifest covers every figure", "[cli][figures]") {
  std::ifstream is(std::string(MFQ_FIGURES_DIR) + "/manifest.json");
  const json manifest = json::parse(is);
  std::vector<int> seen;
  for (const auto& entry : manifest["figures"]) {
    seen.push_back(entry["figure"].get<int>());
    const std::string file = std::string(MFQ_FIGURES_DIR) + "/" + entry["config"].get<std::string>();
    std::ifstream cs(file);
    REQUIRE(cs.good());
    const json doc = json::parse(cs);
    for (const auto& panel : expand_panels(doc)) CHECK_NOTHROW(parse_config(panel));
    const std::string cmd = entry["command"];
    CHECK((cmd == "simulate" || cmd == "sweep"));
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
}
