#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "pointlab/cli.hpp"
#include "pointlab/model_io.hpp"

using namespace pointlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pointlab_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// Data rows of a CSV output, header lines skipped.
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  int skipped = 0;
  while (std::getline(f, line)) {
    if (skipped < 2) {
      ++skipped;
      continue;
    }
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

int run(cli::ExperimentConfig c, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(c, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

cli::ExperimentConfig config(cli::Experiment e, const DisorderMeasure& m, const fs::path& out) {
  cli::ExperimentConfig c;
  c.experiment = e;
  c.model = m;
  c.output = out;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("dichotomy on a gauge model") {
    TempDir dir;
    const fs::path model = dir.path / "gauge.json";
    save_measure(preset_gauge({{0.5, 0.5}, {2.0, 0.5}}, 1.0), model);
    cli::ExperimentConfig c;
    c.experiment = cli::Experiment::dichotomy;
    c.model_path = model;
    c.output = dir.path / "verdict.json";
    REQUIRE(run(c) == 0);
    const auto j = nlohmann::json::parse(slurp(c.output));
    CHECK(j["verdict"] == "AbsolutelyContinuous");
    CHECK(j["reason"] == "FreeEquivalent");
    CHECK(j["_meta"]["version"] == cli::kVersion);
  }

  TEST_CASE("lyapunov on the free model") {
    TempDir dir;
    auto c = config(cli::Experiment::lyapunov, preset_delta({{0.0, 1.0}}, 1.0), dir.path / "l.csv");
    c.points = 10;
    c.steps = 20000;
    c.replicas = 4;
    REQUIRE(run(c) == 0);
    const auto text = slurp(c.output);
    CHECK(text.rfind("# pointlab 0.1.0 config_hash=", 0) == 0);
    const auto rows = csv_rows(c.output);
    REQUIRE(rows.size() == 10);
    for (const auto& r : rows) CHECK(r[1] < 5e-3);
  }

  TEST_CASE("spectrum on a free Neumann box") {
    TempDir dir;
    auto c = config(cli::Experiment::spectrum, preset_delta({{0.0, 1.0}}, 1.0), dir.path / "s.csv");
    c.cells = 10;
    c.emin = -0.5;
    c.emax = 3.0;
    REQUIRE(run(c) == 0);
    const auto rows = csv_rows(c.output);
    std::vector<double> expected;
    for (int k = 0; std::pow(k * std::numbers::pi / 10.0, 2) <= 3.0; ++k) {
      expected.push_back(std::pow(k * std::numbers::pi / 10.0, 2));
    }
    REQUIRE(rows.size() == expected.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i][1] == doctest::Approx(expected[i]).epsilon(1e-9).scale(1.0));
    }
  }

  TEST_CASE("outputs are byte-identical across runs and thread counts") {
    TempDir dir;
    const auto m = preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0);
    for (auto e : {cli::Experiment::lyapunov, cli::Experiment::spectrum, cli::Experiment::decay,
                   cli::Experiment::dynamics}) {
      auto c = config(e, m, dir.path / "a.out");
      c.steps = 5000;
      c.replicas = 3;
      c.points = 4;
      c.cells = 60;
      c.emin = 0.5;
      c.emax = 3.0;
      c.kmin = -1.0;
      c.kmax = 1.0;
      c.times = {1.0, 10.0};
      c.seed = 99;
      if (e == cli::Experiment::spectrum) c.format = cli::Format::json;
      REQUIRE(run(c) == 0);
      auto d = c;
      d.output = dir.path / "b.out";
      d.threads = 3;
      REQUIRE(run(d) == 0);
      CHECK(slurp(c.output) == slurp(d.output));
    }
  }

  TEST_CASE("config errors exit 2 and name the field") {
    TempDir dir;
    const auto m = preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0);
    std::string err;
    auto c = config(cli::Experiment::lyapunov, m, dir.path / "x.csv");
    c.points = 1;
    CHECK(run(c, &err) == 2);
    CHECK(err.find("points") != std::string::npos);

    c = config(cli::Experiment::spectrum, m, dir.path / "x.csv");
    c.cells = 1;
    CHECK(run(c, &err) == 2);
    CHECK(err.find("cells") != std::string::npos);

    c = config(cli::Experiment::lyapunov, m, dir.path / "x.csv");
    c.emin = 5.0;
    c.emax = 1.0;
    CHECK(run(c, &err) == 2);
    CHECK(err.find("emin") != std::string::npos);

    c = config(cli::Experiment::dichotomy, m, dir.path / "x.json");
    c.model.reset();
    c.model_path = dir.path / "missing.json";
    CHECK(run(c, &err) == 2);
    CHECK(err.find("model") != std::string::npos);

    std::ofstream(dir.path / "bad.json") << R"({"atoms": [{"ell": -1, "weight": 1, "kind": "trivial"}]})";
    c.model_path = dir.path / "bad.json";
    CHECK(run(c, &err) == 2);
    CHECK(err.find("ell") != std::string::npos);

    c = config(cli::Experiment::lyapunov,
               DisorderMeasure({{1.0, VertexCondition::separating(1, 0, 1, 0), 1.0}}),
               dir.path / "x.csv");
    CHECK(run(c, &err) == 2);
    CHECK(err.find("model") != std::string::npos);

    CHECK_THROWS_AS(cli::parse_experiment("spectra"), cli::ConfigError);
    CHECK(!fs::exists(dir.path / "x.csv"));
  }

  TEST_CASE("bands") {
    TempDir dir;
    auto c = config(cli::Experiment::bands, preset_delta({{0.0, 1.0}}, 1.0), dir.path / "b.csv");
    c.emin = 0.0;
    c.emax = 40.0;
    c.points = 41;
    REQUIRE(run(c) == 0);
    for (const auto& r : csv_rows(c.output)) CHECK(r[2] == 1.0);

    c.emin = -5.0;
    c.emax = -0.1;
    c.points = 10;
    REQUIRE(run(c) == 0);
    for (const auto& r : csv_rows(c.output)) {
      CHECK(r[2] == 0.0);
      CHECK(r[1] > 2.0);
    }

    c = config(cli::Experiment::bands, preset_delta({{1.0, 1.0}}, 1.0), dir.path / "d.csv");
    c.emin = 0.01;
    c.emax = 30.0;
    c.points = 300;
    REQUIRE(run(c) == 0);
    for (const auto& r : csv_rows(c.output)) {
      const double w = std::sqrt(r[0]);
      const double tr = 2.0 * std::cos(w) + std::sin(w) / w;
      CHECK(r[1] == doctest::Approx(tr).epsilon(1e-9));
      CHECK((r[2] == 1.0) == (std::abs(tr) <= 2.0));
    }

    c.model = preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0);
    std::string err;
    CHECK(run(c, &err) == 2);
    CHECK(err.find("model") != std::string::npos);
  }

  TEST_CASE("LAB_SEED overrides the seed") {
    cli::ExperimentConfig c;
    c.seed = 3;
    ::setenv("LAB_SEED", "12345", 1);
    cli::apply_environment(c);
    CHECK(c.seed == 12345);
    ::setenv("LAB_SEED", "12x", 1);
    CHECK_THROWS_AS(cli::apply_environment(c), cli::ConfigError);
    ::unsetenv("LAB_SEED");
    cli::apply_environment(c);
    CHECK(c.seed == 12345);
  }

  TEST_CASE("config hash ignores threads and output path") {
    const auto m = preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0);
    auto a = config(cli::Experiment::lyapunov, m, "a.csv");
    auto b = a;
    b.threads = 7;
    b.output = "elsewhere.csv";
    CHECK(cli::config_hash(a, m) == cli::config_hash(b, m));
    b.seed = 2;
    CHECK(cli::config_hash(a, m) != cli::config_hash(b, m));
  }

  TEST_CASE("no temporary files are left behind") {
    TempDir dir;
    auto c = config(cli::Experiment::bands, preset_delta({{1.0, 1.0}}, 1.0), dir.path / "b.csv");
    REQUIRE(run(c) == 0);
    c.format = cli::Format::json;
    c.output = dir.path / "b.json";
    REQUIRE(run(c) == 0);
    c.model = preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0);
    c.output = dir.path / "c.json";
    CHECK(run(c) == 2);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir.path)) names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"b.csv", "b.json"});
  }
}
