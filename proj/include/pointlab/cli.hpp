#pragma once

// Batch experiment runner behind the `lab` tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointlab/model.hpp"

namespace pointlab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { lyapunov, dichotomy, spectrum, decay, dynamics, bands };
enum class Format { csv, json };

struct ExperimentConfig {
  Experiment experiment = Experiment::lyapunov;
  std::filesystem::path model_path;
  std::optional<DisorderMeasure> model;  // used instead of model_path when set
  std::filesystem::path output;
  Format format = Format::csv;
  double emin = 0.5;
  double emax = 10.0;
  int points = 20;
  int cells = 100;
  std::int64_t steps = 100000;
  int replicas = 32;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  // dynamics
  double p = 2.0;
  double kmin = -1.0;
  double kmax = 1.0;
  std::vector<double> times{1.0, 10.0, 100.0, 1000.0, 10000.0};
  double tol = 1e-10;
};

// Raised for invalid configuration; field() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

// Applies LAB_SEED when set.
void apply_environment(ExperimentConfig& config);

// FNV-1a over the result-determining fields (not threads or output path).
std::string config_hash(const ExperimentConfig& config, const DisorderMeasure& measure);

// 0 success, 2 configuration error, 3 consistency error (diagnostic JSON
// written to <output>.diagnostic.json), 1 anything else.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace pointlab::cli
