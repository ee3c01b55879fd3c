#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wdsel/imu_sim.hpp"
#include "wdsel/model.hpp"
#include "wdsel/pipeline.hpp"

namespace wdsel {

struct SimulatorSection {
  SimConfig sim;
  std::size_t window_length = 512;
  std::size_t train_windows = 512;
  std::size_t validation_windows = 64;
  std::size_t test_windows = 128;
  // Long stationary capture used for the Allan comparison.
  std::size_t static_samples = 262144;
  std::uint64_t seed = 1;
};

struct EvaluationSection {
  int allan_points_per_decade = 10;
  std::string baseline = "db4";
  std::size_t resample_points = 200;
  // Also train and evaluate the arm with the opposite crm_enabled setting.
  bool crm_ablation = true;
};

struct PathsSection {
  std::string data;
  std::string model;
  std::string output;
};

/// Whole-run configuration. model.bank_size always follows train.bank_size.
struct ExperimentConfig {
  SimulatorSection simulator;
  ModelConfig model;
  TrainConfig train;
  EvaluationSection evaluation;
  PathsSection paths;

  void validate() const;
};

/// Defaults: tau_b = 10 s; gyro q = 0.001, N = 0.005, B = 0.002;
/// accel q = 0.005, N = 0.02, B = 0.01 (SI units).
ExperimentConfig default_experiment();

/// Parses JSON over the defaults. Unknown keys, wrong types and invalid values
/// raise config errors naming the offending key.
ExperimentConfig parse_experiment(const std::string& json_text);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Fully resolved config as pretty JSON (stable key order).
std::string experiment_json(const ExperimentConfig& config);

}  // namespace wdsel
