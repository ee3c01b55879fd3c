#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wdsel/allan.hpp"
#include "wdsel/config.hpp"
#include "wdsel/model.hpp"
#include "wdsel/pipeline.hpp"

namespace wdsel {

namespace fs = std::filesystem;

// ---- datasets ----

struct Dataset {
  ExperimentConfig config;
  std::vector<WindowSample> train;
  std::vector<WindowSample> validation;
  std::vector<WindowSample> test;
  Signal static_capture;  // empty when simulator.static_samples is 0
};

/// All windows come from one make_dataset call, split in order
/// train | validation | test.
Dataset simulate(const ExperimentConfig& config);

/// Directory layout: config.json, manifest.json, labels.csv, static.csv and
/// windows/<id>_{noisy,clean,truth}.csv.
void write_dataset(const fs::path& dir, const Dataset& data);
Dataset read_dataset(const fs::path& dir);

// ---- training ----

struct TrainedArm {
  bool crm_enabled = true;
  WdsNet model;
  TrainReport report;
};

struct TrainingRun {
  TrainedArm primary;
  std::optional<TrainedArm> ablation;  // opposite crm_enabled, same seed
};

TrainingRun train_arms(const ExperimentConfig& config, const Dataset& data);

/// model.ckpt + train_report.csv (+ ablation/ for the second arm), config.json
/// and manifest.json.
void write_training(const fs::path& dir, const ExperimentConfig& config, const TrainingRun& run);
/// Reads the models back; the config is taken from the model directory.
struct LoadedModels {
  ExperimentConfig config;
  std::vector<TrainedArm> arms;  // primary first; reports are not restored
};
LoadedModels read_training(const fs::path& dir);

void write_train_report_csv(const fs::path& path, const TrainReport& report);

// ---- evaluation ----

/// Strapdown-based errors of one window against its truth.
struct WindowNavError {
  double attitude_mae_deg = 0.0;
  double position_mae_m = 0.0;
  std::optional<double> frechet_normalized;  // empty for degenerate truth paths
};

WindowNavError navigation_error(const Signal& signal, const WindowSample& window,
                                std::size_t resample_points = 200);

struct MethodScores {
  std::string method;
  double attitude_mae_deg = 0.0;  // medians over test windows
  double position_mae_m = 0.0;
  double frechet_normalized = 0.0;
  std::size_t windows = 0;
  std::size_t frechet_windows = 0;
  double denoise_mse = 0.0;  // mean against the clean reference
};

struct AllanRow {
  std::string method;
  std::string channel;
  std::optional<NoiseCoefficients> coefficients;
  std::string note;  // analysis error text when extraction failed
};

struct SelectorStats {
  std::string method;
  bool crm_enabled = true;
  double oracle_within_10pct = 0.0;  // fraction of test windows
  double top1_mass = 0.0;
  double s2 = 0.0;
  std::optional<double> silhouette;
  double head_attitude_mae_deg = 0.0;
  double head_position_mae_m = 0.0;
  std::vector<std::size_t> selections;  // per test window
  std::vector<std::size_t> histogram;   // per bank member
};

struct EvaluationResult {
  std::vector<MethodScores> methods;
  std::vector<AllanRow> allan;
  std::vector<SelectorStats> selectors;
  std::vector<std::string> bank;
};

EvaluationResult evaluate(const ExperimentConfig& config, const Dataset& data,
                          const std::vector<TrainedArm>& arms);

/// Signed reduction of a method relative to raw for one Allan coefficient
/// ("qn", "rw", "bi") on one channel; empty when either side is missing.
std::optional<double> allan_reduction(const EvaluationResult& result, const std::string& method,
                                      const std::string& channel, const std::string& coefficient);
const MethodScores& method_scores(const EvaluationResult& result, const std::string& method);
std::string selector_method_name(bool crm_enabled);

/// results.csv, allan.csv, selection.csv, selections.csv, results.json and
/// the resolved config.json. Nothing time-dependent is written.
void write_evaluation(const fs::path& dir, const ExperimentConfig& config,
                      const EvaluationResult& result);

// ---- single-signal operations used by the CLI ----

/// Splits a long recording into windows of `window_length` (the last window
/// absorbs the remainder) and denoises each with the selected wavelet.
struct EnhancedRecording {
  Signal enhanced;
  std::vector<std::size_t> window_starts;
  std::vector<std::size_t> selections;
};

EnhancedRecording enhance_recording(const Signal& signal, const WdsNet& model,
                                    const std::vector<WaveletBasis>& bank,
                                    const DenoiseConfig& denoise, std::size_t window_length,
                                    bool soft, double epsilon_truncation);

}  // namespace wdsel
