#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "wdsel/autodiff.hpp"
#include "wdsel/imu_sim.hpp"
#include "wdsel/metrics.hpp"
#include "wdsel/model.hpp"
#include "wdsel/signal.hpp"
#include "wdsel/wavelet.hpp"

namespace wdsel {

struct TrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 16;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double grad_clip = 5.0;  // global L2 norm; 0 disables
  double lambda_disp = 1.0;
  double lambda_sparse = 0.01;
  double lambda_encode = 0.1;
  // Relative to max(y_hat): entries below epsilon * max get no task gradient.
  double epsilon_truncation = 0.05;
  int bank_size = 16;
  bool crm_enabled = true;
  std::uint64_t seed = 1;
  double entropy_floor = 1e-6;
  DenoiseConfig denoise;

  void validate() const;
};

struct StepLosses {
  double total = 0.0;
  double l_attitude = 0.0;
  double l_disp = 0.0;
  double r_sparse = 0.0;
  double r_encode = 0.0;
  double s2 = 0.0;
  bool encode_saturated = false;
  double top1_mass = 0.0;  // batch mean
  double fsm_sum = 0.0;    // over windows whose selection matches the oracle
  std::size_t fsm_count = 0;
};

struct EpochStats {
  double total_loss = 0.0;
  double l_attitude = 0.0;
  double l_disp = 0.0;
  double r_sparse = 0.0;
  double r_encode = 0.0;
  double s2 = 0.0;
  double top1_mass = 0.0;
  double fsm_score = 0.0;
  std::size_t fsm_samples = 0;
  // Hard-selection guidance errors on the validation set (NaN without one).
  double val_attitude_mae_deg = std::numeric_limits<double>::quiet_NaN();
  double val_position_mae_m = std::numeric_limits<double>::quiet_NaN();
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double initial_s2 = 0.0;
};

/// Noisy window in network layout together with every bank member's denoised
/// version (also in network layout). Building this once per window keeps the
/// wavelet transforms out of the training loop.
struct PreparedWindow {
  std::size_t length = 0;
  std::vector<double> input;       // 6 x L
  std::vector<float> bank_stack;   // C x (6 L)
  GuidanceVector label{};
  // Bank index with the lowest MSE against the clean reference (if known).
  std::optional<std::size_t> oracle_best;
  std::vector<double> bank_mse;
};

PreparedWindow prepare_window(const Signal& noisy, const Signal* clean, const GuidanceVector& label,
                              const std::vector<WaveletBasis>& bank, const DenoiseConfig& denoise);
std::vector<PreparedWindow> prepare_dataset(const std::vector<WindowSample>& samples,
                                            const std::vector<WaveletBasis>& bank,
                                            const DenoiseConfig& denoise);
GuidanceVector label_of(const WindowSample& sample);

/// Mean squared error over all samples of all channels (SI units).
double signal_mse(const Signal& a, const Signal& b);

/// sum_j w[j] denoise(window, bank[j]) with w from truncated_selection_weights.
Signal enhance_soft(const Signal& window, const std::vector<double>& y_hat,
                    const std::vector<WaveletBasis>& bank, const DenoiseConfig& denoise,
                    double epsilon = 0.0);

struct HardSelection {
  Signal enhanced;
  std::size_t index = 0;
  std::vector<double> y_hat;
  std::vector<double> features;
};

/// argmax of the classifier (lowest index on ties), then single-wavelet denoising.
HardSelection enhance_hard(const Signal& window, const WdsNet& model,
                           const std::vector<WaveletBasis>& bank, const DenoiseConfig& denoise);

/// Builds the batch loss and runs backward; gradients are left in the model's
/// parameter tensors.
StepLosses loss_and_gradients(const std::vector<const PreparedWindow*>& batch, WdsNet& model,
                              const TrainConfig& config);

/// loss_and_gradients, gradient clipping, then one optimizer update.
StepLosses training_step(const std::vector<const PreparedWindow*>& batch, WdsNet& model,
                         const TrainConfig& config, ad::MomentumSgd& optimizer);

/// Loss of a batch without touching the weights (used by the descent checks).
StepLosses evaluate_loss(const std::vector<const PreparedWindow*>& batch, WdsNet& model,
                         const TrainConfig& config);

struct TrainResult {
  WdsNet model;
  TrainReport report;
};

TrainResult train(const std::vector<PreparedWindow>& data, const TrainConfig& config,
                  const ModelConfig& model_config,
                  const std::vector<PreparedWindow>* validation = nullptr);

/// Hard-path guidance predictions (selected wavelet -> head) for prepared windows.
std::vector<GuidanceVector> predict_guidance(const WdsNet& model,
                                             const std::vector<PreparedWindow>& data);
/// Selected bank index for each prepared window.
std::vector<std::size_t> select_indices(const WdsNet& model, const std::vector<PreparedWindow>& data);

}  // namespace wdsel
