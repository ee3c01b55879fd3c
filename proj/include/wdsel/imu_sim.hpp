#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "wdsel/signal.hpp"

namespace wdsel {

inline constexpr double kStandardGravity = 9.80665;

inline Eigen::Vector3d default_gravity() { return {0.0, 0.0, -kStandardGravity}; }

/// Sampled truth. orientations[k] maps body-frame vectors into the world frame
/// (Hamilton convention), positions are world-frame, z up.
struct GroundTruth {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Quaterniond> orientations;
  double sample_rate = 0.0;

  std::size_t size() const { return t.size(); }
  void validate() const;
  GroundTruth slice(std::size_t begin, std::size_t count) const;
};

enum class MotionClass { stationary, linear, circular, spline3d };

std::string_view to_string(MotionClass motion);
MotionClass motion_class_from_string(std::string_view name);

struct TrajectorySpec {
  double duration = 10.0;
  double rate = 200.0;
  MotionClass motion = MotionClass::spline3d;
  double scale = 1.0;
};

GroundTruth generate_trajectory(const TrajectorySpec& spec, std::uint64_t seed);

/// Linear trajectory p0 + v t with the given constant orientation.
GroundTruth linear_trajectory(const Eigen::Vector3d& p0, const Eigen::Vector3d& velocity,
                              double duration, double rate,
                              const Eigen::Quaterniond& orientation = Eigen::Quaterniond::Identity());

GroundTruth circular_trajectory(const Eigen::Vector3d& center, double radius, double omega,
                                double phase, double duration, double rate,
                                const Eigen::Quaterniond& orientation = Eigen::Quaterniond::Identity());

/// Noise-free body-frame specific force and angular rate.
Signal ideal_imu(const GroundTruth& truth, const Eigen::Vector3d& gravity = default_gravity());

struct NoiseModel {
  double quantization_step = 0.0;
  double white_noise_density = 0.0;
  double bias_instability = 0.0;
  double bias_corr_time = 0.0;
  double initial_bias = 0.0;

  void validate() const;
  bool is_zero() const;
};

/// Stationary standard deviation of the Gauss-Markov bias for a target
/// bias-instability readout B (see README, "Bias instability surrogate").
double gauss_markov_sigma(double bias_instability);

/// Error-feedback quantizer: outputs are multiples of q and the running sum of
/// the quantization error stays within q/2.
std::vector<double> quantize(const std::vector<double>& x, double step);

Signal inject_noise(const Signal& clean, const NoiseModel& accel, const NoiseModel& gyro,
                    std::uint64_t seed);

/// Z-Y-X Euler angles (yaw, pitch, roll) of a body-to-world rotation.
Eigen::Vector3d euler_zyx(const Eigen::Quaterniond& q);
Eigen::Quaterniond from_euler_zyx(double yaw, double pitch, double roll);
double wrap_angle(double a);

struct SimConfig {
  double rate = 200.0;
  std::vector<MotionClass> motions = {MotionClass::stationary, MotionClass::linear,
                                      MotionClass::circular, MotionClass::spline3d};
  double scale = 1.0;
  NoiseModel accel;
  NoiseModel gyro;
};

struct WindowSample {
  std::size_t window_id = 0;
  MotionClass motion = MotionClass::stationary;
  Signal noisy;
  Signal clean;
  Eigen::Vector3d delta_attitude = Eigen::Vector3d::Zero();  // dyaw, dpitch, droll
  Eigen::Vector3d delta_position = Eigen::Vector3d::Zero();
  GroundTruth truth;
  Eigen::Vector3d initial_velocity = Eigen::Vector3d::Zero();
};

/// Labels read from truth: Euler difference (wrapped) and world displacement
/// between the first and last sample.
void label_window(WindowSample& sample);

std::vector<WindowSample> make_dataset(std::size_t n_windows, std::size_t window_len,
                                       const SimConfig& config, std::uint64_t seed);

/// Per-item seed derived from a base seed and an index (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Stationary capture with identity orientation and the given noise.
Signal static_capture(std::size_t samples, double rate, const NoiseModel& accel,
                      const NoiseModel& gyro, std::uint64_t seed);

}  // namespace wdsel
