#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "wdsel/imu_sim.hpp"
#include "wdsel/signal.hpp"

namespace wdsel {

struct Pose {
  double t = 0.0;
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
};

/// Rotation by the rotation vector `rotvec` (angle = norm).
Eigen::Quaterniond quat_exp(const Eigen::Vector3d& rotvec);

/// Each gyro sample is held for dt: q[k+1] = q[k] * exp(w[k] dt). Returns
/// gyro.size() + 1 orientations, the first being q0.
std::vector<Eigen::Quaterniond> integrate_attitude(const std::vector<Eigen::Vector3d>& gyro,
                                                   double dt, const Eigen::Quaterniond& q0);

/// Orientation at every sample instant, stepping with the mean rate of each
/// interval's endpoints. Returns gyro.size() orientations.
std::vector<Eigen::Quaterniond> integrate_attitude_samples(
    const std::vector<Eigen::Vector3d>& gyro, double dt, const Eigen::Quaterniond& q0);

std::vector<Eigen::Vector3d> gyro_vectors(const Signal& signal);
std::vector<Eigen::Vector3d> accel_vectors(const Signal& signal);

/// Pose at every sample; trapezoidal velocity and position integration.
std::vector<Pose> strapdown(const Signal& signal, const Eigen::Quaterniond& q0,
                            const Eigen::Vector3d& v0, const Eigen::Vector3d& p0,
                            const Eigen::Vector3d& gravity = default_gravity());

struct AttitudeChange {
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();  // dyaw, dpitch, droll
  bool near_gimbal_lock = false;
};

AttitudeChange window_attitude_change(const Signal& window, const Eigen::Quaterniond& q0);

Eigen::Vector3d window_displacement(const Signal& window, const Eigen::Quaterniond& q0,
                                    const Eigen::Vector3d& v0,
                                    const Eigen::Vector3d& gravity = default_gravity());

}  // namespace wdsel
