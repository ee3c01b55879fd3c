#include "wdsel/navigation.hpp"

#include <cmath>
#include <numbers>

#include "wdsel/error.hpp"

namespace wdsel {

namespace {

void check_unit(const Eigen::Quaterniond& q0) {
  if (!std::isfinite(q0.norm()) || std::abs(q0.norm() - 1.0) > 1e-9)
    fail(ErrorKind::input, "initial quaternion is not unit length (norm " +
                               std::to_string(q0.norm()) + ")");
}

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::input, "dt must be positive");
}

}  // namespace

Eigen::Quaterniond quat_exp(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  if (angle == 0.0) return Eigen::Quaterniond::Identity();
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotvec / angle));
}

std::vector<Eigen::Quaterniond> integrate_attitude(const std::vector<Eigen::Vector3d>& gyro,
                                                   double dt, const Eigen::Quaterniond& q0) {
  check_dt(dt);
  check_unit(q0);
  std::vector<Eigen::Quaterniond> out;
  out.reserve(gyro.size() + 1);
  out.push_back(q0);
  for (const auto& w : gyro) out.push_back((out.back() * quat_exp(w * dt)).normalized());
  return out;
}

std::vector<Eigen::Quaterniond> integrate_attitude_samples(
    const std::vector<Eigen::Vector3d>& gyro, double dt, const Eigen::Quaterniond& q0) {
  check_dt(dt);
  check_unit(q0);
  std::vector<Eigen::Quaterniond> out;
  if (gyro.empty()) return out;
  out.reserve(gyro.size());
  out.push_back(q0);
  for (std::size_t k = 0; k + 1 < gyro.size(); ++k) {
    const Eigen::Vector3d mean_rate = 0.5 * (gyro[k] + gyro[k + 1]);
    out.push_back((out.back() * quat_exp(mean_rate * dt)).normalized());
  }
  return out;
}

std::vector<Eigen::Vector3d> gyro_vectors(const Signal& s) {
  s.validate_imu();
  std::vector<Eigen::Vector3d> out(s.length());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = {s.channels[3][k], s.channels[4][k], s.channels[5][k]};
  return out;
}

std::vector<Eigen::Vector3d> accel_vectors(const Signal& s) {
  s.validate_imu();
  std::vector<Eigen::Vector3d> out(s.length());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = {s.channels[0][k], s.channels[1][k], s.channels[2][k]};
  return out;
}

std::vector<Pose> strapdown(const Signal& signal, const Eigen::Quaterniond& q0,
                            const Eigen::Vector3d& v0, const Eigen::Vector3d& p0,
                            const Eigen::Vector3d& gravity) {
  const auto gyro = gyro_vectors(signal);
  const auto accel = accel_vectors(signal);
  const double dt = 1.0 / signal.sample_rate;
  const auto q = integrate_attitude_samples(gyro, dt, q0);
  std::vector<Pose> poses(q.size());
  Eigen::Vector3d a_prev = q[0] * accel[0] + gravity;
  poses[0] = Pose{0.0, q[0], p0, v0};
  for (std::size_t k = 1; k < q.size(); ++k) {
    const Eigen::Vector3d a = q[k] * accel[k] + gravity;
    Pose& cur = poses[k];
    const Pose& prev = poses[k - 1];
    cur.t = static_cast<double>(k) * dt;
    cur.q = q[k];
    cur.v = prev.v + 0.5 * (a_prev + a) * dt;
    cur.p = prev.p + 0.5 * (prev.v + cur.v) * dt;
    a_prev = a;
  }
  return poses;
}

AttitudeChange window_attitude_change(const Signal& window, const Eigen::Quaterniond& q0) {
  const auto q = integrate_attitude_samples(gyro_vectors(window), 1.0 / window.sample_rate, q0);
  AttitudeChange out;
  if (q.empty()) return out;
  const Eigen::Vector3d e0 = euler_zyx(q.front());
  const Eigen::Vector3d e1 = euler_zyx(q.back());
  for (int a = 0; a < 3; ++a) out.delta[a] = wrap_angle(e1[a] - e0[a]);
  const double limit = 89.0 * std::numbers::pi / 180.0;
  out.near_gimbal_lock = std::abs(e0[1]) > limit || std::abs(e1[1]) > limit;
  return out;
}

Eigen::Vector3d window_displacement(const Signal& window, const Eigen::Quaterniond& q0,
                                    const Eigen::Vector3d& v0, const Eigen::Vector3d& gravity) {
  const auto poses = strapdown(window, q0, v0, Eigen::Vector3d::Zero(), gravity);
  return poses.back().p - poses.front().p;
}

}  // namespace wdsel
