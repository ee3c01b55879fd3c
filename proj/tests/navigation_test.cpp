#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "wdsel/error.hpp"
#include "wdsel/imu_sim.hpp"
#include "wdsel/navigation.hpp"

using namespace wdsel;

namespace {

Signal constant_signal(std::size_t n, double rate, const Eigen::Vector3d& accel,
                       const Eigen::Vector3d& gyro) {
  Signal s = Signal::zeros(6, n, rate);
  for (std::size_t k = 0; k < n; ++k)
    for (int a = 0; a < 3; ++a) {
      s.channels[a][k] = accel[a];
      s.channels[3 + a][k] = gyro[a];
    }
  return s;
}

}  // namespace

TEST_CASE("integrate_attitude examples") {
  const Eigen::Quaterniond q0 = from_euler_zyx(0.4, 0.1, -0.2);
  const auto still = integrate_attitude(std::vector<Eigen::Vector3d>(50, Eigen::Vector3d::Zero()), 0.01, q0);
  REQUIRE(still.size() == 51);
  for (const auto& q : still) CHECK(q.angularDistance(q0) < 1e-12);

  const auto half_turn = integrate_attitude(
      std::vector<Eigen::Vector3d>(1000, Eigen::Vector3d(0, 0, std::numbers::pi)), 1e-3,
      Eigen::Quaterniond::Identity());
  const double yaw = std::abs(euler_zyx(half_turn.back())[0]) * 180.0 / std::numbers::pi;
  CHECK(std::abs(yaw - 180.0) < 0.01);

  const Eigen::Vector3d axis = Eigen::Vector3d(1, 2, -1).normalized();
  const auto first = integrate_attitude(std::vector<Eigen::Vector3d>(300, 0.3 * axis), 0.01,
                                        Eigen::Quaterniond::Identity());
  const auto second = integrate_attitude(std::vector<Eigen::Vector3d>(200, 0.5 * axis), 0.01, first.back());
  const Eigen::AngleAxisd total(second.back());
  CHECK(std::abs(total.angle() - (0.9 + 1.0)) < 1e-6);

  CHECK_THROWS_AS(integrate_attitude({}, 0.01, Eigen::Quaterniond(2, 0, 0, 0)), Error);
  CHECK_THROWS_AS(integrate_attitude({}, 0.0, Eigen::Quaterniond::Identity()), Error);
}

TEST_CASE("attitude integration keeps unit norm and reverses exactly") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::Vector3d> gyro(2000);
  for (auto& w : gyro) w = {n(rng), n(rng), n(rng)};
  const Eigen::Quaterniond q0 = from_euler_zyx(1.0, 0.3, -0.5);
  const auto fwd = integrate_attitude(gyro, 0.005, q0);
  for (const auto& q : fwd) CHECK(std::abs(q.norm() - 1.0) < 1e-9);
  std::vector<Eigen::Vector3d> back(gyro.rbegin(), gyro.rend());
  for (auto& w : back) w = -w;
  const auto ret = integrate_attitude(back, 0.005, fwd.back());
  CHECK(ret.back().angularDistance(q0) < 1e-6);
}

TEST_CASE("strapdown static and equivariance") {
  const Signal still = constant_signal(2000, 200.0, {0, 0, kStandardGravity}, {0, 0, 0});
  const Eigen::Vector3d p0(1, -2, 0.5);
  const auto poses = strapdown(still, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), p0);
  CHECK(poses.size() == 2000);
  for (const auto& pose : poses) CHECK((pose.p - p0).norm() < 1e-6);

  const auto gt = generate_trajectory({3.0, 200.0, MotionClass::spline3d, 1.0}, 3);
  Signal imu = ideal_imu(gt);
  NoiseModel noise;
  noise.white_noise_density = 0.01;
  imu = inject_noise(imu, noise, noise, 4);
  const Eigen::Vector3d v0(0.1, 0.2, -0.1), u(0.3, -0.4, 0.05), shift(5, 6, 7);
  const auto base = strapdown(imu, gt.orientations[0], v0, Eigen::Vector3d::Zero());
  const auto moved = strapdown(imu, gt.orientations[0], v0, shift);
  const auto boosted = strapdown(imu, gt.orientations[0], v0 + u, Eigen::Vector3d::Zero());
  const double T = base.back().t;
  CHECK((moved.back().p - base.back().p - shift).norm() < 1e-9);
  CHECK((boosted.back().p - base.back().p - u * T).norm() < 1e-9);
}

TEST_CASE("strapdown reconstructs a circle") {
  const double r = 2.0, omega = 0.8, rate = 200.0;
  const auto gt = circular_trajectory({0, 0, 0}, r, omega, 0.0, 5.0, rate);
  const Signal imu = ideal_imu(gt);
  const auto poses = strapdown(imu, gt.orientations[0], {0, r * omega, 0}, gt.positions[0]);
  for (const auto& pose : poses) CHECK(std::abs(Eigen::Vector2d(pose.p.x(), pose.p.y()).norm() - r) < 0.01 * r);
}

TEST_CASE("position drift grows super-linearly under noise") {
  NoiseModel accel, gyro;
  accel.white_noise_density = 0.02;
  gyro.white_noise_density = 0.005;
  int super_linear = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Signal noisy = static_capture(4000, 200.0, accel, gyro, seed);
    const auto poses = strapdown(noisy, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(),
                                 Eigen::Vector3d::Zero());
    const double at_t = poses[1999].p.norm();
    const double at_2t = poses[3999].p.norm();
    if (at_2t > 2.0 * at_t) ++super_linear;
  }
  CHECK(super_linear >= 8);
}

TEST_CASE("window attitude change") {
  const Signal still = constant_signal(100, 100.0, {0, 0, kStandardGravity}, {0, 0, 0});
  CHECK(window_attitude_change(still, Eigen::Quaterniond::Identity()).delta.norm() == 0.0);

  const Signal yawing = constant_signal(401, 200.0, {0, 0, kStandardGravity}, {0, 0, 0.1});
  const auto change = window_attitude_change(yawing, Eigen::Quaterniond::Identity());
  CHECK(std::abs(change.delta[0] - 0.2) < 1e-6);
  CHECK(std::abs(change.delta[1]) < 1e-9);
  CHECK_FALSE(change.near_gimbal_lock);

  // start at yaw 179 deg, turn +2 deg: short way is +2 deg, not -358
  const double start = 179.0 * std::numbers::pi / 180.0;
  const double rate_z = 2.0 * std::numbers::pi / 180.0;
  const Signal crossing = constant_signal(201, 200.0, {0, 0, kStandardGravity}, {0, 0, rate_z});
  const auto wrapped = window_attitude_change(crossing, from_euler_zyx(start, 0, 0));
  CHECK(std::abs(wrapped.delta[0] - rate_z) < 1e-9);

  const auto gimbal = window_attitude_change(still, from_euler_zyx(0, 89.5 * std::numbers::pi / 180.0, 0));
  CHECK(gimbal.near_gimbal_lock);
}

TEST_CASE("window displacement") {
  const Signal still = constant_signal(400, 200.0, {0, 0, kStandardGravity}, {0, 0, 0});
  CHECK(window_displacement(still, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero()).norm() < 1e-6);

  const Eigen::Vector3d a(0.5, -0.2, 0.3);
  const Signal pushed = constant_signal(401, 200.0, a + Eigen::Vector3d(0, 0, kStandardGravity), {0, 0, 0});
  const Eigen::Vector3d d = window_displacement(pushed, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero());
  const Eigen::Vector3d expected = a * 2.0 * 2.0 / 2.0;
  CHECK((d - expected).norm() < 0.005 * expected.norm());
}
