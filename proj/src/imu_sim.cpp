#include "wdsel/imu_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wdsel/error.hpp"

namespace wdsel {

namespace {

constexpr std::size_t kMinTrajectorySamples = 64;
constexpr std::size_t kWindowMargin = 16;

std::size_t sample_count(double duration, double rate) {
  if (!(rate > 0.0) || !(duration > 0.0))
    fail(ErrorKind::config, "trajectory duration and rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  if (n < kMinTrajectorySamples)
    fail(ErrorKind::config, "trajectory needs at least " + std::to_string(kMinTrajectorySamples) +
                                " samples, duration*rate gives " + std::to_string(n));
  return n;
}

GroundTruth empty_truth(std::size_t n, double rate) {
  GroundTruth gt;
  gt.sample_rate = rate;
  gt.t.resize(n);
  for (std::size_t k = 0; k < n; ++k) gt.t[k] = static_cast<double>(k) / rate;
  gt.positions.assign(n, Eigen::Vector3d::Zero());
  gt.orientations.assign(n, Eigen::Quaterniond::Identity());
  return gt;
}

Eigen::Quaterniond exp_quat(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-300) return Eigen::Quaterniond::Identity();
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotvec / angle));
}

Eigen::Vector3d log_quat(Eigen::Quaterniond q) {
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v = q.vec();
  const double s = v.norm();
  if (s < 1e-300) return Eigen::Vector3d::Zero();
  return 2.0 * std::atan2(s, q.w()) * v / s;
}

// Smooth random body rate: a few sinusoids per axis.
struct RateProfile {
  std::array<std::array<double, 3>, 3> amplitude{};
  std::array<std::array<double, 3>, 3> frequency{};
  std::array<std::array<double, 3>, 3> phase{};

  Eigen::Vector3d at(double t) const {
    Eigen::Vector3d w;
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c)
        s += amplitude[a][c] * std::sin(2.0 * std::numbers::pi * frequency[a][c] * t + phase[a][c]);
      w[a] = s;
    }
    return w;
  }
};

void fill_orientation(GroundTruth& gt, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RateProfile profile;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      profile.amplitude[a][c] = 0.15 * unit(rng);
      profile.frequency[a][c] = 0.1 + 0.5 * unit(rng);
      profile.phase[a][c] = 2.0 * std::numbers::pi * unit(rng);
    }
  const double yaw0 = std::numbers::pi * (2.0 * unit(rng) - 1.0);
  const double pitch0 = 0.2 * (2.0 * unit(rng) - 1.0);
  const double roll0 = 0.2 * (2.0 * unit(rng) - 1.0);
  Eigen::Quaterniond q = from_euler_zyx(yaw0, pitch0, roll0);
  constexpr int kSubsteps = 8;
  const double dt = 1.0 / gt.sample_rate;
  const double h = dt / kSubsteps;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    gt.orientations[k] = q;
    for (int s = 0; s < kSubsteps; ++s) {
      const double tm = gt.t[k] + (s + 0.5) * h;
      q = (q * exp_quat(profile.at(tm) * h)).normalized();
    }
  }
}

// Natural cubic spline through equally spaced knots, one axis.
struct CubicSpline {
  std::vector<double> y, m;  // knot values and second derivatives
  double step = 1.0;

  CubicSpline(std::vector<double> values, double knot_step) : y(std::move(values)), step(knot_step) {
    const std::size_t n = y.size();
    m.assign(n, 0.0);
    if (n < 3) return;
    // Thomas algorithm on the interior equations m[i-1] + 4 m[i] + m[i+1] = rhs.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double rhs = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (step * step);
      const double denom = 4.0 - (i > 1 ? c[i - 1] : 0.0);
      c[i] = 1.0 / denom;
      d[i] = (rhs - (i > 1 ? d[i - 1] : 0.0)) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m[i] = d[i] - c[i] * m[i + 1];
      if (i == 1) break;
    }
  }

  double operator()(double t) const {
    const std::size_t n = y.size();
    auto i = static_cast<std::size_t>(std::floor(t / step));
    if (i >= n - 1) i = n - 2;
    const double a = (static_cast<double>(i + 1) * step - t) / step;
    const double b = 1.0 - a;
    return a * y[i] + b * y[i + 1] +
           ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * step * step / 6.0;
  }
};

Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

}  // namespace

void GroundTruth::validate() const {
  const std::size_t n = t.size();
  if (n == 0) fail(ErrorKind::input, "ground truth is empty");
  if (positions.size() != n || orientations.size() != n)
    fail(ErrorKind::input, "ground truth arrays have unequal lengths");
  if (!(sample_rate > 0.0)) fail(ErrorKind::input, "ground truth sample rate must be positive");
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(orientations[k].norm() - 1.0) > 1e-9)
      fail(ErrorKind::input, "quaternion at sample " + std::to_string(k) + " is not unit length");
    if (!positions[k].allFinite() || !std::isfinite(t[k]))
      fail(ErrorKind::input, "non-finite ground truth at sample " + std::to_string(k));
  }
}

GroundTruth GroundTruth::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) fail(ErrorKind::input, "ground truth slice out of range");
  GroundTruth out;
  out.sample_rate = sample_rate;
  out.t.assign(t.begin() + begin, t.begin() + begin + count);
  out.positions.assign(positions.begin() + begin, positions.begin() + begin + count);
  out.orientations.assign(orientations.begin() + begin, orientations.begin() + begin + count);
  return out;
}

std::string_view to_string(MotionClass motion) {
  switch (motion) {
    case MotionClass::stationary: return "static";
    case MotionClass::linear: return "linear";
    case MotionClass::circular: return "circular";
    case MotionClass::spline3d: return "spline3d";
  }
  return "?";
}

MotionClass motion_class_from_string(std::string_view name) {
  if (name == "static") return MotionClass::stationary;
  if (name == "linear") return MotionClass::linear;
  if (name == "circular") return MotionClass::circular;
  if (name == "spline3d") return MotionClass::spline3d;
  fail(ErrorKind::config, "unknown motion class '" + std::string(name) +
                              "' (allowed: static, linear, circular, spline3d)");
}

GroundTruth linear_trajectory(const Eigen::Vector3d& p0, const Eigen::Vector3d& velocity,
                              double duration, double rate, const Eigen::Quaterniond& orientation) {
  GroundTruth gt = empty_truth(sample_count(duration, rate), rate);
  for (std::size_t k = 0; k < gt.size(); ++k) {
    gt.positions[k] = p0 + velocity * gt.t[k];
    gt.orientations[k] = orientation;
  }
  return gt;
}

GroundTruth circular_trajectory(const Eigen::Vector3d& center, double radius, double omega,
                                double phase, double duration, double rate,
                                const Eigen::Quaterniond& orientation) {
  GroundTruth gt = empty_truth(sample_count(duration, rate), rate);
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const double a = omega * gt.t[k] + phase;
    gt.positions[k] = center + radius * Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
    gt.orientations[k] = orientation;
  }
  return gt;
}

GroundTruth generate_trajectory(const TrajectorySpec& spec, std::uint64_t seed) {
  const std::size_t n = sample_count(spec.duration, spec.rate);
  if (!(spec.scale > 0.0)) fail(ErrorKind::config, "trajectory scale must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GroundTruth gt = empty_truth(n, spec.rate);
  const double duration = static_cast<double>(n - 1) / spec.rate;
  const Eigen::Vector3d origin = 0.5 * spec.scale * random_direction(rng);

  switch (spec.motion) {
    case MotionClass::stationary:
      for (auto& p : gt.positions) p = origin;
      return gt;
    case MotionClass::linear: {
      const Eigen::Vector3d v = spec.scale * (0.2 + 0.8 * unit(rng)) * random_direction(rng);
      for (std::size_t k = 0; k < n; ++k) gt.positions[k] = origin + v * gt.t[k];
      break;
    }
    case MotionClass::circular: {
      const double radius = spec.scale * (0.5 + 0.5 * unit(rng));
      const double omega = (0.5 + unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t k = 0; k < n; ++k) {
        const double a = omega * gt.t[k] + phase;
        gt.positions[k] = origin + radius * Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
      }
      break;
    }
    case MotionClass::spline3d: {
      // One knot per second of motion, at least four.
      const std::size_t knots = std::max<std::size_t>(4, static_cast<std::size_t>(duration) + 2);
      const double step = duration / static_cast<double>(knots - 1);
      std::array<std::vector<double>, 3> axes;
      for (auto& axis : axes) {
        axis.resize(knots);
        for (auto& v : axis) v = spec.scale * (unit(rng) - 0.5);
      }
      std::array<CubicSpline, 3> splines{CubicSpline(axes[0], step), CubicSpline(axes[1], step),
                                         CubicSpline(axes[2], step)};
      for (std::size_t k = 0; k < n; ++k)
        for (int a = 0; a < 3; ++a) gt.positions[k][a] = origin[a] + splines[a](gt.t[k]);
      break;
    }
  }
  fill_orientation(gt, rng);
  return gt;
}

Signal ideal_imu(const GroundTruth& truth, const Eigen::Vector3d& gravity) {
  truth.validate();
  const std::size_t n = truth.size();
  if (n < 3) fail(ErrorKind::input, "ideal_imu needs at least 3 samples");
  const double rate = truth.sample_rate;
  const double dt = 1.0 / rate;
  const auto& p = truth.positions;
  const auto& q = truth.orientations;
  Signal out = Signal::zeros(kImuChannels, n, rate);

  auto rel = [&](std::size_t a, std::size_t b) { return log_quat(q[a].conjugate() * q[b]); };
  for (std::size_t k = 0; k < n; ++k) {
    Eigen::Vector3d acc, gyro;
    if (k == 0) {
      acc = n >= 4 ? Eigen::Vector3d(2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3])
                   : Eigen::Vector3d(p[0] - 2.0 * p[1] + p[2]);
      acc /= dt * dt;
      gyro = (4.0 * rel(0, 1) - rel(0, 2)) / (2.0 * dt);
    } else if (k == n - 1) {
      acc = n >= 4 ? Eigen::Vector3d(2.0 * p[k] - 5.0 * p[k - 1] + 4.0 * p[k - 2] - p[k - 3])
                   : Eigen::Vector3d(p[k] - 2.0 * p[k - 1] + p[k - 2]);
      acc /= dt * dt;
      gyro = (rel(k, k - 2) - 4.0 * rel(k, k - 1)) / (2.0 * dt);
    } else {
      acc = (p[k + 1] - 2.0 * p[k] + p[k - 1]) / (dt * dt);
      gyro = rel(k - 1, k + 1) / (2.0 * dt);
    }
    const Eigen::Vector3d f = q[k].conjugate() * (acc - gravity);
    for (int a = 0; a < 3; ++a) {
      out.channels[a][k] = f[a];
      out.channels[3 + a][k] = gyro[a];
    }
  }
  return out;
}

void NoiseModel::validate() const {
  for (double v : {quantization_step, white_noise_density, bias_instability, bias_corr_time})
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorKind::config, "noise model parameters must be finite and nonnegative");
  if (!std::isfinite(initial_bias)) fail(ErrorKind::config, "initial bias must be finite");
  if (bias_instability > 0.0 && !(bias_corr_time > 0.0))
    fail(ErrorKind::config, "bias_corr_time must be positive when bias_instability > 0");
}

bool NoiseModel::is_zero() const {
  return quantization_step == 0.0 && white_noise_density == 0.0 && bias_instability == 0.0 &&
         initial_bias == 0.0;
}

double gauss_markov_sigma(double bias_instability) {
  // The flat-region minimum of a Gauss-Markov Allan curve sits at ~0.5946 of
  // the process std; scaling by 0.664 / 0.5946 makes the BI readout land on B.
  return bias_instability * 0.664 / 0.5946;
}

std::vector<double> quantize(const std::vector<double>& x, double step) {
  if (step == 0.0) return x;
  std::vector<double> y(x.size());
  double carry = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double target = x[k] + carry;
    y[k] = step * std::nearbyint(target / step);
    carry = target - y[k];
  }
  return y;
}

Signal inject_noise(const Signal& clean, const NoiseModel& accel, const NoiseModel& gyro,
                    std::uint64_t seed) {
  clean.validate_imu();
  accel.validate();
  gyro.validate();
  Signal out = clean;
  const double rate = clean.sample_rate;
  for (std::size_t c = 0; c < kImuChannels; ++c) {
    const NoiseModel& model = c < 3 ? accel : gyro;
    if (model.is_zero()) continue;
    std::mt19937_64 rng(derive_seed(seed, c));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& x = out.channels[c];
    const double sigma_w = model.white_noise_density * std::sqrt(rate);
    const bool has_bias = model.bias_instability > 0.0;
    const double sigma_b = gauss_markov_sigma(model.bias_instability);
    const double phi = has_bias ? std::exp(-1.0 / (rate * model.bias_corr_time)) : 0.0;
    const double drive = sigma_b * std::sqrt(1.0 - phi * phi);
    double bias = has_bias ? sigma_b * normal(rng) : 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (sigma_w > 0.0) x[k] += sigma_w * normal(rng);
      if (has_bias) {
        x[k] += bias;
        bias = phi * bias + drive * normal(rng);
      }
      x[k] += model.initial_bias;
    }
    x = quantize(x, model.quantization_step);
  }
  return out;
}

Eigen::Vector3d euler_zyx(const Eigen::Quaterniond& q) {
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  return {yaw, pitch, roll};
}

Eigen::Quaterniond from_euler_zyx(double yaw, double pitch, double roll) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;  // (-pi, pi]
}

void label_window(WindowSample& s) {
  const auto& gt = s.truth;
  if (gt.size() == 0) fail(ErrorKind::input, "cannot label an empty window");
  const Eigen::Vector3d e0 = euler_zyx(gt.orientations.front());
  const Eigen::Vector3d e1 = euler_zyx(gt.orientations.back());
  for (int a = 0; a < 3; ++a) s.delta_attitude[a] = wrap_angle(e1[a] - e0[a]);
  s.delta_position = gt.positions.back() - gt.positions.front();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<WindowSample> make_dataset(std::size_t n_windows, std::size_t window_len,
                                       const SimConfig& config, std::uint64_t seed) {
  if (config.motions.empty()) fail(ErrorKind::config, "at least one motion class is required");
  if (window_len < 8) fail(ErrorKind::config, "window length must be at least 8 samples");
  std::vector<WindowSample> out(n_windows);
  const std::size_t total = window_len + 2 * kWindowMargin;
  for (std::size_t i = 0; i < n_windows; ++i) {
    const std::uint64_t s = derive_seed(seed, i);
    TrajectorySpec spec;
    spec.rate = config.rate;
    spec.duration = static_cast<double>(total) / config.rate;
    spec.motion = config.motions[i % config.motions.size()];
    spec.scale = config.scale;
    const GroundTruth full = generate_trajectory(spec, derive_seed(s, 0));
    WindowSample& w = out[i];
    w.window_id = i;
    w.motion = spec.motion;
    w.clean = ideal_imu(full).slice(kWindowMargin, window_len);
    w.truth = full.slice(kWindowMargin, window_len);
    w.noisy = inject_noise(w.clean, config.accel, config.gyro, derive_seed(s, 1));
    w.initial_velocity = (full.positions[kWindowMargin + 1] - full.positions[kWindowMargin - 1]) *
                         (config.rate / 2.0);
    label_window(w);
  }
  return out;
}

Signal static_capture(std::size_t samples, double rate, const NoiseModel& accel,
                      const NoiseModel& gyro, std::uint64_t seed) {
  Signal clean = Signal::zeros(kImuChannels, samples, rate);
  for (auto& v : clean.channels[2]) v = kStandardGravity;
  return inject_noise(clean, accel, gyro, seed);
}

}  // namespace wdsel
