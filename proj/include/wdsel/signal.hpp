#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace wdsel {

inline constexpr std::size_t kImuChannels = 6;
inline constexpr std::array<std::string_view, kImuChannels> kImuChannelNames = {
    "ax", "ay", "az", "gx", "gy", "gz"};

/// Uniformly sampled multi-channel series. IMU signals carry six channels:
/// accelerometer (m/s^2) then gyroscope (rad/s).
struct Signal {
  std::vector<std::vector<double>> channels;
  double sample_rate = 0.0;

  std::size_t channel_count() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }

  /// Throws input error unless channels are non-empty, equal length, finite,
  /// and the rate is positive.
  void validate() const;
  /// validate() plus the six-channel IMU layout.
  void validate_imu() const;

  /// Samples [begin, begin + count) of every channel.
  Signal slice(std::size_t begin, std::size_t count) const;

  static Signal zeros(std::size_t channels, std::size_t length, double rate);
};

}  // namespace wdsel
