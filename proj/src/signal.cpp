#include "wdsel/signal.hpp"

#include <cmath>
#include <string>

#include "wdsel/error.hpp"

namespace wdsel {

void Signal::validate() const {
  if (channels.empty()) fail(ErrorKind::input, "signal has no channels");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    fail(ErrorKind::input, "sample rate must be positive, got " + std::to_string(sample_rate));
  const std::size_t n = channels.front().size();
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != n)
      fail(ErrorKind::input, "channel " + std::to_string(c) + " has length " +
                                 std::to_string(channels[c].size()) + ", expected " +
                                 std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(channels[c][i]))
        fail(ErrorKind::input, "non-finite sample in channel " + std::to_string(c) +
                                   " at index " + std::to_string(i));
    }
  }
}

void Signal::validate_imu() const {
  if (channels.size() != kImuChannels)
    fail(ErrorKind::input,
         "expected 6 IMU channels, got " + std::to_string(channels.size()));
  validate();
}

Signal Signal::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length())
    fail(ErrorKind::input, "slice [" + std::to_string(begin) + ", " +
                               std::to_string(begin + count) + ") exceeds length " +
                               std::to_string(length()));
  Signal out;
  out.sample_rate = sample_rate;
  out.channels.reserve(channels.size());
  for (const auto& ch : channels) {
    out.channels.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(begin),
                              ch.begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return out;
}

Signal Signal::zeros(std::size_t channels, std::size_t length, double rate) {
  Signal s;
  s.sample_rate = rate;
  s.channels.assign(channels, std::vector<double>(length, 0.0));
  return s;
}

}  // namespace wdsel
