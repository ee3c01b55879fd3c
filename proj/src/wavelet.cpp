#include "wdsel/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavelet_tables.hpp"
#include "wdsel/error.hpp"

namespace wdsel {

namespace {

// Maps an index outside [0, n) into the signal under half-sample symmetric
// extension (x[-1] = x[0], x[n] = x[n-1]); valid for any distance.
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

struct LevelCoefficients {
  std::vector<double> approx;
  std::vector<double> detail;
};

LevelCoefficients analyze_padded(std::span<const double> x, const WaveletBasis& basis,
                                 BoundaryMode mode) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto len = static_cast<std::ptrdiff_t>(basis.filter_length());
  const std::size_t out_len = cascade_length(x.size(), basis.filter_length(), mode);
  LevelCoefficients out{std::vector<double>(out_len), std::vector<double>(out_len)};

  auto sample = [&](std::ptrdiff_t i) -> double {
    if (i >= 0 && i < n) return x[static_cast<std::size_t>(i)];
    if (mode == BoundaryMode::zero) return 0.0;
    return x[static_cast<std::size_t>(reflect_index(i, n))];
  };

  for (std::size_t k = 0; k < out_len; ++k) {
    const std::ptrdiff_t base = 2 * static_cast<std::ptrdiff_t>(k) - (len - 2);
    double a = 0.0;
    double d = 0.0;
    for (std::ptrdiff_t t = 0; t < len; ++t) {
      const double v = sample(base + t);
      a += basis.dec_lo[static_cast<std::size_t>(t)] * v;
      d += basis.dec_hi[static_cast<std::size_t>(t)] * v;
    }
    out.approx[k] = a;
    out.detail[k] = d;
  }
  return out;
}

std::vector<double> synthesize_padded(std::span<const double> approx,
                                      std::span<const double> detail, std::size_t n,
                                      const WaveletBasis& basis) {
  const auto len = static_cast<std::ptrdiff_t>(basis.filter_length());
  const auto count = static_cast<std::ptrdiff_t>(approx.size());
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    // 0 <= 2k - i + 1 <= len - 1
    const std::ptrdiff_t k_lo = ii / 2;
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>((ii + len - 2) / 2, count - 1);
    double acc = 0.0;
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
      const auto j = static_cast<std::size_t>(2 * k - ii + 1);
      acc += approx[static_cast<std::size_t>(k)] * basis.rec_lo[j] +
             detail[static_cast<std::size_t>(k)] * basis.rec_hi[j];
    }
    x[i] = acc;
  }
  return x;
}

LevelCoefficients analyze_periodic(std::span<const double> x, const WaveletBasis& basis) {
  std::vector<double> ext(x.begin(), x.end());
  if (ext.size() % 2 == 1) ext.push_back(ext.back());
  const std::size_t n = ext.size();
  const std::size_t half = n / 2;
  const std::size_t len = basis.filter_length();
  LevelCoefficients out{std::vector<double>(half), std::vector<double>(half)};
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double v = ext[(2 * k + t) % n];
      a += basis.dec_lo[t] * v;
      d += basis.dec_hi[t] * v;
    }
    out.approx[k] = a;
    out.detail[k] = d;
  }
  return out;
}

std::vector<double> synthesize_periodic(std::span<const double> approx,
                                        std::span<const double> detail, std::size_t n,
                                        const WaveletBasis& basis) {
  const std::size_t padded = 2 * approx.size();
  const std::size_t len = basis.filter_length();
  std::vector<double> y(padded, 0.0);
  // Adjoint of the analysis step; reversed rec filters equal the dec filters.
  for (std::size_t k = 0; k < approx.size(); ++k) {
    for (std::size_t t = 0; t < len; ++t) {
      y[(2 * k + t) % padded] +=
          approx[k] * basis.rec_lo[len - 1 - t] + detail[k] * basis.rec_hi[len - 1 - t];
    }
  }
  y.resize(n);
  return y;
}

std::vector<std::size_t> cascade_lengths(std::size_t n, std::size_t filter_length,
                                         BoundaryMode mode, int levels) {
  std::vector<std::size_t> lengths{n};
  for (int l = 0; l < levels; ++l)
    lengths.push_back(cascade_length(lengths.back(), filter_length, mode));
  return lengths;
}

}  // namespace

std::string_view to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::symmetric: return "symmetric";
    case BoundaryMode::periodic: return "periodic";
    case BoundaryMode::zero: return "zero";
  }
  return "symmetric";
}

BoundaryMode boundary_mode_from_string(std::string_view name) {
  if (name == "symmetric") return BoundaryMode::symmetric;
  if (name == "periodic") return BoundaryMode::periodic;
  if (name == "zero") return BoundaryMode::zero;
  fail(ErrorKind::config, "unknown boundary_mode '" + std::string(name) +
                              "' (allowed: symmetric, periodic, zero)");
}

std::string_view to_string(ThresholdRule rule) {
  switch (rule) {
    case ThresholdRule::universal_soft: return "universal_soft";
  }
  return "universal_soft";
}

ThresholdRule threshold_rule_from_string(std::string_view name) {
  if (name == "universal_soft") return ThresholdRule::universal_soft;
  fail(ErrorKind::config,
       "unknown threshold_rule '" + std::string(name) + "' (allowed: universal_soft)");
}

WaveletBasis make_orthogonal_basis(std::string name, std::vector<double> dec_lo,
                                   int vanishing_moments) {
  WaveletBasis b;
  b.name = std::move(name);
  const std::size_t len = dec_lo.size();
  b.dec_hi.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    b.dec_hi[n] = sign * dec_lo[len - 1 - n];
  }
  b.rec_lo.assign(dec_lo.rbegin(), dec_lo.rend());
  b.rec_hi.assign(b.dec_hi.rbegin(), b.dec_hi.rend());
  b.dec_lo = std::move(dec_lo);
  b.vanishing_moments = vanishing_moments;
  b.support_length = static_cast<int>(len);
  return b;
}

const std::vector<std::string>& bank_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : detail::filter_table()) out.emplace_back(e.name);
    return out;
  }();
  return names;
}

std::vector<WaveletBasis> standard_bank(int count) {
  if (count != 5 && count != 10 && count != 16)
    fail(ErrorKind::config,
         "unsupported bank size " + std::to_string(count) + " (allowed: 5, 10, 16)");
  const auto& table = detail::filter_table();
  std::vector<WaveletBasis> bank;
  bank.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto& e = table[static_cast<std::size_t>(i)];
    bank.push_back(make_orthogonal_basis(std::string(e.name), e.dec_lo, e.vanishing_moments));
  }
  return bank;
}

WaveletBasis basis_by_name(std::string_view name) {
  for (const auto& e : detail::filter_table())
    if (e.name == name)
      return make_orthogonal_basis(std::string(e.name), e.dec_lo, e.vanishing_moments);
  fail(ErrorKind::config, "unknown wavelet '" + std::string(name) + "'");
}

std::size_t cascade_length(std::size_t n, std::size_t filter_length, BoundaryMode mode) {
  if (mode == BoundaryMode::periodic) return (n + 1) / 2;
  return (n + filter_length) / 2;  // == ceil((n + L - 1) / 2)
}

int max_feasible_level(std::size_t n) {
  int level = 0;
  while ((std::size_t{1} << (level + 1)) <= n) ++level;
  return level;
}

Decomposition dwt(std::span<const double> signal, const WaveletBasis& basis, int levels,
                  BoundaryMode mode) {
  if (levels < 1)
    fail(ErrorKind::decomposition, "levels must be >= 1, got " + std::to_string(levels));
  if (basis.filter_length() < 2 || basis.dec_hi.size() != basis.filter_length())
    fail(ErrorKind::structural, "basis '" + basis.name + "' has malformed filters");
  const int max_level = max_feasible_level(signal.size());
  if (levels > max_level)
    fail(ErrorKind::decomposition,
         "signal of length " + std::to_string(signal.size()) + " is too short for " +
             std::to_string(levels) + " levels; maximum feasible level is " +
             std::to_string(max_level));

  Decomposition out;
  out.levels = levels;
  out.original_length = signal.size();
  out.boundary_mode = mode;
  out.details.reserve(static_cast<std::size_t>(levels));

  std::vector<double> current(signal.begin(), signal.end());
  for (int l = 0; l < levels; ++l) {
    LevelCoefficients step = mode == BoundaryMode::periodic
                                 ? analyze_periodic(current, basis)
                                 : analyze_padded(current, basis, mode);
    out.details.push_back(std::move(step.detail));
    current = std::move(step.approx);
  }
  out.approx = std::move(current);
  return out;
}

std::vector<double> idwt(const Decomposition& decomp, const WaveletBasis& basis) {
  if (decomp.levels < 1 || decomp.details.size() != static_cast<std::size_t>(decomp.levels))
    fail(ErrorKind::structural, "decomposition records " + std::to_string(decomp.levels) +
                                    " levels but holds " +
                                    std::to_string(decomp.details.size()) + " detail bands");
  const auto lengths = cascade_lengths(decomp.original_length, basis.filter_length(),
                                       decomp.boundary_mode, decomp.levels);
  for (int l = 0; l < decomp.levels; ++l) {
    const std::size_t expected = lengths[static_cast<std::size_t>(l) + 1];
    if (decomp.details[static_cast<std::size_t>(l)].size() != expected)
      fail(ErrorKind::structural, "detail level " + std::to_string(l + 1) + " has length " +
                                      std::to_string(decomp.details[l].size()) +
                                      ", expected " + std::to_string(expected) +
                                      " for basis '" + basis.name + "'");
  }
  if (decomp.approx.size() != lengths.back())
    fail(ErrorKind::structural, "approximation has length " +
                                    std::to_string(decomp.approx.size()) + ", expected " +
                                    std::to_string(lengths.back()));

  std::vector<double> current = decomp.approx;
  for (int l = decomp.levels - 1; l >= 0; --l) {
    const auto& detail = decomp.details[static_cast<std::size_t>(l)];
    const std::size_t n = lengths[static_cast<std::size_t>(l)];
    current = decomp.boundary_mode == BoundaryMode::periodic
                  ? synthesize_periodic(current, detail, n, basis)
                  : synthesize_padded(current, detail, n, basis);
  }
  return current;
}

double estimate_noise_sigma(std::span<const double> finest_details) {
  if (finest_details.empty()) fail(ErrorKind::input, "noise estimate needs a non-empty sequence");
  std::vector<double> mag(finest_details.size());
  std::transform(finest_details.begin(), finest_details.end(), mag.begin(),
                 [](double v) { return std::abs(v); });
  const std::size_t n = mag.size();
  const auto mid = mag.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(mag.begin(), mid, mag.end());
  double median = *mid;
  if (n % 2 == 0) median = 0.5 * (median + *std::max_element(mag.begin(), mid));
  return median / 0.6745;
}

double soft_threshold(double x, double lambda) {
  if (!(lambda >= 0.0)) fail(ErrorKind::input, "threshold must be non-negative");
  const double mag = std::abs(x) - lambda;
  if (mag <= 0.0) return 0.0;
  return std::copysign(mag, x);
}

std::vector<double> denoise_channel(std::span<const double> channel, const WaveletBasis& basis,
                                    const DenoiseConfig& config) {
  for (double v : channel) {
    if (!std::isfinite(v)) fail(ErrorKind::input, "non-finite sample passed to denoise");
  }
  Decomposition decomp = dwt(channel, basis, config.levels, config.boundary_mode);
  const double sigma = estimate_noise_sigma(decomp.details.front());
  const double lambda =
      sigma * std::sqrt(2.0 * std::log(static_cast<double>(channel.size())));
  for (auto& band : decomp.details) {
    for (double& c : band) c = soft_threshold(c, lambda);
  }
  return idwt(decomp, basis);
}

Signal denoise(const Signal& signal, const WaveletBasis& basis, const DenoiseConfig& config) {
  signal.validate();
  Signal out;
  out.sample_rate = signal.sample_rate;
  out.channels.reserve(signal.channel_count());
  for (const auto& ch : signal.channels) out.channels.push_back(denoise_channel(ch, basis, config));
  return out;
}

}  // namespace wdsel
