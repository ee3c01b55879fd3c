#include "wdsel/allan.hpp"

#include <algorithm>
#include <cmath>

#include "wdsel/error.hpp"

namespace wdsel {

namespace {

constexpr double kBiFactor = 0.664;

struct Run {
  std::size_t begin = 0, end = 0;  // [begin, end)
  std::size_t size() const { return end - begin; }
};

template <typename Pred>
Run longest_run(const std::vector<double>& slopes, const std::vector<bool>& usable, Pred in_band) {
  Run best, cur;
  for (std::size_t i = 0; i <= slopes.size(); ++i) {
    const bool ok = i < slopes.size() && usable[i] && in_band(slopes[i]);
    if (ok) {
      if (cur.size() == 0) cur.begin = i;
      cur.end = i + 1;
    } else {
      if (cur.size() > best.size()) best = cur;
      cur = Run{};
    }
  }
  return best;
}

// Fit log10(adev) = c + slope*log10(tau) with fixed slope; returns 10^c.
double fixed_slope_fit(const AllanCurve& curve, Run run, double slope, FitRegion& region) {
  double c = 0.0;
  for (std::size_t i = run.begin; i < run.end; ++i)
    c += std::log10(curve.adev[i]) - slope * std::log10(curve.taus[i]);
  c /= static_cast<double>(run.size());
  double sq = 0.0;
  for (std::size_t i = run.begin; i < run.end; ++i) {
    const double r = std::log10(curve.adev[i]) - (c + slope * std::log10(curve.taus[i]));
    sq += r * r;
  }
  region.present = true;
  region.tau_min = curve.taus[run.begin];
  region.tau_max = curve.taus[run.end - 1];
  region.points = run.size();
  region.residual = std::sqrt(sq / static_cast<double>(run.size()));
  return std::pow(10.0, c);
}

}  // namespace

AllanCurve allan_deviation(std::span<const double> x, double rate, int points_per_decade) {
  const std::size_t n = x.size();
  if (n < kMinAllanSamples)
    fail(ErrorKind::input, "Allan analysis needs at least " + std::to_string(kMinAllanSamples) +
                               " samples, got " + std::to_string(n));
  if (!(rate > 0.0)) fail(ErrorKind::input, "sample rate must be positive");
  if (points_per_decade < 1) fail(ErrorKind::config, "points_per_decade must be positive");

  // A constant offset does not change the Allan variance; removing the mean
  // keeps the integrated series small.
  double mean = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::input, "non-finite sample in Allan input");
    mean += v;
  }
  mean /= static_cast<double>(n);
  std::vector<double> theta(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) theta[k + 1] = theta[k] + (x[k] - mean) / rate;

  AllanCurve curve;
  curve.rate = rate;
  curve.n_samples = n;
  const std::size_t m_max = (n - 1) / 2;
  const double decades = std::log10(static_cast<double>(m_max));
  const int steps = static_cast<int>(std::ceil(decades * points_per_decade));
  std::size_t last = 0;
  for (int s = 0; s <= steps; ++s) {
    auto m = static_cast<std::size_t>(std::llround(std::pow(10.0, s / static_cast<double>(points_per_decade))));
    m = std::min(m, m_max);
    if (m <= last) continue;
    last = m;
    const double tau = static_cast<double>(m) / rate;
    const std::size_t terms = n + 1 - 2 * m;
    double acc = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      const double d = theta[k + 2 * m] - 2.0 * theta[k + m] + theta[k];
      acc += d * d;
    }
    curve.cluster_sizes.push_back(m);
    curve.taus.push_back(tau);
    curve.adev.push_back(std::sqrt(acc / (2.0 * tau * tau * static_cast<double>(terms))));
  }
  return curve;
}

std::vector<double> local_slopes(const AllanCurve& curve) {
  const std::size_t n = curve.taus.size();
  std::vector<double> out(n, 0.0);
  constexpr std::size_t kHalf = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= kHalf ? i - kHalf : 0;
    const std::size_t hi = std::min(n - 1, i + kHalf);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (!(curve.adev[j] > 0.0)) continue;
      const double lx = std::log10(curve.taus[j]);
      const double ly = std::log10(curve.adev[j]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      cnt += 1;
    }
    const double denom = cnt * sxx - sx * sx;
    out[i] = cnt >= 2 && denom > 0.0 ? (cnt * sxy - sx * sy) / denom : 0.0;
  }
  return out;
}

NoiseCoefficients extract_coefficients(const AllanCurve& curve, const SlopeBands& bands) {
  NoiseCoefficients out;
  const std::size_t n = curve.taus.size();
  if (n == 0 || std::all_of(curve.adev.begin(), curve.adev.end(), [](double v) { return v == 0.0; }))
    return out;
  if (curve.taus.back() / curve.taus.front() < 100.0)
    fail(ErrorKind::analysis, "Allan curve spans less than two decades of tau; use a longer capture");

  std::vector<bool> usable(n);
  for (std::size_t i = 0; i < n; ++i)
    usable[i] = curve.adev[i] > 0.0 &&
                static_cast<double>(curve.n_samples) / static_cast<double>(curve.cluster_sizes[i]) >=
                    bands.min_clusters;
  const auto slopes = local_slopes(curve);

  const Run qn = longest_run(slopes, usable, [&](double s) { return s >= bands.qn_low && s <= bands.qn_high; });
  if (qn.size() >= bands.min_run)
    out.qn = fixed_slope_fit(curve, qn, -1.0, out.qn_fit) / std::sqrt(3.0);
  const Run rw = longest_run(slopes, usable, [&](double s) { return s >= bands.rw_low && s <= bands.rw_high; });
  if (rw.size() >= bands.min_run) out.rw = fixed_slope_fit(curve, rw, -0.5, out.rw_fit);

  const Run flat = longest_run(slopes, usable, [&](double s) { return std::abs(s) < bands.flat; });
  if (flat.size() >= 2) {
    double min_flat = curve.adev[flat.begin];
    for (std::size_t i = flat.begin; i < flat.end; ++i) min_flat = std::min(min_flat, curve.adev[i]);
    out.bi = min_flat / kBiFactor;
    out.bi_fit.present = true;
    out.bi_fit.tau_min = curve.taus[flat.begin];
    out.bi_fit.tau_max = curve.taus[flat.end - 1];
    out.bi_fit.points = flat.size();
  }

  if (!out.qn_fit.present && !out.rw_fit.present && !out.bi_fit.present)
    fail(ErrorKind::analysis,
         "no quantization, random-walk or flat region found in the Allan curve; use a longer capture");
  return out;
}

std::optional<double> reduction_percent(double raw, double enhanced) {
  if (raw == 0.0) return std::nullopt;
  return 100.0 * (raw - enhanced) / raw;
}

Reductions compare_reports(const NoiseCoefficients& raw, const NoiseCoefficients& enhanced) {
  return {reduction_percent(raw.qn, enhanced.qn), reduction_percent(raw.rw, enhanced.rw),
          reduction_percent(raw.bi, enhanced.bi)};
}

}  // namespace wdsel
