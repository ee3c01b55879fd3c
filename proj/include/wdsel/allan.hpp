#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wdsel {

struct AllanCurve {
  std::vector<double> taus;
  std::vector<double> adev;
  std::vector<std::size_t> cluster_sizes;
  double rate = 0.0;
  std::size_t n_samples = 0;
};

inline constexpr std::size_t kMinAllanSamples = 128;

/// Overlapping Allan deviation over log-spaced cluster sizes 1..(N-1)/2.
AllanCurve allan_deviation(std::span<const double> channel, double rate,
                           int points_per_decade = 10);

struct FitRegion {
  bool present = false;
  double tau_min = 0.0;
  double tau_max = 0.0;
  std::size_t points = 0;
  double residual = 0.0;  // RMS log10 residual of the fixed-slope fit
};

struct NoiseCoefficients {
  double qn = 0.0;
  double rw = 0.0;
  double bi = 0.0;
  FitRegion qn_fit;
  FitRegion rw_fit;
  FitRegion bi_fit;
};

struct SlopeBands {
  double qn_low = -1.25, qn_high = -0.75;
  double rw_low = -0.65, rw_high = -0.35;
  double flat = 0.15;
  std::size_t min_run = 3;
  // Points whose cluster count N/m falls below this are ignored.
  double min_clusters = 10.0;
};

/// Local log-log slope at every point of the curve.
std::vector<double> local_slopes(const AllanCurve& curve);

NoiseCoefficients extract_coefficients(const AllanCurve& curve, const SlopeBands& bands = {});

struct Reductions {
  std::optional<double> qn, rw, bi;
};

/// 100 (raw - enhanced) / raw per coefficient; empty where raw is zero.
std::optional<double> reduction_percent(double raw, double enhanced);
Reductions compare_reports(const NoiseCoefficients& raw, const NoiseCoefficients& enhanced);

}  // namespace wdsel
