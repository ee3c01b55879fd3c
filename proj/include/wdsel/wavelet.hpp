#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wdsel/signal.hpp"

namespace wdsel {

/// Orthogonal wavelet filter bank. dec_hi is the alternating flip of dec_lo
/// and the reconstruction filters are time reversals of the analysis ones.
struct WaveletBasis {
  std::string name;
  std::vector<double> dec_lo;
  std::vector<double> dec_hi;
  std::vector<double> rec_lo;
  std::vector<double> rec_hi;
  int vanishing_moments = 0;
  int support_length = 0;

  std::size_t filter_length() const { return dec_lo.size(); }
};

enum class BoundaryMode { symmetric, periodic, zero };

std::string_view to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(std::string_view name);

/// Multi-level decomposition. details[0] is the finest level.
struct Decomposition {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
  int levels = 0;
  std::size_t original_length = 0;
  BoundaryMode boundary_mode = BoundaryMode::symmetric;
};

enum class ThresholdRule { universal_soft };

std::string_view to_string(ThresholdRule rule);
ThresholdRule threshold_rule_from_string(std::string_view name);

struct DenoiseConfig {
  int levels = 4;
  BoundaryMode boundary_mode = BoundaryMode::symmetric;
  ThresholdRule threshold_rule = ThresholdRule::universal_soft;
};

/// Version of the embedded coefficient tables.
inline constexpr int kBankVersion = 1;
inline constexpr int kFullBankSize = 16;

/// Names of the full ordered bank.
const std::vector<std::string>& bank_names();

/// First `count` bases of the fixed ordering
/// haar, db2..db6, sym2..sym6, coif1..coif5. count must be 5, 10 or 16.
std::vector<WaveletBasis> standard_bank(int count);

/// Bank member by name; unknown names raise a config error.
WaveletBasis basis_by_name(std::string_view name);

/// Builds a basis from its scaling filter, deriving the other three filters.
WaveletBasis make_orthogonal_basis(std::string name, std::vector<double> dec_lo,
                                   int vanishing_moments);

/// Coefficient count of one analysis step for an input of length n.
std::size_t cascade_length(std::size_t n, std::size_t filter_length, BoundaryMode mode);

/// Largest level count accepted for a signal of length n.
int max_feasible_level(std::size_t n);

Decomposition dwt(std::span<const double> signal, const WaveletBasis& basis, int levels,
                  BoundaryMode mode = BoundaryMode::symmetric);

std::vector<double> idwt(const Decomposition& decomp, const WaveletBasis& basis);

/// median(|d|) / 0.6745
double estimate_noise_sigma(std::span<const double> finest_details);

double soft_threshold(double x, double lambda);

/// Universal-threshold soft shrinkage of one channel.
std::vector<double> denoise_channel(std::span<const double> channel, const WaveletBasis& basis,
                                    const DenoiseConfig& config);

/// Channel-wise denoising; shape and rate are preserved.
Signal denoise(const Signal& signal, const WaveletBasis& basis, const DenoiseConfig& config);

}  // namespace wdsel
