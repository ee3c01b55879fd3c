#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wdsel/autodiff.hpp"
#include "wdsel/signal.hpp"

namespace wdsel {

struct ModelConfig {
  std::size_t feature_dim = 64;
  std::size_t blocks = 4;
  std::size_t channels = 32;
  std::size_t head_channels = 16;
  std::size_t head_blocks = 2;
  std::size_t bank_size = 16;
  std::size_t min_window = 512;
  // Test-only: drops every relu so the extractor is a linear map.
  bool linear_activation = false;
};

/// Stem conv (6 -> channels, k=7, stride 4), residual blocks of two k=3 convs,
/// 1x1 projection to `out_dim`, global average pooling. No biases.
struct ResNet1d {
  ad::Tensor stem;
  std::vector<std::pair<ad::Tensor, ad::Tensor>> blocks;
  ad::Tensor projection;
};

struct WdsNet {
  ModelConfig config;
  ResNet1d extractor;
  ad::Tensor category;  // W, feature_dim x bank_size
  ResNet1d head;
  ad::Tensor head_readout;  // head_channels x 6
  ad::Tensor head_bias;     // 6

  static WdsNet init(const ModelConfig& config, std::uint64_t seed);
  /// Zero-initialized network with the shapes implied by config.
  static WdsNet zeros(const ModelConfig& config);

  std::vector<std::pair<std::string, ad::Tensor*>> named_parameters();
  std::vector<ad::Tensor*> parameters();
  std::vector<ad::Tensor*> extractor_parameters();
  std::uint64_t architecture_hash() const;
};

std::uint64_t architecture_hash(const ModelConfig& config);

// ---- graph builders (used by training and by the gradient checks) ----

/// Network input layout: channels as rows (row-major 6 x L), accelerometer
/// divided by standard gravity.
std::vector<double> network_rows(const Signal& window);
ad::Var window_input(ad::Graph& g, const Signal& window);
/// `rows` must already be in network layout.
ad::Var window_input(ad::Graph& g, std::vector<double> rows, std::size_t length);
/// Bound weights are registered with g.param (trainable) or copied as constants.
ad::Var resnet_forward(ad::Graph& g, ResNet1d& net, ad::Var x, bool linear, bool trainable);
/// Returns h with shape [1, d].
ad::Var features_graph(ad::Graph& g, WdsNet& model, ad::Var x, bool trainable = true);
/// Returns y_hat with shape [1, C].
ad::Var classify_graph(ad::Graph& g, ad::Var h, ad::Var category);
/// Returns the 6-vector (dyaw, dpitch, droll, dx, dy, dz) with shape [1, 6].
ad::Var guidance_graph(ad::Graph& g, WdsNet& model, ad::Var x, bool trainable = true);
ad::Var r_sparse_graph(ad::Graph& g, ad::Var y_hat);

struct EncodeTerm {
  ad::Var value;
  double s2 = 0.0;
  bool saturated = false;
};
/// 1/S_2(W) built from differentiable primitives. Below the entropy floor the
/// term is replaced by the constant 1e6 with no gradient.
EncodeTerm r_encode_graph(ad::Graph& g, ad::Var category, double entropy_floor = 1e-6);

// ---- plain operations ----

std::vector<double> extract_features(const WdsNet& model, const Signal& window);
std::vector<double> classify(const std::vector<double>& h, const ad::Tensor& category);
double r_sparse(const std::vector<double>& y_hat);
Eigen::MatrixXd gram(const ad::Tensor& category);
Eigen::MatrixXd normalized_gram(const Eigen::MatrixXd& g);
double renyi_entropy(const ad::Tensor& category, double alpha = 2.0);
double r_encode(const ad::Tensor& category, double entropy_floor = 1e-6);

struct SelectionWeights {
  std::vector<double> weights;
  std::vector<std::uint8_t> mask;
};
/// w = y/sum(y); mask passes gradient only where y >= epsilon.
SelectionWeights truncated_selection_weights(const std::vector<double>& y_hat, double epsilon);

double fsm_alignment_score(const std::vector<double>& h, const ad::Tensor& category,
                           std::size_t target);
std::array<double, 6> guidance_predict(const WdsNet& model, const Signal& window);

/// Lowest index among the maxima.
std::size_t argmax(const std::vector<double>& values);
/// max(y) / sum(y).
double top1_mass(const std::vector<double>& y_hat);

}  // namespace wdsel
