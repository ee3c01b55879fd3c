#include "wdsel/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "wdsel/error.hpp"

namespace wdsel {

using ad::Graph;
using ad::Shape;
using ad::Tensor;
using ad::Var;

namespace {

constexpr double kGravity = 9.80665;
constexpr std::size_t kStemKernel = 7;
constexpr std::size_t kStemStride = 4;
constexpr std::size_t kBlockKernel = 3;

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values) v = dist(rng);
  return t;
}

ResNet1d make_resnet(std::size_t channels, std::size_t blocks, std::size_t out_dim,
                     std::mt19937_64* rng) {
  ResNet1d net;
  auto make = [&](Shape shape, double stddev) {
    return rng ? normal_tensor(std::move(shape), stddev, *rng)
               : Tensor::zeros(std::move(shape), true);
  };
  net.stem = make({channels, kImuChannels, kStemKernel},
                  std::sqrt(2.0 / (kImuChannels * kStemKernel)));
  const double block_std = std::sqrt(2.0 / (channels * kBlockKernel));
  for (std::size_t b = 0; b < blocks; ++b) {
    // The second conv of each block starts small so the stack begins close to identity.
    net.blocks.emplace_back(make({channels, channels, kBlockKernel}, block_std),
                            make({channels, channels, kBlockKernel}, 0.1 * block_std));
  }
  net.projection = make({out_dim, channels, 1}, std::sqrt(1.0 / channels));
  return net;
}

void check_config(const ModelConfig& c) {
  if (c.feature_dim == 0 || c.channels == 0 || c.head_channels == 0)
    fail(ErrorKind::config, "model dimensions must be positive");
  if (c.bank_size == 0) fail(ErrorKind::config, "model bank_size must be positive");
  if (c.min_window < kStemKernel)
    fail(ErrorKind::config, "model min_window must be at least " + std::to_string(kStemKernel));
}

void check_window_shape(const ModelConfig& config, const Shape& shape) {
  if (shape.size() != 2 || shape[0] != kImuChannels)
    fail(ErrorKind::input, "network input must have 6 channels, got shape " +
                               ad::shape_string(shape));
  if (shape[1] < config.min_window)
    fail(ErrorKind::input, "window of " + std::to_string(shape[1]) +
                               " samples is shorter than the minimum " +
                               std::to_string(config.min_window));
}

Var bind(Graph& g, Tensor& t, bool trainable) {
  return trainable ? g.param(t) : g.constant(Tensor(t.shape, t.values));
}

Var activation(Graph& g, Var v, bool linear) { return linear ? v : g.relu(v); }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

WdsNet WdsNet::init(const ModelConfig& config, std::uint64_t seed) {
  check_config(config);
  std::mt19937_64 rng(seed);
  WdsNet m;
  m.config = config;
  m.extractor = make_resnet(config.channels, config.blocks, config.feature_dim, &rng);
  m.category = normal_tensor({config.feature_dim, config.bank_size},
                             1.0 / std::sqrt(static_cast<double>(config.feature_dim)), rng);
  m.head = make_resnet(config.head_channels, config.head_blocks, config.head_channels, &rng);
  m.head_readout = normal_tensor({config.head_channels, 6},
                                 0.1 / std::sqrt(static_cast<double>(config.head_channels)), rng);
  m.head_bias = Tensor::zeros({1, 6}, true);
  return m;
}

WdsNet WdsNet::zeros(const ModelConfig& config) {
  check_config(config);
  WdsNet m;
  m.config = config;
  m.extractor = make_resnet(config.channels, config.blocks, config.feature_dim, nullptr);
  m.category = Tensor::zeros({config.feature_dim, config.bank_size}, true);
  m.head = make_resnet(config.head_channels, config.head_blocks, config.head_channels, nullptr);
  m.head_readout = Tensor::zeros({config.head_channels, 6}, true);
  m.head_bias = Tensor::zeros({1, 6}, true);
  return m;
}

std::vector<std::pair<std::string, Tensor*>> WdsNet::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  auto add_net = [&](const std::string& prefix, ResNet1d& net) {
    out.emplace_back(prefix + ".stem", &net.stem);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
      out.emplace_back(prefix + ".block" + std::to_string(b) + ".conv1", &net.blocks[b].first);
      out.emplace_back(prefix + ".block" + std::to_string(b) + ".conv2", &net.blocks[b].second);
    }
    out.emplace_back(prefix + ".projection", &net.projection);
  };
  add_net("extractor", extractor);
  out.emplace_back("category", &category);
  add_net("head", head);
  out.emplace_back("head.readout", &head_readout);
  out.emplace_back("head.bias", &head_bias);
  return out;
}

std::vector<Tensor*> WdsNet::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<Tensor*> WdsNet::extractor_parameters() {
  std::vector<Tensor*> out{&extractor.stem};
  for (auto& [a, b] : extractor.blocks) {
    out.push_back(&a);
    out.push_back(&b);
  }
  out.push_back(&extractor.projection);
  return out;
}

std::uint64_t architecture_hash(const ModelConfig& c) {
  std::ostringstream os;
  os << "wdsnet/v1 d=" << c.feature_dim << " B=" << c.blocks << " F=" << c.channels
     << " Fh=" << c.head_channels << " Bh=" << c.head_blocks << " C=" << c.bank_size
     << " stem=" << kStemKernel << '/' << kStemStride << " block=" << kBlockKernel
     << " linear=" << c.linear_activation;
  return fnv1a(os.str());
}

std::uint64_t WdsNet::architecture_hash() const { return wdsel::architecture_hash(config); }

std::vector<double> network_rows(const Signal& window) {
  if (window.channel_count() != kImuChannels)
    fail(ErrorKind::input, "window must have 6 channels, got " +
                               std::to_string(window.channel_count()));
  const std::size_t n = window.length();
  std::vector<double> rows;
  rows.reserve(kImuChannels * n);
  for (std::size_t c = 0; c < kImuChannels; ++c) {
    const double scale = c < 3 ? 1.0 / kGravity : 1.0;
    for (double v : window.channels[c]) rows.push_back(v * scale);
  }
  return rows;
}

Var window_input(Graph& g, std::vector<double> rows, std::size_t length) {
  if (length == 0 || rows.size() != kImuChannels * length)
    fail(ErrorKind::input, "network input must hold 6 rows of " + std::to_string(length));
  return g.constant({kImuChannels, length}, std::move(rows));
}

Var window_input(Graph& g, const Signal& window) {
  return window_input(g, network_rows(window), window.length());
}

Var resnet_forward(Graph& g, ResNet1d& net, Var x, bool linear, bool trainable) {
  Var h = activation(g, g.conv1d(x, bind(g, net.stem, trainable), kStemStride, kStemKernel / 2),
                     linear);
  for (auto& [k1, k2] : net.blocks) {
    Var inner = activation(g, g.conv1d(h, bind(g, k1, trainable), 1, kBlockKernel / 2), linear);
    inner = g.conv1d(inner, bind(g, k2, trainable), 1, kBlockKernel / 2);
    h = activation(g, g.add(h, inner), linear);
  }
  h = g.conv1d(h, bind(g, net.projection, trainable), 1, 0);
  const std::size_t len = g.value(h).shape[1];
  Var pool = g.constant({len, 1}, std::vector<double>(len, 1.0 / static_cast<double>(len)));
  return g.transpose(g.matmul(h, pool));
}

Var features_graph(Graph& g, WdsNet& model, Var x, bool trainable) {
  check_window_shape(model.config, g.value(x).shape);
  return resnet_forward(g, model.extractor, x, model.config.linear_activation, trainable);
}

Var classify_graph(Graph& g, Var h, Var category) {
  return g.sigmoid(g.matmul(h, category));
}

Var guidance_graph(Graph& g, WdsNet& model, Var x, bool trainable) {
  check_window_shape(model.config, g.value(x).shape);
  Var h = resnet_forward(g, model.head, x, model.config.linear_activation, trainable);
  Var out = g.matmul(h, bind(g, model.head_readout, trainable));
  return g.add(out, bind(g, model.head_bias, trainable));
}

Var r_sparse_graph(Graph& g, Var y_hat) { return g.l1_norm(y_hat); }

EncodeTerm r_encode_graph(Graph& g, Var category, double entropy_floor) {
  const Tensor& w = g.value(category);
  if (w.shape.size() != 2) fail(ErrorKind::structural, "category matrix must be 2-D");
  const std::size_t d = w.shape[0], c = w.shape[1];
  for (std::size_t j = 0; j < c; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += w.values[i * c + j] * w.values[i * c + j];
    if (!(norm > 0.0))
      fail(ErrorKind::degenerate, "category column " + std::to_string(j) + " is zero");
  }
  Var col_sq = g.matmul(g.constant({1, d}, std::vector<double>(d, 1.0)), g.mul(category, category));
  Var inv_norm = g.reciprocal(g.sqrt(col_sq));
  Var spread = g.matmul(g.constant({d, 1}, std::vector<double>(d, 1.0)), inv_norm);
  Var normalized = g.mul(category, spread);
  Var gt = g.scale(g.matmul(g.transpose(normalized), normalized), 1.0 / static_cast<double>(c));
  // G~ is symmetric, so tr(G~^2) is the sum of its squared entries.
  Var trace_sq = g.sum(g.mul(gt, gt));
  Var s2 = g.scale(g.log2(trace_sq), -1.0);
  EncodeTerm term;
  term.s2 = g.item(s2);
  if (term.s2 < entropy_floor) {
    term.saturated = true;
    term.value = g.constant({1}, {1e6});
    return term;
  }
  term.value = g.reciprocal(s2);
  return term;
}

std::vector<double> extract_features(const WdsNet& model, const Signal& window) {
  Graph g;
  auto& m = const_cast<WdsNet&>(model);  // weights are only copied (trainable=false)
  Var x = window_input(g, window);
  return g.value(features_graph(g, m, x, false)).values;
}

std::vector<double> classify(const std::vector<double>& h, const Tensor& category) {
  if (category.shape.size() != 2 || category.shape[0] != h.size())
    fail(ErrorKind::structural, "classify: feature length " + std::to_string(h.size()) +
                                    " does not match category matrix " +
                                    ad::shape_string(category.shape));
  const std::size_t d = category.shape[0], c = category.shape[1];
  std::vector<double> y(c, 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += h[i] * category.values[i * c + j];
    y[j] = 1.0 / (1.0 + std::exp(-z));
  }
  return y;
}

double r_sparse(const std::vector<double>& y_hat) {
  double s = 0.0;
  for (double v : y_hat) s += std::abs(v);
  return s;
}

Eigen::MatrixXd gram(const Tensor& category) {
  if (category.shape.size() != 2) fail(ErrorKind::structural, "category matrix must be 2-D");
  const auto d = static_cast<Eigen::Index>(category.shape[0]);
  const auto c = static_cast<Eigen::Index>(category.shape[1]);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
      category.values.data(), d, c);
  return w.transpose() * w;
}

Eigen::MatrixXd normalized_gram(const Eigen::MatrixXd& g) {
  const Eigen::Index c = g.rows();
  for (Eigen::Index j = 0; j < c; ++j) {
    if (!(g(j, j) > 0.0))
      fail(ErrorKind::degenerate,
           "category column " + std::to_string(j) + " has non-positive Gram diagonal");
  }
  Eigen::MatrixXd out(c, c);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      out(i, j) = g(i, j) / std::sqrt(g(i, i) * g(j, j)) / static_cast<double>(c);
  return out;
}

double renyi_entropy(const Tensor& category, double alpha) {
  if (alpha != 2.0) fail(ErrorKind::config, "only alpha = 2 is supported");
  const Eigen::MatrixXd gt = normalized_gram(gram(category));
  return -std::log2((gt * gt).trace());
}

double r_encode(const Tensor& category, double entropy_floor) {
  const double s2 = renyi_entropy(category);
  if (s2 < entropy_floor)
    fail(ErrorKind::saturation, "entropy " + std::to_string(s2) + " is below the floor " +
                                    std::to_string(entropy_floor));
  return 1.0 / s2;
}

SelectionWeights truncated_selection_weights(const std::vector<double>& y_hat, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    fail(ErrorKind::config, "truncation epsilon must lie in [0, 1)");
  SelectionWeights out;
  double total = 0.0;
  bool any = false;
  for (double v : y_hat) {
    total += v;
    const bool pass = v >= epsilon;
    any = any || pass;
    out.mask.push_back(pass ? 1 : 0);
  }
  if (!any || !(total > 0.0))
    fail(ErrorKind::empty_selection, "every decision entry is below the truncation threshold");
  for (double v : y_hat) out.weights.push_back(v / total);
  return out;
}

double fsm_alignment_score(const std::vector<double>& h, const Tensor& category,
                           std::size_t target) {
  const std::size_t d = category.shape.at(0), c = category.shape.at(1);
  if (target >= c) fail(ErrorKind::input, "class index out of range");
  if (h.size() != d) fail(ErrorKind::structural, "feature length does not match category matrix");
  double own = 0.0;
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c; ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += h[i] * category.values[i * c + j];
    if (j == target)
      own = z;
    else
      best_other = std::max(best_other, z);
  }
  return c == 1 ? own : own - best_other;
}

std::array<double, 6> guidance_predict(const WdsNet& model, const Signal& window) {
  Graph g;
  auto& m = const_cast<WdsNet&>(model);
  Var x = window_input(g, window);
  const auto& v = g.value(guidance_graph(g, m, x, false)).values;
  std::array<double, 6> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::size_t argmax(const std::vector<double>& values) {
  if (values.empty()) fail(ErrorKind::input, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j)
    if (values[j] > values[best]) best = j;
  return best;
}

double top1_mass(const std::vector<double>& y_hat) {
  double total = 0.0;
  for (double v : y_hat) total += v;
  return total > 0.0 ? y_hat[argmax(y_hat)] / total : 0.0;
}

}  // namespace wdsel
