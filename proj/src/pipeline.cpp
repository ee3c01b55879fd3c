#include "wdsel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "wdsel/error.hpp"
#include "wdsel/parallel.hpp"

namespace wdsel {

using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {


void check_bank(const std::vector<WaveletBasis>& bank, std::size_t expected) {
  if (bank.size() != expected)
    fail(ErrorKind::structural, "bank has " + std::to_string(bank.size()) +
                                    " members but the decision vector has " +
                                    std::to_string(expected));
}

struct BatchGraph {
  Graph g;
  Var total;
  StepLosses losses;
};

void finite_or_fail(double value, const char* component) {
  if (!std::isfinite(value))
    fail(ErrorKind::numeric, std::string("non-finite training loss component: ") + component);
}

std::unique_ptr<BatchGraph> build_batch(const std::vector<const PreparedWindow*>& batch,
                                        WdsNet& model, const TrainConfig& config) {
  if (batch.empty()) fail(ErrorKind::input, "training batch is empty");
  const std::size_t c = model.config.bank_size;
  auto out = std::make_unique<BatchGraph>();
  Graph& g = out->g;
  StepLosses& s = out->losses;
  Var category = g.param(model.category);
  const Var att_sel = g.constant({6}, {1, 1, 1, 0, 0, 0});
  const Var disp_sel = g.constant({6}, {0, 0, 0, 1, 1, 1});
  std::vector<Var> att_terms, disp_terms, sparse_terms;
  for (const PreparedWindow* item : batch) {
    for (double v : item->label)
      if (!std::isfinite(v)) fail(ErrorKind::input, "training label is not finite");
    if (item->bank_stack.size() != c * kImuChannels * item->length)
      fail(ErrorKind::structural, "prepared window bank stack does not match bank size " +
                                      std::to_string(c));
    const Var x = window_input(g, item->input, item->length);
    const Var h = features_graph(g, model, x);
    const Var y = classify_graph(g, h, category);
    const std::vector<double> yv = g.value(y).values;
    const std::vector<double> hv = g.value(h).values;
    const double ymax = *std::max_element(yv.begin(), yv.end());
    const SelectionWeights sel = truncated_selection_weights(yv, config.epsilon_truncation * ymax);
    const Var masked = g.stop_gradient_mask(y, sel.mask);
    const Var w = g.mul(masked, g.reciprocal(g.sum(masked)));
    const Var stack = g.constant({c, kImuChannels * item->length},
                                 std::vector<double>(item->bank_stack.begin(), item->bank_stack.end()));
    const Var mixed = g.reshape(g.matmul(w, stack), {kImuChannels, item->length});
    const Var pred = guidance_graph(g, model, mixed);
    const Var label = g.constant({1, 6}, std::vector<double>(item->label.begin(), item->label.end()));
    const Var diff = g.sub(pred, label);
    const Var sq = g.reshape(g.mul(diff, diff), {6});
    att_terms.push_back(g.inner_product(sq, att_sel));
    disp_terms.push_back(g.inner_product(sq, disp_sel));
    sparse_terms.push_back(r_sparse_graph(g, y));

    s.top1_mass += top1_mass(yv) / static_cast<double>(batch.size());
    const std::size_t chosen = argmax(yv);
    if (item->oracle_best && *item->oracle_best == chosen) {
      s.fsm_sum += fsm_alignment_score(hv, model.category, chosen);
      ++s.fsm_count;
    }
  }
  auto batch_mean = [&](const std::vector<Var>& terms) {
    Var acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) acc = g.add(acc, terms[i]);
    return g.scale(acc, 1.0 / static_cast<double>(terms.size()));
  };
  const Var l_att = batch_mean(att_terms);
  const Var l_disp = batch_mean(disp_terms);
  const Var r_sp = batch_mean(sparse_terms);
  s.l_attitude = g.item(l_att);
  s.l_disp = g.item(l_disp);
  s.r_sparse = g.item(r_sp);
  finite_or_fail(s.l_attitude, "L_attitude");
  finite_or_fail(s.l_disp, "L_disp");
  finite_or_fail(s.r_sparse, "R_sparse");

  Var total = g.add(l_att, g.scale(l_disp, config.lambda_disp));
  if (config.crm_enabled) {
    const EncodeTerm enc = r_encode_graph(g, category, config.entropy_floor);
    s.s2 = enc.s2;
    s.r_encode = g.item(enc.value);
    s.encode_saturated = enc.saturated;
    finite_or_fail(s.r_encode, "R_encode");
    total = g.add(total, g.scale(r_sp, config.lambda_sparse));
    total = g.add(total, g.scale(enc.value, config.lambda_encode));
  } else {
    s.s2 = renyi_entropy(model.category);
    s.r_encode = s.s2 > config.entropy_floor ? 1.0 / s.s2 : 1e6;
  }
  s.total = g.item(total);
  finite_or_fail(s.total, "total");
  out->total = total;
  return out;
}

void clip_gradients(const std::vector<Tensor*>& params, double max_norm) {
  if (!(max_norm > 0.0)) return;
  double sq = 0.0;
  for (const Tensor* p : params)
    for (double v : p->grad) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) fail(ErrorKind::numeric, "non-finite gradient norm");
  if (norm <= max_norm) return;
  const double factor = max_norm / norm;
  for (Tensor* p : params)
    for (double& v : p->grad) v *= factor;
}

std::vector<double> stack_row(const PreparedWindow& w, std::size_t index) {
  const std::size_t span = kImuChannels * w.length;
  const auto begin = w.bank_stack.begin() + static_cast<std::ptrdiff_t>(index * span);
  return std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(span));
}

}  // namespace

void TrainConfig::validate() const {
  for (double v : {learning_rate, momentum, grad_clip, lambda_disp, lambda_sparse, lambda_encode,
                   epsilon_truncation, entropy_floor})
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorKind::config, "training rates, lambdas and thresholds must be finite and >= 0");
  if (momentum >= 1.0) fail(ErrorKind::config, "momentum must be below 1");
  if (epsilon_truncation >= 1.0) fail(ErrorKind::config, "epsilon_truncation must be below 1");
  if (bank_size != 5 && bank_size != 10 && bank_size != 16)
    fail(ErrorKind::config, "bank_size " + std::to_string(bank_size) + " is not allowed (allowed: 5, 10, 16)");
  if (batch_size == 0) fail(ErrorKind::config, "batch_size must be positive");
}

GuidanceVector label_of(const WindowSample& s) {
  return {s.delta_attitude[0], s.delta_attitude[1], s.delta_attitude[2],
          s.delta_position[0], s.delta_position[1], s.delta_position[2]};
}

double signal_mse(const Signal& a, const Signal& b) {
  if (a.channel_count() != b.channel_count() || a.length() != b.length())
    fail(ErrorKind::structural, "signals differ in shape");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < a.channel_count(); ++c)
    for (std::size_t k = 0; k < a.length(); ++k) {
      const double d = a.channels[c][k] - b.channels[c][k];
      acc += d * d;
      ++count;
    }
  return count ? acc / static_cast<double>(count) : 0.0;
}

PreparedWindow prepare_window(const Signal& noisy, const Signal* clean, const GuidanceVector& label,
                              const std::vector<WaveletBasis>& bank, const DenoiseConfig& denoise_cfg) {
  noisy.validate_imu();
  PreparedWindow w;
  w.length = noisy.length();
  w.input = network_rows(noisy);
  w.label = label;
  w.bank_stack.reserve(bank.size() * kImuChannels * w.length);
  for (const auto& basis : bank) {
    const Signal d = wdsel::denoise(noisy, basis, denoise_cfg);
    for (double v : network_rows(d)) w.bank_stack.push_back(static_cast<float>(v));
    if (clean) w.bank_mse.push_back(signal_mse(d, *clean));
  }
  if (clean) w.oracle_best = static_cast<std::size_t>(
      std::min_element(w.bank_mse.begin(), w.bank_mse.end()) - w.bank_mse.begin());
  return w;
}

std::vector<PreparedWindow> prepare_dataset(const std::vector<WindowSample>& samples,
                                            const std::vector<WaveletBasis>& bank,
                                            const DenoiseConfig& denoise_cfg) {
  std::vector<PreparedWindow> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    out[i] = prepare_window(samples[i].noisy, &samples[i].clean, label_of(samples[i]), bank, denoise_cfg);
  });
  return out;
}

Signal enhance_soft(const Signal& window, const std::vector<double>& y_hat,
                    const std::vector<WaveletBasis>& bank, const DenoiseConfig& denoise_cfg,
                    double epsilon) {
  check_bank(bank, y_hat.size());
  const SelectionWeights sel = truncated_selection_weights(y_hat, epsilon);
  Signal out = Signal::zeros(window.channel_count(), window.length(), window.sample_rate);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    if (sel.weights[j] == 0.0) continue;
    const Signal d = wdsel::denoise(window, bank[j], denoise_cfg);
    for (std::size_t c = 0; c < out.channel_count(); ++c)
      for (std::size_t k = 0; k < out.length(); ++k) out.channels[c][k] += sel.weights[j] * d.channels[c][k];
  }
  return out;
}

HardSelection enhance_hard(const Signal& window, const WdsNet& model,
                           const std::vector<WaveletBasis>& bank, const DenoiseConfig& denoise_cfg) {
  check_bank(bank, model.config.bank_size);
  HardSelection out;
  out.features = extract_features(model, window);
  out.y_hat = classify(out.features, model.category);
  out.index = argmax(out.y_hat);
  out.enhanced = wdsel::denoise(window, bank[out.index], denoise_cfg);
  return out;
}

StepLosses loss_and_gradients(const std::vector<const PreparedWindow*>& batch, WdsNet& model,
                              const TrainConfig& config) {
  for (Tensor* p : model.parameters()) p->clear_grad();
  auto bg = build_batch(batch, model, config);
  bg->g.backward(bg->total);
  return bg->losses;
}

StepLosses training_step(const std::vector<const PreparedWindow*>& batch, WdsNet& model,
                         const TrainConfig& config, ad::MomentumSgd& optimizer) {
  const StepLosses losses = loss_and_gradients(batch, model, config);
  auto params = model.parameters();
  clip_gradients(params, config.grad_clip);
  optimizer.step(params);
  return losses;
}

StepLosses evaluate_loss(const std::vector<const PreparedWindow*>& batch, WdsNet& model,
                         const TrainConfig& config) {
  return build_batch(batch, model, config)->losses;
}

std::vector<std::size_t> select_indices(const WdsNet& model, const std::vector<PreparedWindow>& data) {
  std::vector<std::size_t> out(data.size());
  auto& m = const_cast<WdsNet&>(model);  // weights are copied, never bound
  parallel_for(data.size(), [&](std::size_t i) {
    Graph g;
    const Var h = features_graph(g, m, window_input(g, data[i].input, data[i].length), false);
    out[i] = argmax(classify(g.value(h).values, model.category));
  });
  return out;
}

std::vector<GuidanceVector> predict_guidance(const WdsNet& model,
                                             const std::vector<PreparedWindow>& data) {
  const auto chosen = select_indices(model, data);
  std::vector<GuidanceVector> out(data.size());
  auto& m = const_cast<WdsNet&>(model);
  parallel_for(data.size(), [&](std::size_t i) {
    Graph g;
    const Var x = window_input(g, stack_row(data[i], chosen[i]), data[i].length);
    const auto& v = g.value(guidance_graph(g, m, x, false)).values;
    std::copy(v.begin(), v.end(), out[i].begin());
  });
  return out;
}

TrainResult train(const std::vector<PreparedWindow>& data, const TrainConfig& config,
                  const ModelConfig& model_config, const std::vector<PreparedWindow>* validation) {
  config.validate();
  if (model_config.bank_size != static_cast<std::size_t>(config.bank_size))
    fail(ErrorKind::config, "model bank_size does not match training bank_size");
  TrainResult result{WdsNet::init(model_config, derive_seed(config.seed, 0)), {}};
  WdsNet& model = result.model;
  result.report.initial_s2 = renyi_entropy(model.category);
  if (config.epochs == 0 || data.empty()) return result;

  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
  ad::MomentumSgd optimizer(config.learning_rate, config.momentum);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochStats stats;
    double fsm_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const PreparedWindow*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(&data[order[i]]);
      const StepLosses s = training_step(batch, model, config, optimizer);
      const double n = static_cast<double>(batch.size());
      stats.total_loss += s.total * n;
      stats.l_attitude += s.l_attitude * n;
      stats.l_disp += s.l_disp * n;
      stats.r_sparse += s.r_sparse * n;
      stats.r_encode += s.r_encode * n;
      stats.top1_mass += s.top1_mass * n;
      fsm_sum += s.fsm_sum;
      stats.fsm_samples += s.fsm_count;
      seen += batch.size();
    }
    const double n = static_cast<double>(seen);
    stats.total_loss /= n;
    stats.l_attitude /= n;
    stats.l_disp /= n;
    stats.r_sparse /= n;
    stats.r_encode /= n;
    stats.top1_mass /= n;
    stats.fsm_score = stats.fsm_samples ? fsm_sum / static_cast<double>(stats.fsm_samples) : 0.0;
    stats.s2 = renyi_entropy(model.category);
    if (validation && !validation->empty()) {
      std::vector<GuidanceVector> labels;
      for (const auto& w : *validation) labels.push_back(w.label);
      const auto errors = guidance_errors(predict_guidance(model, *validation), labels);
      stats.val_attitude_mae_deg = errors.attitude_mae_deg;
      stats.val_position_mae_m = errors.position_mae_m;
    }
    result.report.epochs.push_back(stats);
  }
  return result;
}

}  // namespace wdsel
