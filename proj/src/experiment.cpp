#include "wdsel/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>

#include <json.hpp>

#include "wdsel/checkpoint.hpp"
#include "wdsel/error.hpp"
#include "wdsel/io.hpp"
#include "wdsel/metrics.hpp"
#include "wdsel/navigation.hpp"
#include "wdsel/parallel.hpp"
#include "wdsel/wavelet.hpp"

namespace wdsel {

using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "wdsel-dataset/1";
constexpr const char* kModelFormat = "wdsel-model/1";
constexpr std::uint64_t kStaticStream = 0x57A71C;

std::string window_stem(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", id);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string cell(double v) { return std::isfinite(v) ? io::format_double(v) : ""; }
std::string cell(const std::optional<double>& v) { return v ? cell(*v) : ""; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

// ---- datasets ----

Dataset simulate(const ExperimentConfig& config) {
  config.validate();
  const auto& s = config.simulator;
  Dataset d;
  d.config = config;
  const std::size_t total = s.train_windows + s.validation_windows + s.test_windows;
  auto all = make_dataset(total, s.window_length, s.sim, s.seed);
  auto first = std::make_move_iterator(all.begin());
  d.train.assign(first, first + static_cast<std::ptrdiff_t>(s.train_windows));
  d.validation.assign(first + static_cast<std::ptrdiff_t>(s.train_windows),
                      first + static_cast<std::ptrdiff_t>(s.train_windows + s.validation_windows));
  d.test.assign(first + static_cast<std::ptrdiff_t>(s.train_windows + s.validation_windows),
                std::make_move_iterator(all.end()));
  if (s.static_samples > 0)
    d.static_capture = static_capture(s.static_samples, s.sim.rate, s.sim.accel, s.sim.gyro,
                                      derive_seed(s.seed, kStaticStream));
  return d;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  io::ensure_directory(dir / "windows");
  json windows = json::array();
  std::vector<io::LabelRow> labels;
  auto emit = [&](const std::vector<WindowSample>& split, const char* name) {
    for (const auto& w : split) {
      const std::string stem = "windows/" + window_stem(w.window_id);
      io::write_signal_csv(dir / (stem + "_noisy.csv"), w.noisy, w.truth.t.front());
      io::write_signal_csv(dir / (stem + "_clean.csv"), w.clean, w.truth.t.front());
      io::write_trajectory_csv(dir / (stem + "_truth.csv"), w.truth);
      windows.push_back({{"id", w.window_id},
                         {"split", name},
                         {"motion", std::string(to_string(w.motion))},
                         {"initial_velocity", vec_json(w.initial_velocity)},
                         {"noisy", stem + "_noisy.csv"},
                         {"clean", stem + "_clean.csv"},
                         {"truth", stem + "_truth.csv"}});
      labels.push_back({w.window_id, label_of(w)});
    }
  };
  emit(data.train, "train");
  emit(data.validation, "validation");
  emit(data.test, "test");
  io::write_labels_csv(dir / "labels.csv", labels);
  json manifest = {{"format", kDatasetFormat},
                   {"seed", data.config.simulator.seed},
                   {"rate", data.config.simulator.sim.rate},
                   {"window_length", data.config.simulator.window_length},
                   {"windows", windows},
                   {"static", data.static_capture.length() ? json("static.csv") : json(nullptr)}};
  if (data.static_capture.length()) io::write_signal_csv(dir / "static.csv", data.static_capture);
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  io::write_text(dir / "config.json", experiment_json(data.config));
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::io, "dataset directory not found: " + dir.string());
  Dataset d;
  d.config = load_experiment(dir / "config.json");
  json manifest;
  try {
    manifest = json::parse(io::read_text(dir / "manifest.json"));
    if (manifest.at("format").get<std::string>() != kDatasetFormat)
      fail(ErrorKind::version, "unsupported dataset format " + manifest.at("format").dump());
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "malformed dataset manifest: " + std::string(e.what()));
  }
  const auto labels = io::read_labels_csv(dir / "labels.csv");
  std::map<std::size_t, GuidanceVector> label_by_id;
  for (const auto& r : labels) label_by_id[r.window_id] = r.label;

  try {
    for (const auto& entry : manifest.at("windows")) {
      WindowSample w;
      w.window_id = entry.at("id").get<std::size_t>();
      w.motion = motion_class_from_string(entry.at("motion").get<std::string>());
      const auto& v0 = entry.at("initial_velocity");
      w.initial_velocity = {v0.at(0).get<double>(), v0.at(1).get<double>(), v0.at(2).get<double>()};
      w.noisy = io::read_signal_csv(dir / entry.at("noisy").get<std::string>());
      w.clean = io::read_signal_csv(dir / entry.at("clean").get<std::string>());
      w.truth = io::read_trajectory_csv(dir / entry.at("truth").get<std::string>());
      if (w.noisy.length() != w.clean.length() || w.noisy.length() != w.truth.size())
        fail(ErrorKind::input, "window " + std::to_string(w.window_id) + " files differ in length");
      auto it = label_by_id.find(w.window_id);
      if (it == label_by_id.end())
        fail(ErrorKind::input, "no label for window " + std::to_string(w.window_id));
      w.delta_attitude = {it->second[0], it->second[1], it->second[2]};
      w.delta_position = {it->second[3], it->second[4], it->second[5]};
      const std::string split = entry.at("split").get<std::string>();
      if (split == "train") d.train.push_back(std::move(w));
      else if (split == "validation") d.validation.push_back(std::move(w));
      else if (split == "test") d.test.push_back(std::move(w));
      else fail(ErrorKind::input, "unknown split '" + split + "'");
    }
    if (!manifest.at("static").is_null())
      d.static_capture = io::read_signal_csv(dir / manifest.at("static").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "malformed dataset manifest: " + std::string(e.what()));
  }
  return d;
}

// ---- training ----

TrainingRun train_arms(const ExperimentConfig& config, const Dataset& data) {
  config.validate();
  if (data.train.empty()) fail(ErrorKind::input, "dataset has no training windows");
  const auto bank = standard_bank(config.train.bank_size);
  const auto train_set = prepare_dataset(data.train, bank, config.train.denoise);
  const auto val_set = prepare_dataset(data.validation, bank, config.train.denoise);
  const auto* val = val_set.empty() ? nullptr : &val_set;

  auto run_arm = [&](bool crm) {
    TrainConfig tc = config.train;
    tc.crm_enabled = crm;
    TrainResult r = train(train_set, tc, config.model, val);
    return TrainedArm{crm, std::move(r.model), std::move(r.report)};
  };
  TrainingRun run{run_arm(config.train.crm_enabled), std::nullopt};
  if (config.evaluation.crm_ablation) run.ablation = run_arm(!config.train.crm_enabled);
  return run;
}

void write_train_report_csv(const fs::path& path, const TrainReport& report) {
  std::vector<std::vector<double>> rows;
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& s = report.epochs[e];
    rows.push_back({static_cast<double>(e + 1), s.total_loss, s.l_attitude, s.l_disp, s.r_sparse,
                    s.r_encode, s.s2, s.top1_mass, s.fsm_score,
                    static_cast<double>(s.fsm_samples), s.val_attitude_mae_deg,
                    s.val_position_mae_m});
  }
  // Missing validation values are written as empty cells.
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    std::vector<std::string> c;
    for (double v : r) c.push_back(cell(v));
    cells.push_back(std::move(c));
  }
  io::write_cells_csv(path,
                      {"epoch", "total_loss", "l_attitude", "l_disp", "r_sparse", "r_encode", "s2",
                       "top1_mass", "fsm_score", "fsm_samples", "val_attitude_mae_deg",
                       "val_position_mae_m"},
                      cells);
}

namespace {

void write_arm(const fs::path& dir, const TrainedArm& arm) {
  io::ensure_directory(dir);
  save_checkpoint(arm.model, dir / "model.ckpt");
  write_train_report_csv(dir / "train_report.csv", arm.report);
  json info = {{"format", kModelFormat},
               {"crm_enabled", arm.crm_enabled},
               {"initial_s2", arm.report.initial_s2},
               {"final_s2", renyi_entropy(arm.model.category)},
               {"architecture_hash", arm.model.architecture_hash()},
               {"epochs", arm.report.epochs.size()}};
  io::write_text(dir / "arm.json", info.dump(2) + "\n");
}

bool read_arm_crm(const fs::path& dir) {
  try {
    const json info = json::parse(io::read_text(dir / "arm.json"));
    if (info.at("format").get<std::string>() != kModelFormat)
      fail(ErrorKind::version, "unsupported model directory format in " + dir.string());
    return info.at("crm_enabled").get<bool>();
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "malformed " + (dir / "arm.json").string() + ": " + e.what());
  }
}

}  // namespace

void write_training(const fs::path& dir, const ExperimentConfig& config, const TrainingRun& run) {
  write_arm(dir, run.primary);
  if (run.ablation) write_arm(dir / "ablation", *run.ablation);
  io::write_text(dir / "config.json", experiment_json(config));
}

LoadedModels read_training(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::io, "model directory not found: " + dir.string());
  LoadedModels out;
  out.config = load_experiment(dir / "config.json");
  auto load_arm = [&](const fs::path& d) {
    TrainedArm arm;
    arm.crm_enabled = read_arm_crm(d);
    arm.model = load_checkpoint(d / "model.ckpt", out.config.model);
    return arm;
  };
  out.arms.push_back(load_arm(dir));
  if (fs::exists(dir / "ablation" / "model.ckpt")) out.arms.push_back(load_arm(dir / "ablation"));
  return out;
}

// ---- evaluation ----

WindowNavError navigation_error(const Signal& signal, const WindowSample& w,
                                std::size_t resample_points) {
  const Eigen::Quaterniond q0 = w.truth.orientations.front();
  const Eigen::Vector3d att = window_attitude_change(signal, q0).delta;
  const Eigen::Vector3d disp = window_displacement(signal, q0, w.initial_velocity);
  const GuidanceVector pred{att[0], att[1], att[2], disp[0], disp[1], disp[2]};
  const auto errors = guidance_errors({pred}, {label_of(w)});
  WindowNavError out{errors.attitude_mae_deg, errors.position_mae_m, std::nullopt};

  const auto poses = strapdown(signal, q0, w.initial_velocity, w.truth.positions.front());
  PointSequence recon;
  recon.reserve(poses.size());
  for (const auto& p : poses) recon.push_back(p.p);
  try {
    out.frechet_normalized = align_then_score(recon, w.truth.positions, resample_points).normalized;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::alignment) throw;
  }
  return out;
}

std::string selector_method_name(bool crm_enabled) {
  return crm_enabled ? "selector_crm" : "selector_nocrm";
}

namespace {

struct Method {
  std::string name;
  // Per-window enhancement; null for the raw signal.
  std::function<Signal(const Signal&, std::size_t window)> enhance;
};

MethodScores score_method(const Method& m, const std::vector<WindowSample>& test,
                          std::size_t resample_points) {
  const std::size_t n = test.size();
  std::vector<WindowNavError> errs(n);
  std::vector<double> mse(n);
  parallel_for(n, [&](std::size_t i) {
    const Signal s = m.enhance ? m.enhance(test[i].noisy, i) : test[i].noisy;
    errs[i] = navigation_error(s, test[i], resample_points);
    mse[i] = signal_mse(s, test[i].clean);
  });
  MethodScores out;
  out.method = m.name;
  std::vector<double> att, pos, fr;
  for (const auto& e : errs) {
    att.push_back(e.attitude_mae_deg);
    pos.push_back(e.position_mae_m);
    if (e.frechet_normalized) fr.push_back(*e.frechet_normalized);
  }
  out.attitude_mae_deg = median(att);
  out.position_mae_m = median(pos);
  out.frechet_normalized = median(fr);
  out.windows = n;
  out.frechet_windows = fr.size();
  out.denoise_mse = std::accumulate(mse.begin(), mse.end(), 0.0) / static_cast<double>(n);
  return out;
}

/// Window-by-window enhancement of a long recording with a per-window choice.
Signal enhance_static(const Signal& capture, std::size_t window_length,
                      const std::function<Signal(const Signal&)>& enhance) {
  const std::size_t n_windows = capture.length() / window_length;
  std::vector<Signal> parts(n_windows);
  parallel_for(n_windows, [&](std::size_t k) {
    parts[k] = enhance(capture.slice(k * window_length, window_length));
  });
  Signal out = Signal::zeros(kImuChannels, n_windows * window_length, capture.sample_rate);
  for (std::size_t k = 0; k < n_windows; ++k)
    for (std::size_t c = 0; c < kImuChannels; ++c)
      std::copy(parts[k].channels[c].begin(), parts[k].channels[c].end(),
                out.channels[c].begin() + static_cast<std::ptrdiff_t>(k * window_length));
  return out;
}

std::vector<AllanRow> allan_rows(const std::string& method, const Signal& s, int ppd) {
  std::vector<AllanRow> rows(kImuChannels);
  parallel_for(kImuChannels, [&](std::size_t c) {
    rows[c].method = method;
    rows[c].channel = std::string(kImuChannelNames[c]);
    try {
      const AllanCurve curve = allan_deviation(s.channels[c], s.sample_rate, ppd);
      rows[c].coefficients = extract_coefficients(curve);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::analysis) throw;
      rows[c].note = e.what();
    }
  });
  return rows;
}

}  // namespace

EvaluationResult evaluate(const ExperimentConfig& config, const Dataset& data,
                          const std::vector<TrainedArm>& arms) {
  config.validate();
  if (data.test.empty()) fail(ErrorKind::input, "dataset has no test windows");
  const auto& denoise_cfg = config.train.denoise;
  const auto bank = standard_bank(config.train.bank_size);
  for (const auto& arm : arms)
    if (arm.model.config.bank_size != bank.size())
      fail(ErrorKind::hash_mismatch, "model bank size does not match the configured bank");
  const WaveletBasis baseline = basis_by_name(config.evaluation.baseline);
  const std::size_t resample = config.evaluation.resample_points;

  EvaluationResult result;
  for (const auto& b : bank) result.bank.push_back(b.name);
  const auto prepared = prepare_dataset(data.test, bank, denoise_cfg);

  std::vector<Method> methods;
  methods.push_back({"raw", nullptr});
  // Noise-free input: the floor set by integration and labeling alone.
  methods.push_back({"clean_reference", [&data](const Signal&, std::size_t i) {
                       return data.test[i].clean;
                     }});
  methods.push_back({"baseline_" + baseline.name, [&](const Signal& s, std::size_t) {
                       return denoise(s, baseline, denoise_cfg);
                     }});
  for (const auto& arm : arms) {
    SelectorStats st;
    st.method = selector_method_name(arm.crm_enabled);
    st.crm_enabled = arm.crm_enabled;
    st.s2 = renyi_entropy(arm.model.category);
    const std::size_t n = data.test.size();
    std::vector<std::vector<double>> feats(n);
    std::vector<double> mass(n);
    st.selections.assign(n, 0);
    parallel_for(n, [&](std::size_t i) {
      feats[i] = extract_features(arm.model, data.test[i].noisy);
      const auto y = classify(feats[i], arm.model.category);
      st.selections[i] = argmax(y);
      mass[i] = top1_mass(y);
    });
    st.histogram.assign(bank.size(), 0);
    std::size_t within = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ++st.histogram[st.selections[i]];
      const auto& mses = prepared[i].bank_mse;
      const double best = *std::min_element(mses.begin(), mses.end());
      if (mses[st.selections[i]] <= 1.1 * best) ++within;
    }
    st.oracle_within_10pct = static_cast<double>(within) / static_cast<double>(n);
    st.top1_mass = std::accumulate(mass.begin(), mass.end(), 0.0) / static_cast<double>(n);
    st.silhouette = silhouette_score(feats, st.selections).score;
    std::vector<GuidanceVector> labels;
    for (const auto& w : prepared) labels.push_back(w.label);
    const auto head = guidance_errors(predict_guidance(arm.model, prepared), labels);
    st.head_attitude_mae_deg = head.attitude_mae_deg;
    st.head_position_mae_m = head.position_mae_m;
    result.selectors.push_back(st);

    const auto selections = st.selections;
    methods.push_back({st.method, [&bank, &denoise_cfg, selections](const Signal& s, std::size_t i) {
                         return denoise(s, bank[selections[i]], denoise_cfg);
                       }});
  }
  for (const auto& m : methods) result.methods.push_back(score_method(m, data.test, resample));

  if (data.static_capture.length() >= config.simulator.window_length) {
    const int ppd = config.evaluation.allan_points_per_decade;
    const std::size_t wl = config.simulator.window_length;
    const Signal raw = data.static_capture.slice(0, (data.static_capture.length() / wl) * wl);
    auto append = [&](std::vector<AllanRow> rows) {
      for (auto& r : rows) result.allan.push_back(std::move(r));
    };
    append(allan_rows("raw", raw, ppd));
    append(allan_rows(methods[2].name,
                      enhance_static(raw, wl, [&](const Signal& w) {
                        return denoise(w, baseline, denoise_cfg);
                      }),
                      ppd));
    for (const auto& arm : arms) {
      append(allan_rows(selector_method_name(arm.crm_enabled),
                        enhance_static(raw, wl, [&](const Signal& w) {
                          return enhance_hard(w, arm.model, bank, denoise_cfg).enhanced;
                        }),
                        ppd));
    }
  }
  return result;
}

const MethodScores& method_scores(const EvaluationResult& result, const std::string& method) {
  for (const auto& m : result.methods)
    if (m.method == method) return m;
  fail(ErrorKind::input, "no evaluation row for method '" + method + "'");
}

std::optional<double> allan_reduction(const EvaluationResult& result, const std::string& method,
                                      const std::string& channel, const std::string& coefficient) {
  auto find = [&](const std::string& m) -> const AllanRow* {
    for (const auto& r : result.allan)
      if (r.method == m && r.channel == channel) return &r;
    return nullptr;
  };
  const AllanRow* raw = find("raw");
  const AllanRow* enh = find(method);
  if (!raw || !enh || !raw->coefficients || !enh->coefficients) return std::nullopt;
  auto pick = [&](const NoiseCoefficients& c) -> std::optional<double> {
    if (coefficient == "qn") return c.qn_fit.present ? std::optional(c.qn) : std::nullopt;
    if (coefficient == "rw") return c.rw_fit.present ? std::optional(c.rw) : std::nullopt;
    if (coefficient == "bi") return c.bi_fit.present ? std::optional(c.bi) : std::nullopt;
    fail(ErrorKind::usage, "unknown Allan coefficient '" + coefficient + "'");
  };
  const auto a = pick(*raw->coefficients);
  const auto b = pick(*enh->coefficients);
  if (!a || !b) return std::nullopt;
  return reduction_percent(*a, *b);
}

void write_evaluation(const fs::path& dir, const ExperimentConfig& config,
                      const EvaluationResult& result) {
  io::ensure_directory(dir);
  io::write_text(dir / "config.json", experiment_json(config));

  std::vector<std::vector<std::string>> rows;
  json methods = json::array();
  const MethodScores& raw = method_scores(result, "raw");
  auto reduction = [](double a, double b) -> std::optional<double> {
    if (!(a > 0.0) || !std::isfinite(b)) return std::nullopt;
    return 100.0 * (a - b) / a;
  };
  for (const auto& m : result.methods) {
    const auto ra = reduction(raw.attitude_mae_deg, m.attitude_mae_deg);
    const auto rp = reduction(raw.position_mae_m, m.position_mae_m);
    const auto rf = reduction(raw.frechet_normalized, m.frechet_normalized);
    rows.push_back({m.method, cell(m.attitude_mae_deg), cell(m.position_mae_m),
                    cell(m.frechet_normalized), cell(m.denoise_mse), std::to_string(m.windows),
                    std::to_string(m.frechet_windows), cell(ra), cell(rp), cell(rf)});
    methods.push_back({{"method", m.method},
                       {"attitude_mae_deg", m.attitude_mae_deg},
                       {"position_mae_m", m.position_mae_m},
                       {"frechet_normalized", m.frechet_normalized},
                       {"denoise_mse", m.denoise_mse},
                       {"windows", m.windows},
                       {"frechet_windows", m.frechet_windows},
                       {"attitude_reduction_pct", optional_json(ra)},
                       {"position_reduction_pct", optional_json(rp)},
                       {"frechet_reduction_pct", optional_json(rf)}});
  }
  io::write_cells_csv(dir / "results.csv",
                      {"method", "attitude_mae_deg", "position_mae_m", "frechet_normalized",
                       "denoise_mse", "windows", "frechet_windows", "attitude_reduction_pct",
                       "position_reduction_pct", "frechet_reduction_pct"},
                      rows);

  rows.clear();
  json allan = json::array();
  for (const auto& r : result.allan) {
    std::optional<double> qn, rw, bi;
    if (r.coefficients) {
      const auto& c = *r.coefficients;
      if (c.qn_fit.present) qn = c.qn;
      if (c.rw_fit.present) rw = c.rw;
      if (c.bi_fit.present) bi = c.bi;
    }
    const auto rq = allan_reduction(result, r.method, r.channel, "qn");
    const auto rr = allan_reduction(result, r.method, r.channel, "rw");
    const auto rb = allan_reduction(result, r.method, r.channel, "bi");
    rows.push_back({r.method, r.channel, cell(qn), cell(rw), cell(bi), cell(rq), cell(rr),
                    cell(rb), r.note.empty() ? "" : "analysis_error"});
    allan.push_back({{"method", r.method},
                     {"channel", r.channel},
                     {"qn", optional_json(qn)},
                     {"rw", optional_json(rw)},
                     {"bi", optional_json(bi)},
                     {"qn_reduction_pct", optional_json(rq)},
                     {"rw_reduction_pct", optional_json(rr)},
                     {"bi_reduction_pct", optional_json(rb)},
                     {"note", r.note}});
  }
  io::write_cells_csv(dir / "allan.csv",
                      {"method", "channel", "qn", "rw", "bi", "qn_reduction_pct",
                       "rw_reduction_pct", "bi_reduction_pct", "status"},
                      rows);

  rows.clear();
  json selectors = json::array();
  for (const auto& s : result.selectors) {
    rows.push_back({s.method, s.crm_enabled ? "1" : "0", cell(s.oracle_within_10pct),
                    cell(s.top1_mass), cell(s.s2), cell(s.silhouette),
                    cell(s.head_attitude_mae_deg), cell(s.head_position_mae_m)});
    json hist = json::object();
    for (std::size_t j = 0; j < s.histogram.size(); ++j) hist[result.bank[j]] = s.histogram[j];
    selectors.push_back({{"method", s.method},
                         {"crm_enabled", s.crm_enabled},
                         {"oracle_within_10pct", s.oracle_within_10pct},
                         {"top1_mass", s.top1_mass},
                         {"s2", s.s2},
                         {"silhouette", optional_json(s.silhouette)},
                         {"head_attitude_mae_deg", s.head_attitude_mae_deg},
                         {"head_position_mae_m", s.head_position_mae_m},
                         {"histogram", hist}});
  }
  io::write_cells_csv(dir / "selection.csv",
                      {"method", "crm_enabled", "oracle_within_10pct", "top1_mass", "s2",
                       "silhouette", "head_attitude_mae_deg", "head_position_mae_m"},
                      rows);

  if (!result.selectors.empty()) {
    rows.clear();
    std::vector<std::string> header{"test_index"};
    for (const auto& s : result.selectors) header.push_back(s.method);
    for (std::size_t i = 0; i < result.selectors.front().selections.size(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (const auto& s : result.selectors) row.push_back(result.bank[s.selections[i]]);
      rows.push_back(std::move(row));
    }
    io::write_cells_csv(dir / "selections.csv", header, rows);
  }

  json all = {{"methods", methods}, {"allan", allan}, {"selectors", selectors},
              {"bank", result.bank}};
  io::write_text(dir / "results.json", all.dump(2) + "\n");
}

// ---- single recordings ----

EnhancedRecording enhance_recording(const Signal& signal, const WdsNet& model,
                                    const std::vector<WaveletBasis>& bank,
                                    const DenoiseConfig& denoise_cfg, std::size_t window_length,
                                    bool soft, double epsilon_truncation) {
  signal.validate_imu();
  if (window_length == 0) fail(ErrorKind::config, "window length must be positive");
  if (bank.size() != model.config.bank_size)
    fail(ErrorKind::hash_mismatch, "model bank size does not match the configured bank");
  const std::size_t n = signal.length();
  if (n < window_length)
    fail(ErrorKind::input, "recording has " + std::to_string(n) + " samples, need at least " +
                               std::to_string(window_length));
  EnhancedRecording out;
  const std::size_t count = n / window_length;
  std::vector<Signal> parts(count);
  out.selections.assign(count, 0);
  for (std::size_t k = 0; k < count; ++k) out.window_starts.push_back(k * window_length);
  parallel_for(count, [&](std::size_t k) {
    const std::size_t begin = k * window_length;
    const std::size_t len = k + 1 == count ? n - begin : window_length;
    const Signal w = signal.slice(begin, len);
    if (soft) {
      const auto y = classify(extract_features(model, w), model.category);
      out.selections[k] = argmax(y);
      const double peak = *std::max_element(y.begin(), y.end());
      parts[k] = enhance_soft(w, y, bank, denoise_cfg, epsilon_truncation * peak);
    } else {
      HardSelection h = enhance_hard(w, model, bank, denoise_cfg);
      out.selections[k] = h.index;
      parts[k] = std::move(h.enhanced);
    }
  });
  out.enhanced = Signal::zeros(kImuChannels, n, signal.sample_rate);
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t c = 0; c < kImuChannels; ++c)
      std::copy(parts[k].channels[c].begin(), parts[k].channels[c].end(),
                out.enhanced.channels[c].begin() +
                    static_cast<std::ptrdiff_t>(out.window_starts[k]));
  return out;
}

}  // namespace wdsel
