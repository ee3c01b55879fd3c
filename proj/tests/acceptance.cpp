// One line per acceptance criterion. Usage: wdsel_acceptance [criterion ...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/QR>

#include "cli.hpp"
#include "gradcheck.hpp"
#include "wdsel/allan.hpp"
#include "wdsel/error.hpp"
#include "wdsel/experiment.hpp"
#include "wdsel/io.hpp"
#include "wdsel/navigation.hpp"
#include "wdsel/wavelet.hpp"

namespace fs = std::filesystem;
using namespace wdsel;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path workspace() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("wdsel_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---- 1 ----

Outcome wavelet_suite() {
  int failures = 0;
  for (const auto& b : standard_bank(16)) {
    const std::size_t len = b.filter_length();
    const double sum = std::accumulate(b.dec_lo.begin(), b.dec_lo.end(), 0.0);
    double energy = 0.0;
    for (double v : b.dec_lo) energy += v * v;
    if (std::abs(sum - std::sqrt(2.0)) >= 1e-10 || std::abs(energy - 1.0) >= 1e-10) ++failures;
    // even shifts of the scaling filter are orthogonal
    for (std::size_t s = 2; s < len; s += 2) {
      double dot = 0.0;
      for (std::size_t n = 0; n + s < len; ++n) dot += b.dec_lo[n] * b.dec_lo[n + s];
      if (std::abs(dot) >= 1e-10) ++failures;
    }
    for (std::size_t n = 0; n < len; ++n) {
      const double sign = n % 2 == 0 ? 1.0 : -1.0;
      if (std::abs(b.dec_hi[n] - sign * b.dec_lo[len - 1 - n]) >= 1e-10) ++failures;
    }
    const double centre = 0.5 * static_cast<double>(len - 1);
    for (int p = 0; p < b.vanishing_moments; ++p) {
      double moment = 0.0;
      for (std::size_t n = 0; n < len; ++n)
        moment += b.dec_hi[n] * std::pow(static_cast<double>(n) - centre, p);
      if (std::abs(moment) >= 1e-6) ++failures;
    }
  }
  double worst = 0.0;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(64, 1024);
  const auto bank = standard_bank(16);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(length(rng));
    for (auto& v : x) v = normal(rng);
    for (const auto& b : bank) {
      for (auto mode : {BoundaryMode::symmetric, BoundaryMode::periodic, BoundaryMode::zero}) {
        const int levels = std::min(3, max_feasible_level(x.size()));
        const auto y = idwt(dwt(x, b, levels, mode), b);
        for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(y[k] - x[k]));
      }
    }
  }
  return {failures == 0 && worst < 1e-8,
          fmt("16 bases, %d invariant violations; max reconstruction error %.2e over 100 signals "
              "(< 1e-8)",
              failures, worst)};
}

// ---- 2 ----

ModelConfig tiny_model() {
  ModelConfig c;
  c.feature_dim = 8;
  c.blocks = 1;
  c.channels = 4;
  c.head_channels = 4;
  c.head_blocks = 1;
  c.bank_size = 16;
  c.min_window = 32;
  return c;
}

Outcome gradient_suite() {
  SimConfig sim;
  sim.accel = {0.005, 0.02, 0.01, 10.0, 0.0};
  sim.gyro = {0.001, 0.005, 0.002, 10.0, 0.0};
  const auto data = prepare_dataset(make_dataset(2, 64, sim, 21), standard_bank(16), {});
  std::vector<const PreparedWindow*> batch;
  for (const auto& d : data) batch.push_back(&d);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    WdsNet model = WdsNet::init(tiny_model(), 50 + seed);
    TrainConfig cfg;
    cfg.lambda_sparse = 0.5;
    cfg.lambda_encode = 0.5;
    auto loss = [&](bool run_backward) {
      return run_backward ? loss_and_gradients(batch, model, cfg).total
                          : evaluate_loss(batch, model, cfg).total;
    };
    worst = std::max(worst, testing::max_gradient_error(model.parameters(), loss, 1e-5, 1e-6));
  }
  return {worst < 1e-4,
          fmt("worst relative FD error %.2e over 10 seeds, all parameters, R_sparse and R_encode "
              "active (< 1e-4)",
              worst)};
}

// ---- 3 ----

ad::Tensor matrix(std::size_t d, std::size_t c, const std::function<double(std::size_t, std::size_t)>& f) {
  ad::Tensor t = ad::Tensor::zeros({d, c}, true);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < c; ++j) t.values[i * c + j] = f(i, j);
  return t;
}

Outcome entropy_suite() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(32, 16);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                            Eigen::MatrixXd::Identity(32, 16);
  const double s_orth = renyi_entropy(matrix(32, 16, [&](auto i, auto j) { return q(i, j); }));
  const double s_eye =
      renyi_entropy(matrix(16, 16, [](auto i, auto j) { return i == j ? 1.0 : 0.0; }));

  std::vector<double> u(8), scales(16);
  for (auto& v : u) v = normal(rng);
  for (auto& v : scales) v = 0.5 + std::abs(normal(rng));
  const double s_rank1 = renyi_entropy(matrix(8, 16, [&](auto i, auto j) { return u[i] * scales[j]; }));

  const ad::Tensor w = matrix(16, 16, [&](auto, auto) { return normal(rng); });
  const double s_w = renyi_entropy(w);
  double invariance = 0.0;
  for (double c : {-3.0, 0.01, 7.5}) {
    ad::Tensor scaled = w;
    for (auto& v : scaled.values) v *= c;
    invariance = std::max(invariance, std::abs(renyi_entropy(scaled) - s_w));
  }
  for (std::size_t col = 0; col < 16; ++col) {
    ad::Tensor one = w;
    for (std::size_t i = 0; i < 16; ++i) one.values[i * 16 + col] *= 4.2;
    invariance = std::max(invariance, std::abs(renyi_entropy(one) - s_w));
  }

  ad::Tensor descent = matrix(16, 16, [&](auto, auto) { return normal(rng) + 2.0; });
  const double before = renyi_entropy(descent);
  ad::Tensor* params[] = {&descent};
  for (int step = 0; step < 100; ++step) {
    ad::Graph g;
    g.backward(r_encode_graph(g, g.param(descent)).value);
    ad::sgd_step(params, 0.05);
  }
  const double after = renyi_entropy(descent);
  const bool pass = std::abs(s_orth - 4.0) <= 1e-9 && std::abs(s_eye - 4.0) <= 1e-9 &&
                    std::abs(s_rank1) <= 1e-9 && invariance <= 1e-10 && after > before;
  return {pass, fmt("orthonormal S2 %.12f, identity S2 %.12f, rank-one S2 %.1e, invariance "
                    "drift %.1e, descent S2 %.4f -> %.4f",
                    s_orth, s_eye, std::abs(s_rank1), invariance, before, after)};
}

// ---- 4 ----

Outcome allan_closed_loop() {
  const double rate = 200.0;
  const std::size_t n = 1000000;
  const Signal zero = Signal::zeros(6, n, rate);
  double worst_n = 0.0, worst_q = 0.0, worst_b = 0.0;
  int missing = 0;
  auto rel = [](double got, double want) { return std::abs(got - want) / want; };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NoiseModel white_a, white_g;
    white_a.white_noise_density = 0.02;
    white_g.white_noise_density = 0.005;
    const Signal white = inject_noise(zero, white_a, white_g, seed);

    // The quantizer runs on top of the white dither; output minus the
    // dither-only capture is the quantization error itself.
    NoiseModel quant_a = white_a, quant_g = white_g;
    quant_a.quantization_step = 0.005;
    quant_g.quantization_step = 0.001;
    const Signal quantized = inject_noise(zero, quant_a, quant_g, seed);

    NoiseModel gm_a, gm_g;
    gm_a.bias_instability = 0.01;
    gm_a.bias_corr_time = 10.0;
    gm_g.bias_instability = 0.002;
    gm_g.bias_corr_time = 10.0;
    const Signal biased = inject_noise(zero, gm_a, gm_g, seed);

    for (std::size_t ch : {0u, 4u}) {
      const bool accel = ch < 3;
      const auto cw = extract_coefficients(allan_deviation(white.channels[ch], rate));
      std::vector<double> err(n);
      for (std::size_t k = 0; k < n; ++k) err[k] = quantized.channels[ch][k] - white.channels[ch][k];
      const auto cq = extract_coefficients(allan_deviation(err, rate));
      const auto cb = extract_coefficients(allan_deviation(biased.channels[ch], rate));
      if (!cw.rw_fit.present || !cq.qn_fit.present || !cb.bi_fit.present) ++missing;
      const double q = accel ? 0.005 : 0.001;
      worst_n = std::max(worst_n, rel(cw.rw, accel ? 0.02 : 0.005));
      worst_q = std::max(worst_q, rel(cq.qn, q / (2.0 * std::sqrt(3.0) * rate)));
      worst_b = std::max(worst_b, rel(cb.bi, accel ? 0.01 : 0.002));
    }
  }
  return {missing == 0 && worst_n < 0.10 && worst_q < 0.15 && worst_b < 0.25,
          fmt("worst relative error over 5 seeds x {accel, gyro}, 1e6 samples: N %.1f%% (< 10%%), "
              "QN %.1f%% (< 15%%), BI %.1f%% (< 25%%); missing fits %d",
              100 * worst_n, 100 * worst_q, 100 * worst_b, missing)};
}

// ---- 5 ----

Outcome navigation_closed_loop() {
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto gt = generate_trajectory({10.0, 200.0, MotionClass::spline3d, 2.0}, 40 + seed);
    const Signal imu = ideal_imu(gt);
    const Eigen::Vector3d v0 =
        (-3.0 * gt.positions[0] + 4.0 * gt.positions[1] - gt.positions[2]) * (gt.sample_rate / 2.0);
    const auto poses = strapdown(imu, gt.orientations[0], v0, gt.positions[0]);
    double worst = 0.0;
    for (std::size_t k = 0; k < gt.size(); ++k)
      worst = std::max(worst, (poses[k].p - gt.positions[k]).norm());
    worst_ratio = std::max(worst_ratio, worst / path_length(gt.positions));
  }
  Signal still = Signal::zeros(6, 2001, 200.0);
  for (auto& v : still.channels[2]) v = kStandardGravity;
  const Eigen::Vector3d p0(1, -2, 0.5);
  const auto poses = strapdown(still, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), p0);
  double drift = 0.0;
  for (const auto& pose : poses) drift = std::max(drift, (pose.p - p0).norm());
  return {worst_ratio < 1e-3 && drift < 1e-6,
          fmt("spline3d round trip worst %.2e of path length (< 1e-3, 5 seeds); static drift "
              "%.1e m over 10 s (< 1e-6)",
              worst_ratio, drift)};
}

// ---- 6, 7, 8, 11: default-config runs through the CLI ----

struct PipelineRun {
  fs::path data, model, eval;
  int code = 0;
  std::string error;
  double seconds = 0.0;
};

// Runs in a fixed directory, then moves the result to `tag`, so resolved paths
// recorded in config.json are identical between runs.
PipelineRun run_pipeline(const std::string& tag) {
  PipelineRun r;
  const fs::path root = workspace() / "run";
  r.data = root / "data";
  r.model = root / "model";
  r.eval = root / "eval";
  const auto start = Clock::now();
  const std::vector<std::vector<std::string>> steps = {
      {"simulate", "--out", r.data.string()},
      {"train", "--data", r.data.string(), "--out", r.model.string()},
      {"evaluate", "--model", r.model.string(), "--data", r.data.string(), "--out", r.eval.string()}};
  for (const auto& args : steps) {
    std::ostringstream out, err;
    r.code = cli::run(args, out, err);
    if (r.code != 0) {
      r.error = args[0] + ": " + err.str();
      while (!r.error.empty() && r.error.back() == '\n') r.error.pop_back();
      break;
    }
  }
  r.seconds = seconds_since(start);
  const fs::path moved = workspace() / tag;
  fs::rename(root, moved);
  r.data = moved / "data";
  r.model = moved / "model";
  r.eval = moved / "eval";
  return r;
}

const PipelineRun& first_run() {
  static const PipelineRun run = run_pipeline("run_a");
  return run;
}

struct DefaultResults {
  std::optional<EvaluationResult> result;
  std::string error;
};

const DefaultResults& default_results() {
  static const DefaultResults results = [] {
    DefaultResults d;
    const auto& run = first_run();
    if (run.code != 0) {
      d.error = run.error;
      return d;
    }
    try {
      const Dataset data = read_dataset(run.data);
      const LoadedModels models = read_training(run.model);
      d.result = evaluate(models.config, data, models.arms);
    } catch (const std::exception& e) {
      d.error = e.what();
    }
    return d;
  }();
  return results;
}

Outcome denoising_improvement() {
  const auto& d = default_results();
  if (!d.result) return {false, "default run failed: " + d.error};
  const std::string method = selector_method_name(true);
  double worst_rw = 1e300, worst_bi = 1e300;
  std::string rw_list, bi_list;
  bool missing = false;
  for (auto name : kImuChannelNames) {
    const std::string ch(name);
    const auto rw = allan_reduction(*d.result, method, ch, "rw");
    const auto bi = allan_reduction(*d.result, method, ch, "bi");
    missing = missing || !rw || !bi;
    rw_list += fmt(" %s=%s", ch.c_str(), rw ? fmt("%.1f", *rw).c_str() : "n/a");
    bi_list += fmt(" %s=%s", ch.c_str(), bi ? fmt("%.1f", *bi).c_str() : "n/a");
    if (rw) worst_rw = std::min(worst_rw, *rw);
    if (bi) worst_bi = std::min(worst_bi, *bi);
  }
  return {!missing && worst_rw >= 50.0 && worst_bi >= 50.0,
          "selector vs raw reduction %, need >= 50: RW" + rw_list + "; BI" + bi_list};
}

Outcome downstream_improvement() {
  const auto& d = default_results();
  if (!d.result) return {false, "default run failed: " + d.error};
  const auto& raw = method_scores(*d.result, "raw");
  const auto& sel = method_scores(*d.result, selector_method_name(true));
  auto cut = [](double before, double after) { return 100.0 * (before - after) / before; };
  const double att = cut(raw.attitude_mae_deg, sel.attitude_mae_deg);
  const double pos = cut(raw.position_mae_m, sel.position_mae_m);
  const double fr = cut(raw.frechet_normalized, sel.frechet_normalized);
  return {att >= 30.0 && pos >= 30.0 && fr >= 30.0,
          fmt("median reductions vs raw, need >= 30%%: attitude %.1f%% (%.4g -> %.4g deg), "
              "position %.1f%% (%.4g -> %.4g m), Frechet %.1f%% (%.4g -> %.4g)",
              att, raw.attitude_mae_deg, sel.attitude_mae_deg, pos, raw.position_mae_m,
              sel.position_mae_m, fr, raw.frechet_normalized, sel.frechet_normalized)};
}

Outcome selection_quality() {
  const auto& d = default_results();
  if (!d.result) return {false, "default run failed: " + d.error};
  for (const auto& s : d.result->selectors) {
    if (!s.crm_enabled) continue;
    return {s.oracle_within_10pct >= 0.80,
            fmt("hard selection within 10%% of the best-of-16 oracle MSE on %.1f%% of %zu test "
                "windows (need >= 80%%)",
                100.0 * s.oracle_within_10pct, s.selections.size())};
  }
  return {false, "no CRM selector in the default run"};
}

std::vector<fs::path> relative_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  const auto& a = first_run();
  const PipelineRun b = run_pipeline("run_b");
  if (a.code != 0 || b.code != 0)
    return {false, "pipeline failed: " + (a.code ? a.error : b.error)};
  std::size_t compared = 0;
  std::vector<std::string> differing;
  const std::pair<fs::path, fs::path> dirs[] = {{a.data, b.data}, {a.model, b.model}, {a.eval, b.eval}};
  for (const auto& [da, db] : dirs) {
    const auto fa = relative_files(da), fb = relative_files(db);
    if (fa != fb) differing.push_back(da.filename().string() + "/ (file lists)");
    for (const auto& f : fa) {
      if (f == "timing.json") continue;
      if (!fs::exists(db / f) || io::read_text(da / f) != io::read_text(db / f))
        differing.push_back((da.filename() / f).string());
      ++compared;
    }
  }
  const double slower = std::max(a.seconds, b.seconds);
  std::string detail = fmt("%zu files compared, %zu differ; default simulate+train+evaluate %.0f s "
                           "(< 1800 s)",
                           compared, differing.size(), slower);
  if (!differing.empty()) detail += "; first difference " + differing.front();
  return {differing.empty() && slower < 1800.0, detail};
}

// ---- 9, 10: CRM ablation over five seeds ----

struct AblationSeed {
  std::uint64_t seed = 0;
  double s2_on = 0, s2_off = 0, top1_on = 0, top1_off = 0;
  double att_on = 0, att_off = 0, pos_on = 0, pos_off = 0;
  std::optional<double> sil_on, sil_off;
};

ExperimentConfig ablation_config(std::uint64_t seed) {
  ExperimentConfig c = default_experiment();
  c.simulator.train_windows = 128;
  c.simulator.validation_windows = 32;
  c.simulator.test_windows = 64;
  c.simulator.static_samples = 0;
  c.simulator.seed = seed;
  c.train.seed = seed;
  c.train.epochs = 6;
  c.evaluation.crm_ablation = true;
  c.validate();
  return c;
}

const std::vector<AblationSeed>& ablation_runs() {
  static const std::vector<AblationSeed> runs = [] {
    std::vector<AblationSeed> out;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const ExperimentConfig config = ablation_config(seed);
      const Dataset data = simulate(config);
      TrainingRun run = train_arms(config, data);
      std::vector<TrainedArm> arms{run.primary, *run.ablation};
      const EvaluationResult result = evaluate(config, data, arms);
      AblationSeed s;
      s.seed = seed;
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& last = arms[i].report.epochs.back();
        const SelectorStats* stats = nullptr;
        for (const auto& st : result.selectors)
          if (st.crm_enabled == arms[i].crm_enabled) stats = &st;
        const bool on = arms[i].crm_enabled;
        (on ? s.s2_on : s.s2_off) = stats->s2;
        (on ? s.top1_on : s.top1_off) = stats->top1_mass;
        (on ? s.att_on : s.att_off) = last.val_attitude_mae_deg;
        (on ? s.pos_on : s.pos_off) = last.val_position_mae_m;
        (on ? s.sil_on : s.sil_off) = stats->silhouette;
      }
      out.push_back(s);
    }
    return out;
  }();
  return runs;
}

Outcome crm_ablation() {
  int wins = 0;
  std::string detail;
  for (const auto& s : ablation_runs()) {
    const bool a = s.s2_on > s.s2_off, b = s.top1_on > s.top1_off;
    const bool c = s.att_on <= s.att_off && s.pos_on <= s.pos_off;
    wins += a && b && c;
    detail += fmt(" | seed %llu: S2 %.3f/%.3f top1 %.3f/%.3f val att %.6g/%.6g pos %.6g/%.6g %s",
                  static_cast<unsigned long long>(s.seed), s.s2_on, s.s2_off, s.top1_on,
                  s.top1_off, s.att_on, s.att_off, s.pos_on, s.pos_off,
                  a && b && c ? "ok" : "no");
  }
  return {wins >= 4, fmt("%d/5 seeds with CRM on/off satisfying (a) S2, (b) top-1 mass, (c) "
                         "validation errors (need >= 4)",
                         wins) + detail};
}

Outcome fsm_effect() {
  int wins = 0;
  std::string detail;
  auto show = [](const std::optional<double>& v) {
    return v ? fmt("%.3f", *v) : std::string("undefined");
  };
  for (const auto& s : ablation_runs()) {
    // An undefined silhouette (fewer than two selected classes) counts as a loss.
    const bool win = s.sil_on && s.sil_off && *s.sil_on > *s.sil_off;
    wins += win;
    detail += fmt(" | seed %llu: %s/%s", static_cast<unsigned long long>(s.seed),
                  show(s.sil_on).c_str(), show(s.sil_off).c_str());
  }
  return {wins >= 4,
          fmt("%d/5 seeds with silhouette(CRM on) > silhouette(CRM off) (need >= 4)", wins) + detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "wavelet correctness", 60, wavelet_suite},
      {2, "autodiff gradients", 120, gradient_suite},
      {3, "entropy identities", 0, entropy_suite},
      {4, "allan closed loop", 300, allan_closed_loop},
      {5, "navigation closed loop", 0, navigation_closed_loop},
      {6, "denoising improvement", 0, denoising_improvement},
      {7, "downstream improvement", 0, downstream_improvement},
      {8, "selection quality", 0, selection_quality},
      {9, "crm ablation", 0, crm_ablation},
      {10, "fsm effect", 0, fsm_effect},
      {11, "end-to-end determinism", 0, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(start);
    if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
      o.pass = false;
      o.detail += fmt("; runtime over %.0f s budget", c.budget_seconds);
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  fs::remove_all(workspace());
  return failed == 0 ? 0 : 1;
}
