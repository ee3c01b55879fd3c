#include "cli.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wdsel/allan.hpp"
#include "wdsel/error.hpp"
#include "wdsel/experiment.hpp"
#include "wdsel/io.hpp"
#include "wdsel/navigation.hpp"
#include "wdsel/wavelet.hpp"

namespace wdsel::cli {

namespace {

using nlohmann::json;

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

int report(std::ostream& err, std::string_view kind, int code, const std::string& message) {
  err << "error kind=" << kind << " code=" << code << " message=\"" << one_line(message) << "\"\n";
  return code;
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? default_experiment() : load_experiment(path);
}

std::vector<WaveletBasis> bank_for(const ExperimentConfig& c) {
  return standard_bank(c.train.bank_size);
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string opt_cell(bool present, double v) { return present ? io::format_double(v) : ""; }

// ---- subcommands ----

void cmd_simulate(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed, std::ostream& out) {
  ExperimentConfig c = config_or_default(config_path);
  if (seed) c.simulator.seed = *seed;
  c.paths.data = out_dir;
  const Dataset d = simulate(c);
  write_dataset(out_dir, d);
  out << "simulated " << d.train.size() << " train, " << d.validation.size() << " validation, "
      << d.test.size() << " test windows into " << out_dir << "\n";
}

void cmd_train(const std::string& data_dir, const std::string& out_dir,
               const std::string& config_path, std::ostream& out) {
  Dataset d = read_dataset(data_dir);
  ExperimentConfig c = config_path.empty() ? d.config : load_experiment(config_path);
  c.paths.data = data_dir;
  c.paths.model = out_dir;
  const TrainingRun run = train_arms(c, d);
  write_training(out_dir, c, run);
  auto summary = [&](const TrainedArm& a) {
    const double s2 = renyi_entropy(a.model.category);
    out << (a.crm_enabled ? "crm" : "no-crm") << ": S2 " << a.report.initial_s2 << " -> " << s2;
    if (!a.report.epochs.empty())
      out << ", final loss " << a.report.epochs.back().total_loss << ", top-1 mass "
          << a.report.epochs.back().top1_mass;
    out << "\n";
  };
  summary(run.primary);
  if (run.ablation) summary(*run.ablation);
}

void cmd_enhance(const std::string& model_dir, const std::vector<std::string>& inputs,
                 const std::string& out_dir, bool soft, std::ostream& out) {
  LoadedModels m = read_training(model_dir);
  const ExperimentConfig& c = m.config;
  const auto bank = bank_for(c);
  io::ensure_directory(out_dir);
  for (const auto& input : inputs) {
    const Signal s = io::read_signal_csv(input);
    const auto r = enhance_recording(s, m.arms.front().model, bank, c.train.denoise,
                                     c.simulator.window_length, soft, c.train.epsilon_truncation);
    const fs::path target = fs::path(out_dir) / (stem_of(input) + "_enhanced.csv");
    io::write_signal_csv(target, r.enhanced);
    out << input << " -> " << target.string() << " (" << r.selections.size() << " windows)\n";
  }
  io::write_text(fs::path(out_dir) / "config.json", experiment_json(c));
}

void cmd_select(const std::string& model_dir, const std::vector<std::string>& inputs,
                const std::string& out_path, std::ostream& out) {
  LoadedModels m = read_training(model_dir);
  const ExperimentConfig& c = m.config;
  const auto bank = bank_for(c);
  std::vector<std::vector<std::string>> rows;
  for (const auto& input : inputs) {
    const Signal s = io::read_signal_csv(input);
    const auto r = enhance_recording(s, m.arms.front().model, bank, c.train.denoise,
                                     c.simulator.window_length, false, 0.0);
    for (std::size_t k = 0; k < r.selections.size(); ++k)
      rows.push_back({input, std::to_string(k), std::to_string(r.window_starts[k]),
                      std::to_string(r.selections[k]), bank[r.selections[k]].name});
  }
  const std::vector<std::string> header{"input", "window", "start_sample", "index", "wavelet"};
  if (out_path.empty()) {
    out << "input,window,start_sample,index,wavelet\n";
    for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << ','
                                   << r[4] << '\n';
  } else {
    io::write_cells_csv(out_path, header, rows);
  }
}

void cmd_allan(const std::string& input, const std::string& out_dir, bool as_json, int ppd,
               std::ostream& out) {
  const Signal s = io::read_signal_csv(input);
  std::vector<std::vector<std::string>> coef_rows, curve_rows;
  json report = json::array();
  for (std::size_t c = 0; c < kImuChannels; ++c) {
    const std::string ch(kImuChannelNames[c]);
    const AllanCurve curve = allan_deviation(s.channels[c], s.sample_rate, ppd);
    for (std::size_t i = 0; i < curve.taus.size(); ++i)
      curve_rows.push_back({ch, io::format_double(curve.taus[i]), io::format_double(curve.adev[i]),
                            std::to_string(curve.cluster_sizes[i])});
    const NoiseCoefficients k = extract_coefficients(curve);
    coef_rows.push_back({ch, opt_cell(k.qn_fit.present, k.qn), opt_cell(k.rw_fit.present, k.rw),
                         opt_cell(k.bi_fit.present, k.bi)});
    auto field = [](bool present, double v) { return present ? json(v) : json(nullptr); };
    report.push_back({{"channel", ch},
                      {"qn", field(k.qn_fit.present, k.qn)},
                      {"rw", field(k.rw_fit.present, k.rw)},
                      {"bi", field(k.bi_fit.present, k.bi)},
                      {"qn_region", {k.qn_fit.tau_min, k.qn_fit.tau_max}},
                      {"rw_region", {k.rw_fit.tau_min, k.rw_fit.tau_max}},
                      {"bi_region", {k.bi_fit.tau_min, k.bi_fit.tau_max}}});
  }
  const std::vector<std::string> header{"channel", "qn", "rw", "bi"};
  if (!out_dir.empty()) {
    io::write_cells_csv(fs::path(out_dir) / "coefficients.csv", header, coef_rows);
    io::write_cells_csv(fs::path(out_dir) / "allan_curve.csv",
                        {"channel", "tau", "adev", "cluster_size"}, curve_rows);
    if (as_json) io::write_text(fs::path(out_dir) / "coefficients.json", report.dump(2) + "\n");
  }
  if (as_json) {
    out << report.dump(2) << "\n";
  } else {
    out << "channel,qn,rw,bi\n";
    for (const auto& r : coef_rows) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
  }
}

Eigen::Vector3d parse_vec3(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(io::parse_double(item, what));
  if (v.size() != 3) fail(ErrorKind::usage, std::string(what) + " needs three comma-separated values");
  return {v[0], v[1], v[2]};
}

void cmd_reconstruct(const std::string& input, const std::string& out_path,
                     const std::string& model_dir, const std::string& truth_path,
                     const std::string& v0_text, std::ostream& out) {
  Signal s = io::read_signal_csv(input);
  if (!model_dir.empty()) {
    LoadedModels m = read_training(model_dir);
    s = enhance_recording(s, m.arms.front().model, bank_for(m.config), m.config.train.denoise,
                          m.config.simulator.window_length, false, 0.0)
            .enhanced;
  }
  Eigen::Quaterniond q0 = Eigen::Quaterniond::Identity();
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d v0 = Eigen::Vector3d::Zero();
  if (!truth_path.empty()) {
    const GroundTruth gt = io::read_trajectory_csv(truth_path);
    q0 = gt.orientations.front();
    p0 = gt.positions.front();
  }
  if (!v0_text.empty()) v0 = parse_vec3(v0_text, "--v0");
  const auto poses = strapdown(s, q0, v0, p0);
  std::vector<double> t;
  std::vector<Eigen::Vector3d> p;
  std::vector<Eigen::Quaterniond> q;
  for (const auto& pose : poses) {
    t.push_back(pose.t);
    p.push_back(pose.p);
    q.push_back(pose.q);
  }
  io::write_poses_csv(out_path, t, p, q);
  out << "reconstructed " << poses.size() << " poses into " << out_path << "\n";
}

void cmd_evaluate(const std::string& model_dir, const std::string& data_dir,
                  const std::string& out_dir, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  LoadedModels m = read_training(model_dir);
  const Dataset d = read_dataset(data_dir);
  ExperimentConfig c = m.config;
  c.paths.data = data_dir;
  c.paths.model = model_dir;
  c.paths.output = out_dir;
  const EvaluationResult r = evaluate(c, d, m.arms);
  write_evaluation(out_dir, c, r);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Wall time lives apart from the deterministic tables.
  io::write_text(fs::path(out_dir) / "timing.json",
                 json({{"evaluate_seconds", seconds}}).dump(2) + "\n");
  out << "method,attitude_mae_deg,position_mae_m,frechet_normalized\n";
  for (const auto& row : r.methods)
    out << row.method << ',' << row.attitude_mae_deg << ',' << row.position_mae_m << ','
        << row.frechet_normalized << '\n';
}

void cmd_features(const std::string& model_dir, const std::string& data_dir,
                  const std::string& split, const std::string& out_path, std::ostream& out) {
  LoadedModels m = read_training(model_dir);
  const Dataset d = read_dataset(data_dir);
  const std::vector<WindowSample>* windows = nullptr;
  if (split == "train") windows = &d.train;
  else if (split == "validation") windows = &d.validation;
  else if (split == "test") windows = &d.test;
  else fail(ErrorKind::usage, "unknown split '" + split + "'");
  const WdsNet& model = m.arms.front().model;
  const auto bank = bank_for(m.config);
  std::vector<std::string> header{"window_id", "selected", "wavelet", "dyaw", "dpitch", "droll",
                                  "dx", "dy", "dz"};
  for (std::size_t j = 0; j < model.config.feature_dim; ++j) header.push_back("h" + std::to_string(j));
  std::vector<std::vector<std::string>> rows;
  for (const auto& w : *windows) {
    const auto h = extract_features(model, w.noisy);
    const std::size_t sel = argmax(classify(h, model.category));
    std::vector<std::string> row{std::to_string(w.window_id), std::to_string(sel), bank[sel].name};
    for (double v : label_of(w)) row.push_back(io::format_double(v));
    for (double v : h) row.push_back(io::format_double(v));
    rows.push_back(std::move(row));
  }
  io::write_cells_csv(out_path, header, rows);
  out << "wrote " << rows.size() << " feature rows to " << out_path << "\n";
}

void cmd_export_bank(int bank_size, const std::string& out_path, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& b : standard_bank(bank_size)) {
    const std::pair<const char*, const std::vector<double>*> filters[] = {
        {"dec_lo", &b.dec_lo}, {"dec_hi", &b.dec_hi}, {"rec_lo", &b.rec_lo}, {"rec_hi", &b.rec_hi}};
    for (const auto& [name, f] : filters)
      for (std::size_t i = 0; i < f->size(); ++i)
        rows.push_back({b.name, name, std::to_string(i), io::format_double((*f)[i])});
  }
  const std::vector<std::string> header{"wavelet", "filter", "index", "value"};
  if (out_path.empty()) {
    out << "wavelet,filter,index,value\n";
    for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
  } else {
    io::write_cells_csv(out_path, header, rows);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wavelet-selection denoising for IMU signals", "wdsel"};
  app.require_subcommand(1);

  std::string config, out_dir, data, model, split = "test", truth, v0;
  std::vector<std::string> inputs;
  std::string input;
  bool soft = false, as_json = false;
  int ppd = 10, bank_size = 16;
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset directory");
  sim->add_option("--config", config, "experiment config (JSON)");
  sim->add_option("--out", out_dir, "dataset directory")->required();
  sim->add_option("--seed", seed, "override simulator.seed");

  auto* tr = app.add_subcommand("train", "train the selector (and the CRM ablation arm)");
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out_dir, "model directory")->required();
  tr->add_option("--config", config, "config overriding the dataset's");

  auto* en = app.add_subcommand("enhance", "denoise recordings with the selected wavelets");
  en->add_option("--model", model, "model directory")->required();
  en->add_option("--input", inputs, "signal CSV (repeatable)")->required();
  en->add_option("--out", out_dir, "output directory")->required();
  en->add_flag("--soft", soft, "use the soft mixture instead of the hard choice");

  auto* se = app.add_subcommand("select", "print the chosen wavelet per window");
  se->add_option("--model", model, "model directory")->required();
  se->add_option("--input", inputs, "signal CSV (repeatable)")->required();
  se->add_option("--out", out_dir, "output CSV (stdout when omitted)");

  auto* al = app.add_subcommand("allan", "Allan deviation and noise coefficients");
  al->add_option("--input", input, "static signal CSV")->required();
  al->add_option("--out", out_dir, "output directory");
  al->add_flag("--json", as_json, "JSON report");
  al->add_option("--points-per-decade", ppd, "tau grid density")->check(CLI::PositiveNumber);

  auto* re = app.add_subcommand("reconstruct", "strapdown trajectory from a signal CSV");
  re->add_option("--input", input, "signal CSV")->required();
  re->add_option("--out", out_dir, "trajectory CSV")->required();
  re->add_option("--model", model, "enhance with this model first");
  re->add_option("--truth", truth, "trajectory CSV giving the initial pose");
  re->add_option("--v0", v0, "initial velocity vx,vy,vz");

  auto* ev = app.add_subcommand("evaluate", "raw vs baseline vs selector comparison tables");
  ev->add_option("--model", model, "model directory")->required();
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--out", out_dir, "report directory")->required();

  auto* fe = app.add_subcommand("features", "feature vectors and labels as CSV");
  fe->add_option("--model", model, "model directory")->required();
  fe->add_option("--data", data, "dataset directory")->required();
  fe->add_option("--split", split, "train, validation or test");
  fe->add_option("--out", out_dir, "output CSV")->required();

  auto* eb = app.add_subcommand("export-bank", "filter coefficients of the wavelet bank");
  eb->add_option("--bank-size", bank_size, "5, 10 or 16");
  eb->add_option("--out", out_dir, "output CSV (stdout when omitted)");

  std::vector<std::string> argv_store{"wdsel"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report(err, "usage", static_cast<int>(ErrorKind::usage), e.what());
  }

  try {
    if (sim->parsed()) cmd_simulate(config, out_dir, seed, out);
    else if (tr->parsed()) cmd_train(data, out_dir, config, out);
    else if (en->parsed()) cmd_enhance(model, inputs, out_dir, soft, out);
    else if (se->parsed()) cmd_select(model, inputs, out_dir, out);
    else if (al->parsed()) cmd_allan(input, out_dir, as_json, ppd, out);
    else if (re->parsed()) cmd_reconstruct(input, out_dir, model, truth, v0, out);
    else if (ev->parsed()) cmd_evaluate(model, data, out_dir, out);
    else if (fe->parsed()) cmd_features(model, data, split, out_dir, out);
    else if (eb->parsed()) cmd_export_bank(bank_size, out_dir, out);
  } catch (const Error& e) {
    return report(err, to_string(e.kind()), e.exit_code(), e.what());
  } catch (const fs::filesystem_error& e) {
    return report(err, "io", static_cast<int>(ErrorKind::io), e.what());
  } catch (const std::exception& e) {
    return report(err, "internal", 1, e.what());
  }
  return 0;
}

}  // namespace wdsel::cli
