#include "wdsel/config.hpp"

#include <set>

#include <json.hpp>

#include "wdsel/error.hpp"
#include "wdsel/io.hpp"
#include "wdsel/wavelet.hpp"

namespace wdsel {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> keys)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::config, where("") + " must be an object");
    for (const auto& [k, v] : j_.items())
      if (!keys.count(k)) fail(ErrorKind::config, "unknown key '" + where(k) + "'");
  }

  const json* find(const std::string& key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where(const std::string& key) const {
    if (path_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void get(const std::string& key, double& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number()) type_error(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, std::uint64_t& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        type_error(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, int& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) type_error(key, "an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& key, bool& out) const {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) type_error(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) const {
    if (const json* v = find(key)) {
      if (!v->is_string()) type_error(key, "a string");
      out = v->get<std::string>();
    }
  }

  [[noreturn]] void type_error(const std::string& key, const char* what) const {
    fail(ErrorKind::config, "'" + where(key) + "' must be " + what);
  }

 private:
  const json& j_;
  std::string path_;
};

void read_noise(const Section& parent, const std::string& key, NoiseModel& m) {
  const json* j = parent.find(key);
  if (!j) return;
  Section s(*j, parent.where(key),
            {"quantization_step", "white_noise_density", "bias_instability", "bias_corr_time",
             "initial_bias"});
  s.get("quantization_step", m.quantization_step);
  s.get("white_noise_density", m.white_noise_density);
  s.get("bias_instability", m.bias_instability);
  s.get("bias_corr_time", m.bias_corr_time);
  s.get("initial_bias", m.initial_bias);
}

json noise_json(const NoiseModel& m) {
  return {{"quantization_step", m.quantization_step},
          {"white_noise_density", m.white_noise_density},
          {"bias_instability", m.bias_instability},
          {"bias_corr_time", m.bias_corr_time},
          {"initial_bias", m.initial_bias}};
}

}  // namespace

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.simulator.sim.accel = {0.005, 0.02, 0.01, 10.0, 0.0};
  c.simulator.sim.gyro = {0.001, 0.005, 0.002, 10.0, 0.0};
  c.train.epochs = 10;
  return c;
}

void ExperimentConfig::validate() const {
  const auto& s = simulator;
  if (!(s.sim.rate > 0.0) || !std::isfinite(s.sim.rate))
    fail(ErrorKind::config, "simulator.rate must be positive");
  if (!(s.sim.scale > 0.0) || !std::isfinite(s.sim.scale))
    fail(ErrorKind::config, "simulator.scale must be positive");
  if (s.sim.motions.empty()) fail(ErrorKind::config, "simulator.motions must not be empty");
  s.sim.accel.validate();
  s.sim.gyro.validate();
  if (s.window_length < model.min_window)
    fail(ErrorKind::config, "simulator.window_length " + std::to_string(s.window_length) +
                                " is below model.min_window " + std::to_string(model.min_window));
  if (s.train_windows == 0 || s.test_windows == 0)
    fail(ErrorKind::config, "simulator.train_windows and test_windows must be positive");
  if (s.static_samples != 0 && s.static_samples < 128)
    fail(ErrorKind::config, "simulator.static_samples must be 0 or at least 128");
  train.validate();
  if (model.bank_size != static_cast<std::size_t>(train.bank_size))
    fail(ErrorKind::config, "model bank size must follow train.bank_size");
  if (model.feature_dim == 0 || model.channels == 0 || model.head_channels == 0)
    fail(ErrorKind::config, "model dimensions must be positive");
  if (evaluation.allan_points_per_decade < 1)
    fail(ErrorKind::config, "evaluation.allan_points_per_decade must be positive");
  if (evaluation.resample_points < 3)
    fail(ErrorKind::config, "evaluation.resample_points must be at least 3");
  const int levels = train.denoise.levels;
  if (levels < 1 || levels > max_feasible_level(s.window_length))
    fail(ErrorKind::config, "train.denoise.levels is not feasible for the window length");
  basis_by_name(evaluation.baseline);
}

ExperimentConfig parse_experiment(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = default_experiment();
  Section top(root, "", {"simulator", "model", "train", "evaluation", "paths"});

  if (const json* j = top.find("simulator")) {
    Section s(*j, "simulator",
              {"rate", "motions", "scale", "accel", "gyro", "window_length", "train_windows",
               "validation_windows", "test_windows", "static_samples", "seed"});
    s.get("rate", c.simulator.sim.rate);
    s.get("scale", c.simulator.sim.scale);
    s.get("window_length", c.simulator.window_length);
    s.get("train_windows", c.simulator.train_windows);
    s.get("validation_windows", c.simulator.validation_windows);
    s.get("test_windows", c.simulator.test_windows);
    s.get("static_samples", c.simulator.static_samples);
    s.get("seed", c.simulator.seed);
    if (const json* m = s.find("motions")) {
      if (!m->is_array()) s.type_error("motions", "an array of motion names");
      c.simulator.sim.motions.clear();
      for (const auto& v : *m) {
        if (!v.is_string()) s.type_error("motions", "an array of motion names");
        try {
          c.simulator.sim.motions.push_back(motion_class_from_string(v.get<std::string>()));
        } catch (const Error& e) {
          fail(ErrorKind::config, std::string("simulator.motions: ") + e.what());
        }
      }
    }
    read_noise(s, "accel", c.simulator.sim.accel);
    read_noise(s, "gyro", c.simulator.sim.gyro);
  }
  if (const json* j = top.find("model")) {
    Section s(*j, "model",
              {"feature_dim", "blocks", "channels", "head_channels", "head_blocks", "min_window"});
    s.get("feature_dim", c.model.feature_dim);
    s.get("blocks", c.model.blocks);
    s.get("channels", c.model.channels);
    s.get("head_channels", c.model.head_channels);
    s.get("head_blocks", c.model.head_blocks);
    s.get("min_window", c.model.min_window);
  }
  if (const json* j = top.find("train")) {
    Section s(*j, "train",
              {"epochs", "batch_size", "learning_rate", "momentum", "grad_clip", "lambda_disp",
               "lambda_sparse", "lambda_encode", "epsilon_truncation", "bank_size", "crm_enabled",
               "seed", "entropy_floor", "denoise"});
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("learning_rate", c.train.learning_rate);
    s.get("momentum", c.train.momentum);
    s.get("grad_clip", c.train.grad_clip);
    s.get("lambda_disp", c.train.lambda_disp);
    s.get("lambda_sparse", c.train.lambda_sparse);
    s.get("lambda_encode", c.train.lambda_encode);
    s.get("epsilon_truncation", c.train.epsilon_truncation);
    s.get("bank_size", c.train.bank_size);
    s.get("crm_enabled", c.train.crm_enabled);
    s.get("seed", c.train.seed);
    s.get("entropy_floor", c.train.entropy_floor);
    if (const json* d = s.find("denoise")) {
      Section ds(*d, "train.denoise", {"levels", "boundary_mode", "threshold_rule"});
      ds.get("levels", c.train.denoise.levels);
      std::string mode(to_string(c.train.denoise.boundary_mode));
      std::string rule(to_string(c.train.denoise.threshold_rule));
      ds.get("boundary_mode", mode);
      ds.get("threshold_rule", rule);
      try {
        c.train.denoise.boundary_mode = boundary_mode_from_string(mode);
        c.train.denoise.threshold_rule = threshold_rule_from_string(rule);
      } catch (const Error& e) {
        fail(ErrorKind::config, std::string("train.denoise: ") + e.what());
      }
    }
  }
  if (const json* j = top.find("evaluation")) {
    Section s(*j, "evaluation",
              {"allan_points_per_decade", "baseline", "resample_points", "crm_ablation"});
    s.get("allan_points_per_decade", c.evaluation.allan_points_per_decade);
    s.get("baseline", c.evaluation.baseline);
    s.get("resample_points", c.evaluation.resample_points);
    s.get("crm_ablation", c.evaluation.crm_ablation);
  }
  if (const json* j = top.find("paths")) {
    Section s(*j, "paths", {"data", "model", "output"});
    s.get("data", c.paths.data);
    s.get("model", c.paths.model);
    s.get("output", c.paths.output);
  }
  c.model.bank_size = static_cast<std::size_t>(c.train.bank_size);
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::io, "config not found: " + path.string());
  return parse_experiment(io::read_text(path));
}

std::string experiment_json(const ExperimentConfig& c) {
  json motions = json::array();
  for (auto m : c.simulator.sim.motions) motions.push_back(std::string(to_string(m)));
  json j;
  j["simulator"] = {{"rate", c.simulator.sim.rate},
                    {"motions", motions},
                    {"scale", c.simulator.sim.scale},
                    {"accel", noise_json(c.simulator.sim.accel)},
                    {"gyro", noise_json(c.simulator.sim.gyro)},
                    {"window_length", c.simulator.window_length},
                    {"train_windows", c.simulator.train_windows},
                    {"validation_windows", c.simulator.validation_windows},
                    {"test_windows", c.simulator.test_windows},
                    {"static_samples", c.simulator.static_samples},
                    {"seed", c.simulator.seed}};
  j["model"] = {{"feature_dim", c.model.feature_dim},   {"blocks", c.model.blocks},
                {"channels", c.model.channels},         {"head_channels", c.model.head_channels},
                {"head_blocks", c.model.head_blocks},   {"min_window", c.model.min_window}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"grad_clip", c.train.grad_clip},
                {"lambda_disp", c.train.lambda_disp},
                {"lambda_sparse", c.train.lambda_sparse},
                {"lambda_encode", c.train.lambda_encode},
                {"epsilon_truncation", c.train.epsilon_truncation},
                {"bank_size", c.train.bank_size},
                {"crm_enabled", c.train.crm_enabled},
                {"seed", c.train.seed},
                {"entropy_floor", c.train.entropy_floor},
                {"denoise",
                 {{"levels", c.train.denoise.levels},
                  {"boundary_mode", std::string(to_string(c.train.denoise.boundary_mode))},
                  {"threshold_rule", std::string(to_string(c.train.denoise.threshold_rule))}}}};
  j["evaluation"] = {{"allan_points_per_decade", c.evaluation.allan_points_per_decade},
                     {"baseline", c.evaluation.baseline},
                     {"resample_points", c.evaluation.resample_points},
                     {"crm_ablation", c.evaluation.crm_ablation}};
  j["paths"] = {{"data", c.paths.data}, {"model", c.paths.model}, {"output", c.paths.output}};
  return j.dump(2) + "\n";
}

}  // namespace wdsel
