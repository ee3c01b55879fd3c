#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "doctest.h"
#include "wdsel/checkpoint.hpp"
#include "wdsel/config.hpp"
#include "wdsel/error.hpp"
#include "wdsel/experiment.hpp"
#include "wdsel/io.hpp"

using namespace wdsel;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("wdsel_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::usage;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig c = default_experiment();
  c.simulator.window_length = 128;
  c.simulator.train_windows = 8;
  c.simulator.validation_windows = 4;
  c.simulator.test_windows = 8;
  c.simulator.static_samples = 4096;
  c.model.feature_dim = 8;
  c.model.blocks = 1;
  c.model.channels = 4;
  c.model.head_channels = 4;
  c.model.head_blocks = 1;
  c.model.min_window = 64;
  c.train.epochs = 1;
  c.train.batch_size = 4;
  c.train.denoise.levels = 3;
  return c;
}

std::string file_bytes(const fs::path& p) { return io::read_text(p); }

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_CASE("number formatting round-trips bit-exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
    CHECK(same_bits(io::parse_double(io::format_double(v), "test"), v));
  }
  CHECK_THROWS_AS(io::parse_double("1.5x", "test"), Error);
  CHECK(kind_of([] { io::parse_double("nan", "test"); }) == ErrorKind::input);
}

TEST_CASE("signal and trajectory CSV round-trip") {
  TempDir tmp("csv");
  SimConfig sim;
  sim.gyro.white_noise_density = 0.01;
  const auto windows = make_dataset(2, 64, sim, 11);
  const auto& w = windows[1];

  io::write_signal_csv(tmp.path / "s.csv", w.noisy);
  const Signal back = io::read_signal_csv(tmp.path / "s.csv");
  CHECK(back.sample_rate == w.noisy.sample_rate);
  REQUIRE(back.length() == w.noisy.length());
  bool exact = true;
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t k = 0; k < back.length(); ++k)
      exact = exact && same_bits(back.channels[c][k], w.noisy.channels[c][k]);
  CHECK(exact);
  CHECK(io::read_text(tmp.path / "s.csv").rfind("t,ax,ay,az,gx,gy,gz\n", 0) == 0);

  io::write_trajectory_csv(tmp.path / "t.csv", w.truth);
  const GroundTruth gt = io::read_trajectory_csv(tmp.path / "t.csv");
  REQUIRE(gt.size() == w.truth.size());
  bool traj_exact = true;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    traj_exact = traj_exact && gt.positions[k] == w.truth.positions[k] &&
                 gt.orientations[k].coeffs() == w.truth.orientations[k].coeffs();
  }
  CHECK(traj_exact);

  std::vector<io::LabelRow> labels{{0, label_of(windows[0])}, {1, label_of(windows[1])}};
  io::write_labels_csv(tmp.path / "l.csv", labels);
  const auto lb = io::read_labels_csv(tmp.path / "l.csv");
  REQUIRE(lb.size() == 2);
  CHECK(lb[1].window_id == 1);
  CHECK(lb[1].label == labels[1].label);
}

TEST_CASE("CSV readers reject malformed input with distinct categories") {
  TempDir tmp("csvbad");
  CHECK(kind_of([&] { io::read_signal_csv(tmp.path / "missing.csv"); }) == ErrorKind::io);
  write_bytes(tmp.path / "h.csv", "t,ax,ay,az,gx,gy\n0,1,2,3,4,5\n");
  CHECK(kind_of([&] { io::read_signal_csv(tmp.path / "h.csv"); }) == ErrorKind::input);
  write_bytes(tmp.path / "f.csv", "t,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5,6\n0.1,1,2,3\n");
  CHECK(kind_of([&] { io::read_signal_csv(tmp.path / "f.csv"); }) == ErrorKind::input);
  write_bytes(tmp.path / "u.csv",
              "t,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5,6\n0.1,1,2,3,4,5,6\n0.3,1,2,3,4,5,6\n");
  CHECK(kind_of([&] { io::read_signal_csv(tmp.path / "u.csv"); }) == ErrorKind::input);
  write_bytes(tmp.path / "e.csv", "");
  CHECK(kind_of([&] { io::read_signal_csv(tmp.path / "e.csv"); }) == ErrorKind::input);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  TempDir tmp("ckpt");
  ModelConfig mc = tiny_experiment().model;
  WdsNet model = WdsNet::init(mc, 5);
  save_checkpoint(model, tmp.path / "m.ckpt");
  WdsNet back = load_checkpoint(tmp.path / "m.ckpt", mc);
  CHECK(back.architecture_hash() == model.architecture_hash());
  auto a = model.named_parameters();
  auto b = back.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second->shape == b[i].second->shape);
    CHECK(std::memcmp(a[i].second->values.data(), b[i].second->values.data(),
                      a[i].second->values.size() * sizeof(double)) == 0);
  }
  const auto window = make_dataset(1, 128, SimConfig{}, 2)[0].noisy;
  const auto ya = classify(extract_features(model, window), model.category);
  const auto yb = classify(extract_features(back, window), back.category);
  CHECK(ya == yb);
  CHECK(guidance_predict(model, window) == guidance_predict(back, window));
}

TEST_CASE("checkpoint failures are loud and distinct") {
  TempDir tmp("ckptbad");
  ModelConfig mc = tiny_experiment().model;
  save_checkpoint(WdsNet::init(mc, 1), tmp.path / "m.ckpt");
  const std::string bytes = file_bytes(tmp.path / "m.ckpt");

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2,
                          bytes.size() - 1}) {
    write_bytes(tmp.path / "t.ckpt", bytes.substr(0, cut));
    CHECK(kind_of([&] { load_checkpoint(tmp.path / "t.ckpt"); }) == ErrorKind::corrupt);
  }
  write_bytes(tmp.path / "x.ckpt", bytes + "extra");
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "x.ckpt"); }) == ErrorKind::corrupt);

  std::string bad = bytes;
  bad[0] = 'X';
  write_bytes(tmp.path / "magic.ckpt", bad);
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "magic.ckpt"); }) == ErrorKind::corrupt);

  bad = bytes;
  bad[4] = 2;  // version
  write_bytes(tmp.path / "v.ckpt", bad);
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "v.ckpt"); }) == ErrorKind::version);

  bad = bytes;
  bad[8] ^= 0x5a;  // hash
  write_bytes(tmp.path / "h.ckpt", bad);
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "h.ckpt"); }) == ErrorKind::hash_mismatch);

  ModelConfig five = mc;
  five.bank_size = 5;
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "m.ckpt", five); }) == ErrorKind::hash_mismatch);
  ModelConfig wider = mc;
  wider.channels = 8;
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "m.ckpt", wider); }) == ErrorKind::hash_mismatch);
  CHECK(kind_of([&] { load_checkpoint(tmp.path / "none.ckpt"); }) == ErrorKind::io);
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
  const ExperimentConfig d = default_experiment();
  CHECK_NOTHROW(d.validate());
  CHECK(parse_experiment("{}").train.epochs == d.train.epochs);

  CHECK(kind_of([] { parse_experiment(R"({"bogus": 1})"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"train": {"learning_rat": 0.1}})"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"simulator": {"gyro": {"noise": 1}}})"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"train": {"epochs": "ten"}})"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"train": {"bank_size": 7}})"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"train": {"lambda_sparse": -1}})"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"simulator": {"motions": ["orbit"]}})"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { parse_experiment(R"({"evaluation": {"baseline": "db40"}})"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { parse_experiment("{not json"); }) == ErrorKind::config);

  const auto c = parse_experiment(
      R"({"train": {"bank_size": 5, "crm_enabled": false}, "simulator": {"seed": 9}})");
  CHECK(c.train.bank_size == 5);
  CHECK(c.model.bank_size == 5);
  CHECK_FALSE(c.train.crm_enabled);
  CHECK(c.simulator.seed == 9);
}

TEST_CASE("resolved config re-parses to itself") {
  ExperimentConfig c = tiny_experiment();
  c.train.learning_rate = 0.1 + 0.2;
  c.simulator.sim.motions = {MotionClass::circular, MotionClass::stationary};
  const std::string text = experiment_json(c);
  CHECK(experiment_json(parse_experiment(text)) == text);
}

TEST_CASE("dataset directory round-trips and is reproducible") {
  TempDir tmp("data");
  const ExperimentConfig cfg = tiny_experiment();
  const Dataset d = simulate(cfg);
  CHECK(d.train.size() == 8);
  CHECK(d.validation.size() == 4);
  CHECK(d.test.size() == 8);
  CHECK(d.static_capture.length() == 4096);

  write_dataset(tmp.path / "a", d);
  write_dataset(tmp.path / "b", simulate(cfg));
  for (const char* f : {"manifest.json", "labels.csv", "config.json", "static.csv",
                        "windows/000003_noisy.csv", "windows/000019_truth.csv"})
    CHECK(file_bytes(tmp.path / "a" / f) == file_bytes(tmp.path / "b" / f));

  const Dataset r = read_dataset(tmp.path / "a");
  REQUIRE(r.test.size() == d.test.size());
  CHECK(r.test[2].noisy.channels == d.test[2].noisy.channels);
  CHECK(r.test[2].clean.channels == d.test[2].clean.channels);
  CHECK(r.test[2].delta_attitude == d.test[2].delta_attitude);
  CHECK(r.test[2].initial_velocity == d.test[2].initial_velocity);
  CHECK(r.train[5].motion == d.train[5].motion);
  CHECK(r.static_capture.channels == d.static_capture.channels);
  CHECK(kind_of([&] { read_dataset(tmp.path / "nowhere"); }) == ErrorKind::io);
}

TEST_CASE("enhancing a clean recording barely changes it") {
  const ExperimentConfig cfg = tiny_experiment();
  WdsNet model = WdsNet::init(cfg.model, 4);
  const auto bank = standard_bank(16);
  SimConfig clean_sim;  // no noise
  for (MotionClass motion : {MotionClass::circular, MotionClass::spline3d}) {
    TrajectorySpec spec;
    spec.motion = motion;
    spec.duration = 8.0;
    const Signal clean = ideal_imu(generate_trajectory(spec, 21));
    for (bool soft : {false, true}) {
      const auto out = enhance_recording(clean, model, bank, cfg.train.denoise, 512, soft, 0.05);
      double num = 0.0, den = 0.0;
      for (std::size_t c = 0; c < 6; ++c)
        for (std::size_t k = 0; k < clean.length(); ++k) {
          const double d = out.enhanced.channels[c][k] - clean.channels[c][k];
          num += d * d;
          den += clean.channels[c][k] * clean.channels[c][k];
        }
      CHECK(std::sqrt(num / den) < 0.01);
      CHECK(out.selections.size() == clean.length() / 512);
    }
  }
}

TEST_CASE("evaluation harness runs and its files are deterministic") {
  TempDir tmp("eval");
  const ExperimentConfig cfg = tiny_experiment();
  const Dataset d = simulate(cfg);
  const TrainingRun run = train_arms(cfg, d);
  REQUIRE(run.ablation.has_value());
  CHECK(run.primary.crm_enabled);
  CHECK_FALSE(run.ablation->crm_enabled);

  write_training(tmp.path / "m", cfg, run);
  const LoadedModels loaded = read_training(tmp.path / "m");
  REQUIRE(loaded.arms.size() == 2);

  const auto r1 = evaluate(cfg, d, loaded.arms);
  CHECK(r1.methods.size() == 5);
  CHECK(r1.selectors.size() == 2);
  CHECK(r1.allan.size() == 24);
  CHECK(method_scores(r1, "raw").windows == 8);
  write_evaluation(tmp.path / "e1", cfg, r1);
  std::vector<TrainedArm> arms{run.primary, *run.ablation};
  write_evaluation(tmp.path / "e2", cfg, evaluate(cfg, d, arms));
  for (const char* f : {"results.csv", "allan.csv", "selection.csv", "selections.csv",
                        "results.json", "config.json"})
    CHECK(file_bytes(tmp.path / "e1" / f) == file_bytes(tmp.path / "e2" / f));
}
