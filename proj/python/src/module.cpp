#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "wdsel/allan.hpp"
#include "wdsel/error.hpp"
#include "wdsel/experiment.hpp"
#include "wdsel/metrics.hpp"
#include "wdsel/navigation.hpp"
#include "wdsel/wavelet.hpp"

namespace py = pybind11;
using namespace wdsel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) fail(ErrorKind::input, "expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Signal to_signal(const Array& a, double rate) {
  if (a.ndim() != 2 || a.shape(0) != 6)
    fail(ErrorKind::input, "expected an array of shape (6, n)");
  Signal s = Signal::zeros(6, static_cast<std::size_t>(a.shape(1)), rate);
  auto v = a.unchecked<2>();
  for (py::ssize_t c = 0; c < 6; ++c)
    for (py::ssize_t k = 0; k < a.shape(1); ++k) s.channels[c][k] = v(c, k);
  s.validate_imu();
  return s;
}

Array from_signal(const Signal& s) {
  Array out({static_cast<py::ssize_t>(s.channel_count()), static_cast<py::ssize_t>(s.length())});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t c = 0; c < s.channel_count(); ++c)
    for (std::size_t k = 0; k < s.length(); ++k) v(c, k) = s.channels[c][k];
  return out;
}

Array from_vector(const std::vector<double>& x) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(x.size())});
  std::copy(x.begin(), x.end(), out.mutable_data());
  return out;
}

PointSequence to_points(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) fail(ErrorKind::input, "expected an array of shape (n, 3)");
  PointSequence p(static_cast<std::size_t>(a.shape(0)));
  auto v = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) p[i] = {v(i, 0), v(i, 1), v(i, 2)};
  return p;
}

Array from_points(const std::vector<Eigen::Vector3d>& p) {
  Array out({static_cast<py::ssize_t>(p.size()), py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (int j = 0; j < 3; ++j) v(i, j) = p[i][j];
  return out;
}

// Quaternions as (w, x, y, z) rows.
Array from_quaternions(const std::vector<Eigen::Quaterniond>& q) {
  Array out({static_cast<py::ssize_t>(q.size()), py::ssize_t{4}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < q.size(); ++i) {
    v(i, 0) = q[i].w();
    v(i, 1) = q[i].x();
    v(i, 2) = q[i].y();
    v(i, 3) = q[i].z();
  }
  return out;
}

Eigen::Vector3d vec3(const std::vector<double>& v) {
  if (v.size() != 3) fail(ErrorKind::input, "expected 3 components");
  return {v[0], v[1], v[2]};
}

py::dict fit_dict(const FitRegion& f) {
  py::dict d;
  d["present"] = f.present;
  d["tau_min"] = f.tau_min;
  d["tau_max"] = f.tau_max;
  d["points"] = f.points;
  d["residual"] = f.residual;
  return d;
}

py::dict coefficient_dict(const NoiseCoefficients& c) {
  py::dict d;
  d["qn"] = c.qn;
  d["rw"] = c.rw;
  d["bi"] = c.bi;
  d["qn_fit"] = fit_dict(c.qn_fit);
  d["rw_fit"] = fit_dict(c.rw_fit);
  d["bi_fit"] = fit_dict(c.bi_fit);
  return d;
}

ExperimentConfig config_from(const std::optional<std::string>& json_text) {
  return json_text ? parse_experiment(*json_text) : default_experiment();
}

class Model {
 public:
  explicit Model(const std::string& dir) : loaded_(read_training(dir)), bank_(standard_bank(loaded_.config.train.bank_size)) {}

  std::vector<std::string> bank() const {
    std::vector<std::string> names;
    for (const auto& b : bank_) names.push_back(b.name);
    return names;
  }

  py::dict run(const Array& signal, double rate, bool soft, bool ablation) const {
    const Signal s = to_signal(signal, rate);
    const auto& c = loaded_.config;
    EnhancedRecording r;
    {
      py::gil_scoped_release release;
      r = enhance_recording(s, arm(ablation).model, bank_, c.train.denoise,
                            c.simulator.window_length, soft, c.train.epsilon_truncation);
    }
    py::dict d;
    d["enhanced"] = from_signal(r.enhanced);
    d["window_starts"] = r.window_starts;
    d["selections"] = r.selections;
    return d;
  }

  std::string config_json() const { return experiment_json(loaded_.config); }
  bool has_ablation() const { return loaded_.arms.size() > 1; }

 private:
  const TrainedArm& arm(bool ablation) const {
    if (ablation && !has_ablation()) fail(ErrorKind::input, "model directory has no ablation arm");
    return loaded_.arms[ablation ? 1 : 0];
  }

  LoadedModels loaded_;
  std::vector<WaveletBasis> bank_;
};

}  // namespace

PYBIND11_MODULE(_wdsel, m) {
  m.doc() = "Learned wavelet selection for IMU denoising";

  static py::exception<Error> error_type(m, "WdselError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(std::string(to_string(e.kind())) + ": " + e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("code") = e.exit_code();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // ---- wavelets ----
  m.def("bank_names", [](int count) {
    std::vector<std::string> names;
    for (const auto& b : standard_bank(count)) names.push_back(b.name);
    return names;
  }, py::arg("count") = 16);
  m.def("wavelet_filters", [](const std::string& name) {
    const auto b = basis_by_name(name);
    py::dict d;
    d["dec_lo"] = from_vector(b.dec_lo);
    d["dec_hi"] = from_vector(b.dec_hi);
    d["rec_lo"] = from_vector(b.rec_lo);
    d["rec_hi"] = from_vector(b.rec_hi);
    d["vanishing_moments"] = b.vanishing_moments;
    return d;
  }, py::arg("name"));
  m.def("dwt", [](const Array& x, const std::string& wavelet, int levels, const std::string& mode) {
    const auto d = dwt(to_vector(x), basis_by_name(wavelet), levels, boundary_mode_from_string(mode));
    py::list details;
    for (const auto& v : d.details) details.append(from_vector(v));
    return py::make_tuple(from_vector(d.approx), details);
  }, py::arg("x"), py::arg("wavelet"), py::arg("levels"), py::arg("mode") = "symmetric",
     "Returns (approx, details) with details[0] the finest level.");
  m.def("idwt", [](const Array& approx, const std::vector<Array>& details, const std::string& wavelet,
                   std::size_t length, const std::string& mode) {
    Decomposition d;
    d.approx = to_vector(approx);
    for (const auto& v : details) d.details.push_back(to_vector(v));
    d.levels = static_cast<int>(d.details.size());
    d.original_length = length;
    d.boundary_mode = boundary_mode_from_string(mode);
    return from_vector(idwt(d, basis_by_name(wavelet)));
  }, py::arg("approx"), py::arg("details"), py::arg("wavelet"), py::arg("length"),
     py::arg("mode") = "symmetric");
  m.def("denoise", [](const Array& x, const std::string& wavelet, int levels, double rate) -> py::object {
    DenoiseConfig cfg;
    cfg.levels = levels;
    const auto basis = basis_by_name(wavelet);
    if (x.ndim() == 1) return from_vector(denoise_channel(to_vector(x), basis, cfg));
    return from_signal(denoise(to_signal(x, rate), basis, cfg));
  }, py::arg("x"), py::arg("wavelet"), py::arg("levels") = 4, py::arg("rate") = 200.0,
     "Universal-threshold soft denoising of one channel or a (6, n) IMU array.");

  // ---- simulation and navigation ----
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init([](double q, double n, double b, double tau, double b0) {
             NoiseModel nm{q, n, b, tau, b0};
             nm.validate();
             return nm;
           }),
           py::arg("quantization_step") = 0.0, py::arg("white_noise_density") = 0.0,
           py::arg("bias_instability") = 0.0, py::arg("bias_corr_time") = 0.0,
           py::arg("initial_bias") = 0.0)
      .def_readwrite("quantization_step", &NoiseModel::quantization_step)
      .def_readwrite("white_noise_density", &NoiseModel::white_noise_density)
      .def_readwrite("bias_instability", &NoiseModel::bias_instability)
      .def_readwrite("bias_corr_time", &NoiseModel::bias_corr_time)
      .def_readwrite("initial_bias", &NoiseModel::initial_bias);

  m.def("trajectory", [](const std::string& motion, double duration, double rate, double scale,
                         std::uint64_t seed) {
    const auto gt = generate_trajectory({duration, rate, motion_class_from_string(motion), scale}, seed);
    py::dict d;
    d["t"] = from_vector(gt.t);
    d["positions"] = from_points(gt.positions);
    d["orientations"] = from_quaternions(gt.orientations);
    d["imu"] = from_signal(ideal_imu(gt));
    d["rate"] = gt.sample_rate;
    return d;
  }, py::arg("motion") = "spline3d", py::arg("duration") = 10.0, py::arg("rate") = 200.0,
     py::arg("scale") = 1.0, py::arg("seed") = 1,
     "Ground-truth trajectory with its noise-free IMU signal (orientations are w, x, y, z).");
  m.def("inject_noise", [](const Array& signal, double rate, const NoiseModel& accel,
                           const NoiseModel& gyro, std::uint64_t seed) {
    return from_signal(inject_noise(to_signal(signal, rate), accel, gyro, seed));
  }, py::arg("signal"), py::arg("rate"), py::arg("accel"), py::arg("gyro"), py::arg("seed") = 1);
  m.def("static_capture", [](std::size_t samples, double rate, const NoiseModel& accel,
                             const NoiseModel& gyro, std::uint64_t seed) {
    return from_signal(static_capture(samples, rate, accel, gyro, seed));
  }, py::arg("samples"), py::arg("rate"), py::arg("accel"), py::arg("gyro"), py::arg("seed") = 1);
  m.def("strapdown", [](const Array& signal, double rate, const std::vector<double>& q0,
                        const std::vector<double>& v0, const std::vector<double>& p0) {
    if (q0.size() != 4) fail(ErrorKind::input, "q0 must be (w, x, y, z)");
    const auto poses = strapdown(to_signal(signal, rate),
                                 Eigen::Quaterniond(q0[0], q0[1], q0[2], q0[3]).normalized(),
                                 vec3(v0), vec3(p0));
    std::vector<double> t;
    std::vector<Eigen::Vector3d> p, v;
    std::vector<Eigen::Quaterniond> q;
    for (const auto& pose : poses) {
      t.push_back(pose.t);
      p.push_back(pose.p);
      v.push_back(pose.v);
      q.push_back(pose.q);
    }
    py::dict d;
    d["t"] = from_vector(t);
    d["positions"] = from_points(p);
    d["velocities"] = from_points(v);
    d["orientations"] = from_quaternions(q);
    return d;
  }, py::arg("signal"), py::arg("rate"), py::arg("q0") = std::vector<double>{1, 0, 0, 0},
     py::arg("v0") = std::vector<double>{0, 0, 0}, py::arg("p0") = std::vector<double>{0, 0, 0});

  // ---- analysis and metrics ----
  m.def("allan_deviation", [](const Array& x, double rate, int ppd) {
    const auto c = allan_deviation(to_vector(x), rate, ppd);
    py::dict d;
    d["taus"] = from_vector(c.taus);
    d["adev"] = from_vector(c.adev);
    d["cluster_sizes"] = c.cluster_sizes;
    return d;
  }, py::arg("x"), py::arg("rate"), py::arg("points_per_decade") = 10);
  m.def("noise_coefficients", [](const Array& x, double rate, int ppd) {
    return coefficient_dict(extract_coefficients(allan_deviation(to_vector(x), rate, ppd)));
  }, py::arg("x"), py::arg("rate"), py::arg("points_per_decade") = 10,
     "QN, RW and BI read from the Allan deviation of one channel.");
  m.def("discrete_frechet", [](const Array& p, const Array& q) {
    return discrete_frechet(to_points(p), to_points(q));
  }, py::arg("p"), py::arg("q"));
  m.def("align_then_score", [](const Array& reconstructed, const Array& truth, std::size_t points) {
    const auto s = align_then_score(to_points(reconstructed), to_points(truth), points);
    py::dict d;
    d["frechet"] = s.frechet;
    d["path_length"] = s.path_length;
    d["normalized"] = s.normalized;
    return d;
  }, py::arg("reconstructed"), py::arg("truth"), py::arg("resample_points") = 200);
  m.def("silhouette_score", [](const Array& features, const std::vector<std::size_t>& labels) {
    if (features.ndim() != 2) fail(ErrorKind::input, "features must be 2-D");
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(features.shape(0)));
    auto v = features.unchecked<2>();
    for (py::ssize_t i = 0; i < features.shape(0); ++i)
      for (py::ssize_t j = 0; j < features.shape(1); ++j) rows[i].push_back(v(i, j));
    return silhouette_score(rows, labels).score;
  }, py::arg("features"), py::arg("labels"), "None when fewer than two usable classes.");
  m.def("renyi_entropy", [](const Array& w) {
    if (w.ndim() != 2) fail(ErrorKind::input, "W must be 2-D (d, c)");
    ad::Tensor t = ad::Tensor::zeros({static_cast<std::size_t>(w.shape(0)),
                                      static_cast<std::size_t>(w.shape(1))});
    std::copy(w.data(), w.data() + w.size(), t.values.begin());
    return renyi_entropy(t);
  }, py::arg("w"));

  // ---- experiment pipeline ----
  m.def("default_config", [] { return experiment_json(default_experiment()); },
        "Resolved default experiment config as JSON text.");
  m.def("simulate", [](const std::string& out_dir, std::optional<std::string> config) {
    ExperimentConfig c = config_from(config);
    c.paths.data = out_dir;
    py::gil_scoped_release release;
    write_dataset(out_dir, simulate(c));
  }, py::arg("out_dir"), py::arg("config") = py::none());
  m.def("train", [](const std::string& data_dir, const std::string& out_dir,
                    std::optional<std::string> config) {
    py::gil_scoped_release release;
    const Dataset d = read_dataset(data_dir);
    ExperimentConfig c = config ? parse_experiment(*config) : d.config;
    c.paths.data = data_dir;
    c.paths.model = out_dir;
    write_training(out_dir, c, train_arms(c, d));
  }, py::arg("data_dir"), py::arg("out_dir"), py::arg("config") = py::none());
  m.def("evaluate", [](const std::string& model_dir, const std::string& data_dir,
                       std::optional<std::string> out_dir) {
    EvaluationResult r;
    {
      py::gil_scoped_release release;
      LoadedModels models = read_training(model_dir);
      const Dataset d = read_dataset(data_dir);
      ExperimentConfig c = models.config;
      c.paths.data = data_dir;
      c.paths.model = model_dir;
      if (out_dir) c.paths.output = *out_dir;
      r = evaluate(c, d, models.arms);
      if (out_dir) write_evaluation(*out_dir, c, r);
    }
    py::dict methods, selectors;
    for (const auto& s : r.methods) {
      py::dict d;
      d["attitude_mae_deg"] = s.attitude_mae_deg;
      d["position_mae_m"] = s.position_mae_m;
      d["frechet_normalized"] = s.frechet_normalized;
      d["denoise_mse"] = s.denoise_mse;
      methods[py::str(s.method)] = d;
    }
    for (const auto& s : r.selectors) {
      py::dict d;
      d["oracle_within_10pct"] = s.oracle_within_10pct;
      d["top1_mass"] = s.top1_mass;
      d["s2"] = s.s2;
      d["silhouette"] = s.silhouette;
      d["selections"] = s.selections;
      selectors[py::str(s.method)] = d;
    }
    py::dict out;
    out["methods"] = methods;
    out["selectors"] = selectors;
    out["bank"] = r.bank;
    return out;
  }, py::arg("model_dir"), py::arg("data_dir"), py::arg("out_dir") = py::none());

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("model_dir"))
      .def_property_readonly("bank", &Model::bank)
      .def_property_readonly("has_ablation", &Model::has_ablation)
      .def("config_json", &Model::config_json)
      .def("enhance", [](const Model& self, const Array& signal, double rate, bool soft, bool ablation) {
        return self.run(signal, rate, soft, ablation);
      }, py::arg("signal"), py::arg("rate"), py::arg("soft") = false, py::arg("ablation") = false,
         "Window-by-window enhancement; returns enhanced, window_starts and selections.");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
