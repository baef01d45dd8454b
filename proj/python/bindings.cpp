#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "proxyhpo/analysis.hpp"
#include "proxyhpo/error.hpp"
#include "proxyhpo/hpo.hpp"
#include "proxyhpo/measures.hpp"
#include "proxyhpo/preprocess.hpp"
#include "proxyhpo/proxy_net.hpp"
#include "proxyhpo/synth.hpp"
#include "proxyhpo/trainer.hpp"
#include "proxyhpo/version.hpp"
#include "proxyhpo/volume_io.hpp"

namespace py = pybind11;
using namespace proxyhpo;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// Arrays are (nz, ny, nx) in C order, which is the x-fastest voxel layout.
Volume3D to_volume(const FloatArray& array, const std::array<double, 3>& spacing) {
  if (array.ndim() != 3) throw Error(ErrorCode::kDimensionality, "expected a 3D array");
  const Shape3 shape{static_cast<int>(array.shape(2)), static_cast<int>(array.shape(1)),
                     static_cast<int>(array.shape(0))};
  std::vector<float> voxels(array.data(), array.data() + array.size());
  return Volume3D(shape, {spacing[0], spacing[1], spacing[2]}, std::move(voxels));
}

FloatArray to_array(const Volume3D& volume) {
  const auto& s = volume.shape();
  FloatArray out({s.nz, s.ny, s.nx});
  std::copy(volume.voxels().begin(), volume.voxels().end(), out.mutable_data());
  return out;
}

py::tuple volume_tuple(const Volume3D& volume) {
  const auto& sp = volume.spacing();
  return py::make_tuple(to_array(volume), py::make_tuple(sp.x, sp.y, sp.z));
}

Window3 to_window(const py::object& window) {
  if (py::isinstance<py::int_>(window)) {
    const int w = window.cast<int>();
    return {w, w, w};
  }
  const auto w = window.cast<std::array<int, 3>>();
  return {w[0], w[1], w[2]};
}

py::object json_to_py(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

HyperParams make_hp(const std::string& optimizer, double lr, double p) {
  HyperParams hp{parse_optimizer(optimizer), lr, p};
  hp.validate();
  return hp;
}

std::vector<Optimizer> to_optimizers(const std::vector<std::string>& names) {
  std::vector<Optimizer> out;
  for (const auto& n : names) out.push_back(parse_optimizer(n));
  return out;
}

TrialTemplate make_template(const UNetSpec& network, const UNetSpec& reference, int n_train,
                            int n_val, int max_steps) {
  TrialTemplate tmpl;
  tmpl.network = network;
  tmpl.reference = reference;
  tmpl.max_steps = max_steps;
  for (int i = 0; i < n_train; ++i) tmpl.train_items.push_back("train_" + std::to_string(i));
  for (int i = 0; i < n_val; ++i) tmpl.val_items.push_back("val_" + std::to_string(i));
  return tmpl;
}

// A Python callable receives the trial request as a dict and returns either
// a Dice value or a dict with "val_dice" (and optionally "test_dice").
Evaluator make_evaluator(const py::object& evaluator, double noise, const UNetSpec& reference) {
  if (evaluator.is_none()) return surrogate_evaluator(noise, reference);
  auto fn = std::make_shared<py::object>(evaluator);
  return [fn](const TrialSpec& trial) {
    py::gil_scoped_acquire gil;
    TrialResult r;
    r.trial_id = trial.trial_id;
    r.gpu_hours = trial.cost_gpu_hours;
    try {
      py::object out = (*fn)(json_to_py(nlohmann::json::parse(encode_request(trial))));
      if (py::isinstance<py::dict>(out)) {
        auto d = out.cast<py::dict>();
        r.val_dice = d["val_dice"].cast<double>();
        if (d.contains("test_dice") && !d["test_dice"].is_none()) {
          r.test_dice = d["test_dice"].cast<double>();
        }
      } else {
        r.val_dice = out.cast<double>();
      }
      if (!std::isfinite(r.val_dice) || r.val_dice < 0.0 || r.val_dice > 1.0) {
        throw Error(ErrorCode::kProtocol, "val_dice outside [0, 1]");
      }
    } catch (py::error_already_set& e) {
      throw Error(ErrorCode::kTrainerReported, e.what());
    } catch (const py::cast_error& e) {
      throw Error(ErrorCode::kProtocol, e.what());
    }
    return r;
  };
}

}  // namespace

PYBIND11_MODULE(_proxyhpo, m) {
  m.doc() = "Proxy data and proxy network hyper-parameter search toolkit";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error_type(m, "ProxyHpoError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type.ptr())(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // ---- volumes -------------------------------------------------------------
  m.def("read_raw", [](const std::filesystem::path& image, const std::filesystem::path& sidecar) {
    return volume_tuple(read_raw(image, sidecar));
  }, py::arg("image"), py::arg("sidecar"), "Returns (array[z, y, x], spacing_mm).");
  m.def("write_raw", [](const FloatArray& array, std::array<double, 3> spacing,
                        const std::filesystem::path& locator) {
    const auto loc = write_raw(to_volume(array, spacing), locator);
    return py::make_tuple(loc.payload, loc.sidecar);
  }, py::arg("array"), py::arg("spacing") = std::array<double, 3>{1, 1, 1}, py::arg("locator"));
  m.def("read_nifti1", [](const std::filesystem::path& path) {
    return volume_tuple(read_nifti1_file(path));
  }, py::arg("path"));
  m.def("load_volume", [](const std::filesystem::path& locator) {
    return volume_tuple(load_volume(locator));
  }, py::arg("locator"));

  m.def("resample_trilinear", [](const FloatArray& array, std::array<int, 3> shape_xyz) {
    return to_array(resample_trilinear(to_volume(array, {1, 1, 1}),
                                       {shape_xyz[0], shape_xyz[1], shape_xyz[2]}));
  }, py::arg("array"), py::arg("shape_xyz"));
  m.def("intensity_window_normalize", [](const FloatArray& array, double lo, double hi) {
    return to_array(intensity_window_normalize(to_volume(array, {1, 1, 1}), lo, hi));
  }, py::arg("array"), py::arg("lo") = -57.0, py::arg("hi") = 164.0);

  // ---- measures ------------------------------------------------------------
  m.def("mutual_information", [](const FloatArray& a, const FloatArray& b, int bins, double base) {
    return mutual_information(to_volume(a, {1, 1, 1}), to_volume(b, {1, 1, 1}), bins, base);
  }, py::arg("a"), py::arg("b"), py::arg("bins") = 32, py::arg("log_base") = M_E);
  m.def("local_ncc", [](const FloatArray& a, const FloatArray& b, const py::object& window) {
    return local_ncc(to_volume(a, {1, 1, 1}), to_volume(b, {1, 1, 1}), to_window(window));
  }, py::arg("a"), py::arg("b"), py::arg("window") = 9);
  m.def("pairwise_matrix", [](const std::filesystem::path& manifest_path, const std::string& measure,
                              bool labelcrop, int bins, const py::object& window, int cube,
                              int workers) {
    MeasureConfig cfg;
    cfg.kind = parse_measure_kind(measure);
    cfg.roi_mode = labelcrop ? RoiMode::kLabelCrop : RoiMode::kWholeVolume;
    cfg.mi_bins = bins;
    cfg.ncc_window = to_window(window);
    cfg.canonical_cube = cube;
    const auto manifest = load_manifest(manifest_path);
    PairwiseMatrix matrix;
    {
      py::gil_scoped_release release;
      matrix = pairwise_matrix(manifest, cfg, workers);
    }
    py::array_t<double> out({matrix.size(), matrix.size()});
    std::copy(matrix.values().begin(), matrix.values().end(), out.mutable_data());
    return py::make_tuple(out, manifest.ids());
  }, py::arg("manifest"), py::arg("measure") = "mi", py::arg("labelcrop") = false,
     py::arg("bins") = 32, py::arg("window") = 9, py::arg("cube") = kDefaultCubeSize,
     py::arg("workers") = 1, "Returns (matrix, ids).");
  m.def("importance_scores", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) {
      throw Error(ErrorCode::kInvalidInput, "expected a square matrix");
    }
    const auto n = static_cast<std::size_t>(a.shape(0));
    PairwiseMatrix matrix(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) matrix.set_symmetric(i, j, a.at(i, j));
    }
    return importance_scores(matrix);
  }, py::arg("matrix"));
  m.def("select_proxy", &select_proxy, py::arg("scores"), py::arg("budget"));
  m.def("select_random", &select_random, py::arg("n"), py::arg("budget"), py::arg("seed"));
  m.def("split_fifty_fifty", [](const std::vector<std::size_t>& indices, std::uint64_t seed) {
    const auto s = split_fifty_fifty(indices, seed);
    return py::make_tuple(s.train, s.val);
  }, py::arg("indices"), py::arg("seed"), "Returns (train, val).");

  // ---- networks ------------------------------------------------------------
  py::class_<UNetSpec>(m, "UNetSpec")
      .def(py::init([](int levels, int base, int res, int in, int out) {
             UNetSpec s{levels, base, res, in, out};
             s.validate();
             return s;
           }),
           py::arg("levels") = 5, py::arg("base_channels") = 16, py::arg("res_blocks") = 2,
           py::arg("in_channels") = 1, py::arg("out_channels") = 2)
      .def_readonly("levels", &UNetSpec::levels)
      .def_readonly("base_channels", &UNetSpec::base_channels)
      .def_readonly("res_blocks", &UNetSpec::res_blocks)
      .def_readonly("in_channels", &UNetSpec::in_channels)
      .def_readonly("out_channels", &UNetSpec::out_channels)
      .def("__eq__", [](const UNetSpec& a, const UNetSpec& b) { return a == b; })
      .def("__repr__", [](const UNetSpec& s) {
        return "UNetSpec(levels=" + std::to_string(s.levels) +
               ", base_channels=" + std::to_string(s.base_channels) +
               ", res_blocks=" + std::to_string(s.res_blocks) +
               ", in_channels=" + std::to_string(s.in_channels) +
               ", out_channels=" + std::to_string(s.out_channels) + ")";
      });
  m.def("full_spec", &full_spec, py::arg("base_channels") = kDefaultBaseChannels,
        py::arg("in_channels") = 1, py::arg("out_channels") = 2);
  m.def("proxy_schedule", &proxy_schedule, py::arg("full"));
  m.def("param_count", &param_count, py::arg("spec"));

  // ---- trainer -------------------------------------------------------------
  m.def("dice_score", [](const FloatArray& pred, const FloatArray& gt) {
    return dice_score(LabelMask(to_volume(pred, {1, 1, 1})), LabelMask(to_volume(gt, {1, 1, 1})));
  }, py::arg("pred"), py::arg("gt"));
  m.def("surrogate_dice", [](const std::string& optimizer, double lr, double p, int n_train,
                             const UNetSpec& network, double noise, std::uint64_t seed) {
    auto tmpl = make_template(network, full_spec(), n_train, 1, 200);
    const auto trial = make_trial(0, seed, make_hp(optimizer, lr, p), tmpl);
    return surrogate_evaluate(trial, noise).val_dice;
  }, py::arg("optimizer"), py::arg("learning_rate"), py::arg("intensity_shift_prob"),
     py::arg("n_train") = 32, py::arg("network") = full_spec(), py::arg("noise") = 0.0,
     py::arg("seed") = 0);

  // ---- search --------------------------------------------------------------
  m.def("grid_search", [](const std::vector<std::string>& optimizers,
                          const std::vector<double>& learning_rates,
                          const std::vector<double>& shift_probs, const UNetSpec& network,
                          int n_train, int n_val, double noise, std::uint64_t seed, int workers,
                          const py::object& evaluator) {
    SearchSpace space;
    space.optimizers = to_optimizers(optimizers);
    space.learning_rates = learning_rates;
    space.shift_probs = shift_probs;
    const auto tmpl = make_template(network, full_spec(), n_train, n_val, 200);
    const auto eval = make_evaluator(evaluator, noise, tmpl.reference);
    SearchReport report;
    {
      py::gil_scoped_release release;
      report = grid_search(space, tmpl, eval, workers, seed);
    }
    return json_to_py(report_to_json(report));
  }, py::arg("optimizers") = std::vector<std::string>{"adam", "rmsprop", "adamax", "novograd"},
     py::arg("learning_rates") = std::vector<double>{0.001, 0.0006, 0.0004, 0.0001},
     py::arg("shift_probs") = std::vector<double>{0.5}, py::arg("network") = full_spec(),
     py::arg("n_train") = 32, py::arg("n_val") = 9, py::arg("noise") = 0.0, py::arg("seed") = 0,
     py::arg("workers") = 1, py::arg("evaluator") = py::none(),
     "Runs a grid search; returns the report as a dict.");
  m.def("reinforce_search", [](const std::vector<std::string>& optimizers, double lr_min,
                               double lr_max, int lr_bins, int p_bins, int n_trials, double alpha,
                               double baseline_decay, const UNetSpec& network, int n_train,
                               int n_val, double noise, std::uint64_t seed,
                               const py::object& evaluator) {
    SearchSpace space;
    space.optimizers = to_optimizers(optimizers);
    space.learning_rates = LogRange{lr_min, lr_max, lr_bins};
    space.shift_probs = LinearRange{0.0, 1.0, p_bins};
    const auto tmpl = make_template(network, full_spec(), n_train, n_val, 200);
    const auto eval = make_evaluator(evaluator, noise, tmpl.reference);
    SearchReport report;
    {
      py::gil_scoped_release release;
      report = reinforce_search(space, tmpl, eval, {n_trials, alpha, baseline_decay, seed});
    }
    return json_to_py(report_to_json(report));
  }, py::arg("optimizers") = std::vector<std::string>{"adam", "rmsprop", "adamax", "novograd"},
     py::arg("lr_min") = 1e-5, py::arg("lr_max") = 1e-2, py::arg("lr_bins") = 16,
     py::arg("p_bins") = 11, py::arg("n_trials") = 64, py::arg("alpha") = 1.0,
     py::arg("baseline_decay") = 0.9, py::arg("network") = full_spec(), py::arg("n_train") = 32,
     py::arg("n_val") = 9, py::arg("noise") = 0.0, py::arg("seed") = 0,
     py::arg("evaluator") = py::none(), "Runs a REINFORCE search; returns the report as a dict.");

  // ---- analysis ------------------------------------------------------------
  m.def("pearson", &pearson, py::arg("xs"), py::arg("ys"));
  m.def("speedup", py::overload_cast<double, double>(&speedup), py::arg("reference_hours"),
        py::arg("candidate_hours"));
  m.def("relative_hp_distance", [](double lr_a, double p_a, double lr_b, double p_b, double lr_min,
                                   double lr_max) {
    SearchSpace space;
    space.learning_rates = LogRange{lr_min, lr_max, 16};
    return relative_hp_distance({Optimizer::kAdam, lr_a, p_a}, {Optimizer::kAdam, lr_b, p_b}, space);
  }, py::arg("lr_a"), py::arg("p_a"), py::arg("lr_b"), py::arg("p_b"), py::arg("lr_min") = 1e-5,
     py::arg("lr_max") = 1e-2);

  // ---- synthetic data ------------------------------------------------------
  m.def("gen_synthetic_dataset", [](const std::filesystem::path& out_dir, int n_items,
                                    std::array<int, 3> shape, std::uint64_t seed, int workers) {
    SynthConfig cfg;
    cfg.n_items = n_items;
    cfg.shape = {shape[0], shape[1], shape[2]};
    cfg.families = default_families(n_items);
    cfg.seed = seed;
    py::gil_scoped_release release;
    return gen_synthetic_dataset(cfg, out_dir, workers).ids();
  }, py::arg("out_dir"), py::arg("n_items") = 12, py::arg("shape") = std::array<int, 3>{32, 32, 32},
     py::arg("seed") = 0, py::arg("workers") = 1, "Writes the dataset; returns the item ids.");
}
