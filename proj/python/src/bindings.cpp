#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "h2ad/bench.hpp"
#include "h2ad/errors.hpp"
#include "h2ad/fusion.hpp"
#include "h2ad/mbdnn.hpp"
#include "h2ad/signal_sim.hpp"
#include "h2ad/subspace.hpp"

namespace py = pybind11;
using namespace h2ad;

namespace {

SimScenario scenario(const ArrayConfig& cfg, double theta_deg, double snr_db, int snapshots, std::uint64_t seed) {
  SimScenario sc;
  sc.cfg = cfg;
  sc.theta0 = deg_to_rad(theta_deg);
  sc.snr_db = snr_db;
  sc.snapshots = snapshots;
  sc.seed = seed;
  validate_scenario(sc);
  return sc;
}

}  // namespace

PYBIND11_MODULE(_h2ad, m) {
  m.doc() = "Heterogeneous hybrid analog-digital array DOA estimation";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ModelFormatError>(m, "ModelFormatError", error.ptr());

  py::class_<ArrayConfig>(m, "ArrayConfig")
      .def(py::init<>())
      .def_readwrite("num_groups", &ArrayConfig::num_groups)
      .def_readwrite("M", &ArrayConfig::antennas_per_subarray)
      .def_readwrite("K", &ArrayConfig::subarrays_per_group)
      .def_readwrite("d_over_lambda", &ArrayConfig::d_over_lambda)
      .def_readwrite("wavelength", &ArrayConfig::wavelength)
      .def("total_antennas", &ArrayConfig::total_antennas)
      .def("total_candidates", &ArrayConfig::total_candidates)
      .def("__eq__", [](const ArrayConfig& a, const ArrayConfig& b) { return a == b; })
      .def("__repr__", [](const ArrayConfig& c) { return "ArrayConfig(" + format_config(c) + ")"; });

  m.def("table1_config", &table1_config, "M = (7, 11, 13), K = 16 each");
  m.def("validate_config", &validate_config);
  m.def("parse_config", [](const std::string& text) { return parse_config(text); });
  m.def("load_config", &load_config);
  m.def("format_config", &format_config);

  m.def(
      "simulate_group",
      [](const ArrayConfig& cfg, int q, double theta_deg, double snr_db, int snapshots, std::uint64_t seed) {
        return simulate_group(scenario(cfg, theta_deg, snr_db, snapshots, seed), q).data;
      },
      py::arg("cfg"), py::arg("q"), py::arg("theta_deg"), py::arg("snr_db"), py::arg("snapshots") = 200,
      py::arg("seed") = 1, "K_q x T complex snapshot matrix of group q");

  m.def(
      "group_candidates",
      [](const ArrayConfig& cfg, int q, const Eigen::MatrixXcd& covariance) {
        const auto set = group_candidates(covariance, cfg.group(q));
        std::vector<double> deg;
        for (double a : set.angles) deg.push_back(rad_to_deg(a));
        return py::make_tuple(set.phase, deg);
      },
      py::arg("cfg"), py::arg("q"), py::arg("covariance"), "(phase, candidate angles in degrees)");

  m.def(
      "estimate_doa",
      [](const ArrayConfig& cfg, double theta_deg, double snr_db, int snapshots, std::uint64_t seed,
         const std::string& method) {
        const auto est = estimate_doa(scenario(cfg, theta_deg, snr_db, snapshots, seed), parse_weight_method(method));
        py::dict out;
        out["theta_deg"] = rad_to_deg(est.angle);
        std::vector<double> tuple;
        for (double a : est.tuple.angles) tuple.push_back(rad_to_deg(a));
        out["tuple_deg"] = tuple;
        out["weights"] = est.weights.w;
        return out;
      },
      py::arg("cfg"), py::arg("theta_deg"), py::arg("snr_db"), py::arg("snapshots") = 200, py::arg("seed") = 1,
      py::arg("method") = "crlb_ratio");

  m.def(
      "crlb_group_exact",
      [](const ArrayConfig& cfg, int q, double theta_deg, double snr_db, int snapshots) {
        return crlb_group_exact(cfg, q, deg_to_rad(theta_deg), snr_db, snapshots);
      },
      "rad^2");
  m.def(
      "fused_crlb_deg",
      [](const ArrayConfig& cfg, double theta_deg, double snr_db, int snapshots) {
        return rad_to_deg(std::sqrt(fused_crlb(cfg, deg_to_rad(theta_deg), snr_db, snapshots).fused_bound));
      },
      "square root of the fused bound, degrees");
  m.def("weights_crlb_ratio", [](const std::vector<int>& antennas) { return weights_crlb_ratio(antennas).w; });

  m.def("compute_rmse", [](const std::vector<double>& est, double truth) { return compute_rmse(est, truth); });

  m.def(
      "bench",
      [](const ArrayConfig& cfg, double theta_deg, std::vector<double> snr_grid, std::vector<int> snapshot_grid,
         int trials, std::vector<std::string> methods, std::uint64_t seed) {
        BenchSpec spec;
        spec.cfg = cfg;
        spec.theta0_deg = theta_deg;
        spec.snr_grid = std::move(snr_grid);
        spec.snapshot_grid = std::move(snapshot_grid);
        spec.trials = trials;
        spec.methods.clear();
        for (const auto& name : methods) spec.methods.push_back(parse_bench_method(name));
        spec.master_seed = seed;
        spec.record_timing = false;
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_sweep(spec);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["method"] = r.method;
          d["snr_db"] = r.snr_db;
          d["snapshots"] = r.snapshots;
          d["K"] = r.k;
          d["rmse_deg"] = r.rmse_deg;
          d["crlb_fused_deg"] = r.crlb_fused_deg;
          d["trials_used"] = r.trials_used;
          d["failures"] = r.failures;
          out.append(d);
        }
        return out;
      },
      py::arg("cfg"), py::arg("theta_deg") = 41.0, py::arg("snr_grid") = std::vector<double>{0.0},
      py::arg("snapshot_grid") = std::vector<int>{200}, py::arg("trials") = 50,
      py::arg("methods") = std::vector<std::string>{"crlb_ratio", "exact_crlb"}, py::arg("seed") = 1,
      "Monte-Carlo sweep; rows as dicts (timing disabled)");

  m.def(
      "predict_doa",
      [](const std::string& model_path, const ArrayConfig& cfg, double theta_deg, double snr_db, int snapshots,
         std::uint64_t seed) {
        const MlpModel model = load_model(model_path);
        return predict_doa(model, scenario_candidates(scenario(cfg, theta_deg, snr_db, snapshots, seed)));
      },
      py::arg("model_path"), py::arg("cfg"), py::arg("theta_deg"), py::arg("snr_db"), py::arg("snapshots") = 200,
      py::arg("seed") = 1, "MBDNN estimate in degrees");
}
