#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mlsis/distributions.hpp"
#include "mlsis/errors.hpp"
#include "mlsis/fem2d.hpp"
#include "mlsis/harness.hpp"
#include "mlsis/random_field.hpp"
#include "mlsis/sis.hpp"

namespace py = pybind11;
using namespace mlsis;

namespace {

ExperimentConfig config_from(const py::dict& settings) {
  ExperimentConfig c;
  c.threads = 1;
  for (const auto& [k, v] : settings) {
    c.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  }
  c.validate();
  return c;
}

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["run_id"] = r.run_id;
  d["estimate"] = r.ok() ? py::cast(r.estimate) : py::none();
  d["cost_units"] = r.cost_units;
  d["n_temper"] = r.n_temper;
  d["n_bridge"] = r.n_bridge;
  d["evals"] = r.evals;
  d["status"] = r.status;
  d["message"] = r.message;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rare-event estimation with (multilevel) sequential importance sampling";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DegenerateWeights>(m, "DegenerateWeights", PyExc_RuntimeError);
  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
  py::register_exception<ModelEvaluationError>(m, "ModelEvaluationError", PyExc_RuntimeError);

  m.def(
      "estimate",
      [](const py::dict& settings) {
        const auto c = config_from(settings);
        std::vector<RunRecord> records;
        {
          py::gil_scoped_release release;
          records = run_experiment(c);
        }
        py::list out;
        for (const auto& r : records) out.append(record_dict(r));
        return out;
      },
      py::arg("settings"),
      "Runs an experiment. Keys are the CLI flag names (model, method, n, reps, seed, ...); "
      "returns one dict per repetition.");

  m.def(
      "estimate_csv",
      [](const py::dict& settings) {
        const auto c = config_from(settings);
        std::ostringstream out;
        {
          py::gil_scoped_release release;
          const auto records = run_experiment(c);
          write_csv_header(out, c.resolved_levels());
          for (const auto& r : records) write_csv_row(out, r, c.resolved_levels());
        }
        return out.str();
      },
      py::arg("settings"), "Same as estimate, returned as CSV text.");

  m.def(
      "mc_reference",
      [](const py::dict& settings) {
        const auto c = config_from(settings);
        RunRecord r;
        {
          py::gil_scoped_release release;
          r = mc_reference(c);
        }
        return record_dict(r);
      },
      py::arg("settings"));

  m.def(
      "evaluate",
      [](const py::dict& settings, const Eigen::VectorXd& u, int level) {
        const auto c = config_from(settings);
        return make_model(c)->evaluate(u, level);
      },
      py::arg("settings"), py::arg("u"), py::arg("level"), "Limit-state value G_l(u).");

  m.def("csv_header", &csv_header, py::arg("levels"));
  m.def("cost_units", [](const std::vector<std::uint64_t>& counts, int levels, int d) {
    return cost_units(counts, levels, d);
  });
  m.def("rel_rmse", [](const std::vector<double>& est, double ref) { return rel_rmse(est, ref); });

  m.def("std_normal_log_cdf", &std_normal_log_cdf, py::arg("x"));
  m.def(
      "solve_sigma",
      [](const std::vector<double>& g, double sigma_prev, double delta_target) {
        const auto s = solve_sigma(g, sigma_prev, delta_target);
        return py::make_tuple(s.sigma, s.delta, s.boundary);
      },
      py::arg("g"), py::arg("sigma_prev"), py::arg("delta_target"));
  m.def(
      "kl_eigenvalues_1d",
      [](double corr_length, std::size_t count) {
        std::vector<double> out;
        for (const auto& p : kl_eigenpairs_1d(corr_length, count)) out.push_back(p.eigenvalue);
        return out;
      },
      py::arg("corr_length"), py::arg("count"));

  m.def(
      "sample_vmfn",
      [](const Eigen::VectorXd& nu, double kappa, double shape, double spread, std::size_t count,
         std::uint64_t seed) {
        VmfnParams p{nu, kappa, shape, spread};
        p.validate();
        Rng rng(seed);
        Eigen::MatrixXd out(nu.size(), static_cast<Eigen::Index>(count));
        for (Eigen::Index k = 0; k < out.cols(); ++k) out.col(k) = sample_vmfn(p, rng);
        return out;
      },
      py::arg("nu"), py::arg("kappa"), py::arg("shape"), py::arg("spread"), py::arg("count"),
      py::arg("seed") = 1, "Draws as matrix columns.");
  m.def(
      "fit_vmfn",
      [](const Eigen::MatrixXd& samples, const std::vector<double>& weights) {
        const auto p = fit_vmfn(samples, weights);
        py::dict d;
        d["nu"] = p.nu;
        d["kappa"] = p.kappa;
        d["shape"] = p.shape;
        d["spread"] = p.spread;
        return d;
      },
      py::arg("samples"), py::arg("weights"));

  m.def(
      "flowcell_travel_time",
      [](const std::vector<double>& triangle_coefficients, std::size_t cells_per_side) {
        auto mesh = std::make_shared<const UnitSquareMesh>(cells_per_side);
        return trace_particle(solve_darcy_rt0(mesh, triangle_coefficients), {0.0, 0.5});
      },
      py::arg("triangle_coefficients"), py::arg("cells_per_side"),
      "Travel time from (0, 0.5) for a piecewise-constant permeability.");
}
