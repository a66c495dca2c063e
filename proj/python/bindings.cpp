#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spinpath/errors.hpp"
#include "spinpath/hamiltonian.hpp"
#include "spinpath/mixture.hpp"
#include "spinpath/optimizer.hpp"
#include "spinpath/runner.hpp"
#include "spinpath/spectrum.hpp"

namespace py = pybind11;
using namespace spinpath;

namespace {

py::object from_json(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

AlgorithmParams make_params(int k, double epsilon, std::uint64_t rng_seed, int power_iters_max, bool rayleigh_check,
                            bool stop_on_spectral_failure) {
  AlgorithmParams p;
  p.k = k;
  p.epsilon = epsilon;
  p.rng_seed = rng_seed;
  p.power_iters_max = power_iters_max;
  p.rayleigh_check = rayleigh_check;
  p.stop_on_spectral_failure = stop_on_spectral_failure;
  return p;
}

py::dict path_to_dict(const PathTrace& t) {
  std::vector<double> q, energy, gap, rayleigh, grad_dot;
  std::vector<bool> fallback;
  Matrix points(static_cast<Eigen::Index>(t.steps.size()), t.n);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    q.push_back(s.q);
    energy.push_back(s.energy_per_spin);
    gap.push_back(s.gap);
    rayleigh.push_back(s.rayleigh);
    grad_dot.push_back(s.grad_dot);
    fallback.push_back(s.used_fallback);
    points.row(static_cast<Eigen::Index>(i)) = s.point.transpose();
  }
  py::dict out;
  out["q"] = q;
  out["energy_per_spin"] = energy;
  out["gap"] = gap;
  out["rayleigh"] = rayleigh;
  out["grad_dot"] = grad_dot;
  out["used_fallback"] = fallback;
  out["points"] = points;
  out["complete"] = t.complete();
  out["final_energy"] = t.final_energy();
  out["sup_gap"] = t.sup_gap();
  out["target_misses"] = t.miss_count();
  out["failure"] = t.failure ? py::cast(*t.failure) : py::none();
  return out;
}

}  // namespace

PYBIND11_MODULE(_spinpath, m) {
  m.doc() = "Hessian descent paths for mixed spherical spin glasses";

  py::register_exception<SpectralFailure>(m, "SpectralFailure", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Mixture>(m, "Mixture")
      .def(py::init<std::map<int, double>>(), py::arg("gammas"))
      .def_static("parse", &Mixture::parse, py::arg("text"))
      .def_static("pure", &Mixture::pure, py::arg("p"), py::arg("gamma") = 1.0)
      .def("eval", &Mixture::eval, py::arg("q"), py::arg("order") = 0)
      .def_property_readonly("gammas", &Mixture::gammas)
      .def_property_readonly("degree", &Mixture::degree)
      .def_property_readonly("is_pure", &Mixture::is_pure)
      .def("__str__", &Mixture::to_string)
      .def("__repr__", [](const Mixture& x) { return "Mixture('" + x.to_string() + "')"; })
      .def(py::self == py::self);

  m.def("classify_full_rsb", [](const Mixture& x, int grid) {
    const auto c = classify_full_rsb(x, grid);
    py::dict d;
    d["is_full_rsb"] = c.is_full_rsb;
    d["margin"] = c.margin;
    return d;
  }, py::arg("mixture"), py::arg("grid_size") = 10000);
  m.def("energy_benchmark", &energy_benchmark, py::arg("mixture"), py::arg("q"));
  m.def("e_infinity", &e_infinity, py::arg("p"));
  m.def("q_parisi", [](const Mixture& x, double beta) { return q_parisi(x, beta).q_p; }, py::arg("mixture"),
        py::arg("beta"));
  m.def("parisi_density", &parisi_density, py::arg("mixture"), py::arg("beta"), py::arg("q"));
  m.def("rs_condition", [](const Mixture& x, double beta) {
    const auto r = rs_condition(x, beta);
    py::dict d;
    d["holds"] = r.holds;
    d["worst"] = r.worst;
    d["argmax_s"] = r.argmax_s;
    return d;
  }, py::arg("mixture"), py::arg("beta"));
  m.def("crisanti_sommers_at_xp", &crisanti_sommers_at_xp, py::arg("mixture"), py::arg("beta"));
  m.def("tap_rhs", &tap_rhs, py::arg("mixture"), py::arg("beta"));
  m.def("semicircle_cdf", &semicircle_cdf, py::arg("t"));
  m.def("ldp_rate", &ldp_rate, py::arg("t"));
  m.def("sphere_contraction_constant", &sphere_contraction_constant, py::arg("p"), py::arg("tau"));
  m.def("theory_report", [](const Mixture& x, double beta) { return from_json(theory_report(x, beta)); },
        py::arg("mixture"), py::arg("beta") = 2.0);

  py::class_<Disorder>(m, "Disorder")
      .def_property_readonly("mixture", &Disorder::mixture)
      .def_property_readonly("n", &Disorder::n)
      .def_property_readonly("seed", &Disorder::seed)
      .def("energy", &energy, py::arg("x"))
      .def("gradient", &euclidean_gradient, py::arg("x"))
      .def("hessian", &euclidean_hessian, py::arg("x"))
      .def("projected_gradient", &projected_gradient, py::arg("x"))
      .def("projected_hessian", &projected_hessian, py::arg("x"));

  m.def("sample_disorder", [](const Mixture& x, int n, std::uint64_t seed) { return sample_disorder(x, n, seed); },
        py::arg("mixture"), py::arg("n"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());

  m.def("run_radial_path",
        [](const Disorder& d, int k, double epsilon, std::uint64_t rng_seed, int power_iters_max, bool rayleigh_check,
           bool stop_on_spectral_failure) {
          PathTrace t;
          {
            py::gil_scoped_release release;
            t = run_radial_path(d, make_params(k, epsilon, rng_seed, power_iters_max, rayleigh_check,
                                               stop_on_spectral_failure));
          }
          return path_to_dict(t);
        },
        py::arg("disorder"), py::arg("k"), py::arg("epsilon"), py::arg("rng_seed") = 0,
        py::arg("power_iters_max") = 500, py::arg("rayleigh_check") = true,
        py::arg("stop_on_spectral_failure") = true);

  m.def("run_pure_sphere",
        [](const Disorder& d, double tau, int steps, double epsilon, std::uint64_t rng_seed,
           bool stop_on_spectral_failure) {
          SphereTrace t;
          {
            py::gil_scoped_release release;
            t = run_pure_sphere(d, d.mixture().degree(), tau, steps,
                                make_params(2, epsilon, rng_seed, 500, true, stop_on_spectral_failure));
          }
          std::vector<double> energy;
          for (const auto& s : t.steps) energy.push_back(s.energy_per_spin);
          py::dict out;
          out["energy_per_spin"] = energy;
          out["final_energy"] = t.final_energy();
          out["max_norm_error"] = t.max_norm_error;
          out["target_misses"] = t.miss_count();
          out["failure"] = t.failure ? py::cast(*t.failure) : py::none();
          return out;
        },
        py::arg("disorder"), py::arg("tau"), py::arg("steps"), py::arg("epsilon"), py::arg("rng_seed") = 0,
        py::arg("stop_on_spectral_failure") = true);

  m.def("analyze_hessian",
        [](const Disorder& d, const Vector& x, double epsilon) {
          return from_json(to_json(analyze_hessian(d, x, epsilon), true));
        },
        py::arg("disorder"), py::arg("x"), py::arg("epsilon"));

  m.def("run_experiment",
        [](const std::string& config_text) {
          const ExperimentConfig cfg = parse_config(config_text);
          ExperimentResult r;
          {
            py::gil_scoped_release release;
            r = run_experiment(cfg);
          }
          return from_json(r.summary);
        },
        py::arg("config"), "Runs a key=value configuration and returns the summary.");

  m.def("verify_trace",
        [](const std::filesystem::path& trace, const Disorder& d) { return from_json(verify_trace(trace, d).to_json()); },
        py::arg("trace_file"), py::arg("disorder"));
}
