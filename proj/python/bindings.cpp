#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "fbsde/degeneracy.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/estimators.hpp"
#include "fbsde/experiments.hpp"
#include "fbsde/oracles.hpp"
#include "fbsde/pde_fd.hpp"
#include "fbsde/rng.hpp"

namespace py = pybind11;
using namespace fbsde;

namespace {

CoefficientModel make_model(const std::string& name, const std::map<std::string, double>& params,
                            const std::optional<std::string>& base) {
    ModelSpec spec;
    spec.name = name;
    for (const auto& [k, v] : params) spec.params[k] = v;
    spec.base = base.value_or("");
    return builtin_model(spec);
}

McOptions mc(std::uint64_t seed, std::size_t n_paths, unsigned workers) {
    McOptions o;
    o.seed = seed;
    o.n_paths = n_paths;
    o.workers = workers;
    return o;
}

WeightKind kind_from(const std::string& s) {
    if (s == "degenerate") return WeightKind::degenerate;
    if (s == "nondegenerate") return WeightKind::nondegenerate;
    throw ValidationError("kind must be 'degenerate' or 'nondegenerate'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Monte Carlo and finite-difference tools for decoupled FBSDEs with degenerate volatility";

    static py::exception<ValidationError> validation_exc(m, "ValidationError", PyExc_ValueError);
    static py::exception<NumericalError> numerical_exc(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation_exc, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical_exc, e.what());
        }
    });

    m.def("list_models", &builtin_model_names);
    m.def("list_experiments", &experiment_names);

    m.def("philox4x32", [](std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
        return Philox4x32::apply(ctr, key);
    }, py::arg("counter"), py::arg("key"));
    m.def("brownian_increments", &brownian_increments, py::arg("seed"), py::arg("path_index"), py::arg("n_steps"),
          py::arg("dt"));

    m.def("gaussian_abs_moment", &oracles::gaussian_abs_moment, py::arg("p"));
    m.def("example1_u", [](double t, double x, double alpha, double beta, int n_quad) {
        return oracles::example1_u(t, x, {alpha, beta}, n_quad);
    }, py::arg("t"), py::arg("x"), py::arg("alpha"), py::arg("beta"), py::arg("n_quad") = 128);
    m.def("example1_ux_at_zero", [](double t, double alpha, double beta) {
        return oracles::example1_ux_at_zero(t, {alpha, beta});
    }, py::arg("t"), py::arg("alpha"), py::arg("beta"));
    m.def("example1_z_exponent", [](double alpha, double beta) {
        return oracles::example1_z_exponent({alpha, beta});
    }, py::arg("alpha"), py::arg("beta"));
    m.def("bachelier_digital", [](double t, double x, double sigma_bar, double strike, double T) {
        const auto v = oracles::bachelier_digital(t, x, sigma_bar, strike, T);
        return std::make_pair(v.u, v.ux);
    }, py::arg("t"), py::arg("x"), py::arg("sigma_bar"), py::arg("strike") = 0.0, py::arg("T") = 1.0);

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("mean", &Estimate::mean)
        .def_readonly("stderr", &Estimate::std_err)
        .def_readonly("n_used", &Estimate::n_used)
        .def_readonly("n_floored", &Estimate::n_floored)
        .def_readonly("n_invalid", &Estimate::n_invalid)
        .def_readonly("reliable", &Estimate::reliable)
        .def("__repr__", [](const Estimate& e) {
            std::ostringstream os;
            os << "Estimate(mean=" << e.mean << ", stderr=" << e.std_err << ", n_used=" << e.n_used << ")";
            return os.str();
        });


    m.def("estimate_u", [](const std::string& model, const std::map<std::string, double>& params, double t0,
                           double x0, int n_steps, std::size_t n_paths, std::uint64_t seed,
                           std::optional<std::string> base, unsigned workers) {
        const auto mdl = make_model(model, params, base);
        py::gil_scoped_release release;
        return estimate_u(mdl, {t0, x0}, TimeGrid(t0, mdl.horizon_T, n_steps), mc(seed, n_paths, workers));
    }, py::arg("model"), py::arg("params") = std::map<std::string, double>{}, py::arg("t0") = 0.0,
       py::arg("x0") = 0.0, py::arg("n_steps") = 200, py::arg("n_paths") = 10000, py::arg("seed") = 0,
       py::arg("base") = std::nullopt, py::arg("workers") = 1);

    m.def("estimate_ux", [](const std::string& model, const std::map<std::string, double>& params, double t0,
                            double x0, const std::string& method, int n_steps, std::size_t n_paths,
                            std::uint64_t seed, std::optional<std::string> base, unsigned workers) {
        const auto mdl = make_model(model, params, base);
        const TimeGrid grid(t0, mdl.horizon_T, n_steps);
        const McOptions opts = mc(seed, n_paths, workers);
        if (method == "pathwise") {
            py::gil_scoped_release release;
            return estimate_ux_pathwise(mdl, {t0, x0}, grid, opts);
        }
        const WeightKind kind = kind_from(method);
        py::gil_scoped_release release;
        return estimate_ux_weighted(mdl, {t0, x0}, grid, opts, kind);
    }, py::arg("model"), py::arg("params") = std::map<std::string, double>{}, py::arg("t0") = 0.0,
       py::arg("x0") = 0.0, py::arg("method") = "degenerate", py::arg("n_steps") = 200, py::arg("n_paths") = 10000,
       py::arg("seed") = 0, py::arg("base") = std::nullopt, py::arg("workers") = 1);

    m.def("in_gamma0", [](const std::string& model, const std::map<std::string, double>& params, double t,
                          double x, std::optional<std::string> base) {
        return in_gamma0(make_model(model, params, base), {t, x}, 200);
    }, py::arg("model"), py::arg("params") = std::map<std::string, double>{}, py::arg("t") = 0.0,
       py::arg("x") = 0.0, py::arg("base") = std::nullopt);

    py::class_<PdeSolution>(m, "FdSolution")
        .def("u", &PdeSolution::u, py::arg("t"), py::arg("x"))
        .def("u_x", &PdeSolution::u_x, py::arg("t"), py::arg("x"))
        .def_property_readonly("n_x", [](const PdeSolution& s) { return s.grid().n_x; })
        .def_property_readonly("n_t", [](const PdeSolution& s) { return s.grid().n_t; })
        .def("to_csv", [](const PdeSolution& s) {
            std::ostringstream os;
            s.write_csv(os);
            return os.str();
        });

    m.def("solve_fd", [](const std::string& model, const std::map<std::string, double>& params, double x_min,
                         double x_max, double dx, double t0, std::optional<std::string> base) {
        const auto mdl = make_model(model, params, base);
        const PdeGrid grid = make_pde_grid(mdl, x_min, x_max, dx, t0);
        py::gil_scoped_release release;
        return solve_fd(mdl, grid);
    }, py::arg("model"), py::arg("params") = std::map<std::string, double>{}, py::arg("x_min") = -5.0,
       py::arg("x_max") = 5.0, py::arg("dx") = 0.01, py::arg("t0") = 0.0, py::arg("base") = std::nullopt);

    m.def("run_experiment", [](const std::string& config_json, std::optional<std::filesystem::path> out_dir,
                               unsigned workers) {
        const ExperimentConfig cfg = parse_config(config_json);
        RunOptions opts;
        opts.out_dir = std::move(out_dir);
        opts.workers = workers;
        ExperimentResult result;
        {
            py::gil_scoped_release release;
            result = run_experiment(cfg, opts);
        }
        py::list checks;
        for (const auto& c : result.checks) {
            py::dict d;
            d["name"] = c.name;
            d["measured"] = c.measured;
            d["threshold"] = c.threshold;
            d["passed"] = c.passed;
            d["detail"] = c.detail;
            checks.append(d);
        }
        py::dict out;
        out["files"] = result.files;
        out["checks"] = checks;
        out["passed"] = result.all_passed();
        return out;
    }, py::arg("config_json"), py::arg("out_dir") = std::nullopt, py::arg("workers") = 1);
}
