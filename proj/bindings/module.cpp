#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>

#include "nsctrl/carleman.hpp"
#include "nsctrl/experiment.hpp"
#include "nsctrl/nonlinear.hpp"

namespace py = pybind11;
using namespace nsctrl;

namespace {

struct Problem {
    Grid g;
    EtaField eta;
    TimeProfile tp;
};

Problem make_problem(int nx, int ny, int nt, double T, const std::string& omega,
                     const std::string& omega0) {
    Problem p{build_grid(nx, ny, nt, T, RegionSpec::parse(omega),
                         RegionSpec::parse(omega0)),
              {},
              {}};
    p.eta = build_eta(p.g);
    p.tp = build_time_profile(nt, T);
    return p;
}

// s <= 0 selects the automatic scale (exponent target 40)
WeightSet weights_for(const Problem& p, double s, double lam,
                      double exp_clamp) {
    const double s_eff = s > 0 ? s : auto_s(p.eta, p.tp, lam, 40.0);
    return eval_weights(p.eta, p.tp, WeightParams{s_eff, lam, exp_clamp});
}

}  // namespace

PYBIND11_MODULE(_nsctrl, m) {
    m.doc() = "Penalized control solves, observability audits and the "
              "experiment runner for incompressible flow on staggered grids.";
    m.attr("__version__") = "1.0.0";

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<solver_error>(m, "SolverError", PyExc_RuntimeError);

    m.def(
        "validate_config",
        [](const std::string& path) {
            return validate_config(parse_config(path));
        },
        py::arg("path"),
        "Parse a config file and return its diagnostics (empty = valid).");

    m.def(
        "run",
        [](const std::string& path, std::optional<std::string> output,
           std::optional<std::uint64_t> seed, int parallel) {
            return run_experiment(parse_config(path), output, seed, parallel);
        },
        py::arg("path"), py::arg("output") = std::nullopt,
        py::arg("seed") = std::nullopt, py::arg("parallel") = 1,
        "Run the experiment described by a config file into its output "
        "directory; returns the process exit code (0 = success).");

    m.def(
        "solve_hum",
        [](int nx, int ny, int nt, double T, const std::string& omega,
           const std::string& omega0, double s, double lam, double exp_clamp,
           double eps, double cg_tol, int cg_max_iter, int control_index,
           std::uint64_t seed) {
            const Problem p = make_problem(nx, ny, nt, T, omega, omega0);
            const WeightSet w = weights_for(p, s, lam, exp_clamp);
            const StokesOperator op(p.g, p.g.dt);
            Rng rng(seed);
            const Vec y0 = random_stream_velocity(p.g, rng);

            HumOptions o;
            o.control_index = control_index;
            o.eps = eps;
            o.cg_tol = cg_tol;
            o.cg_max_iter = cg_max_iter;
            const RunResult r = solve_penalized_hum(op, w, y0, {}, o);

            py::dict d;
            d["eps"] = eps;
            d["s"] = w.prm.s;
            d["terminal_norm"] = r.terminal_norm;
            d["optimality_residual"] = r.optimality_residual;
            d["rhs_norm"] = r.rhs_norm;
            d["cg_iterations"] = r.cg_iterations;
            d["stagnated"] = r.stagnated;
            d["weighted_state"] = r.weighted[0];
            d["weighted_control"] = r.weighted[1];
            d["weighted_h2"] = r.weighted[2];
            d["weighted_h1_max"] = r.weighted[3];
            d["max_divergence"] = trajectory_max_div(p.g, r.state);
            return d;
        },
        py::arg("nx") = 32, py::arg("ny") = 32, py::arg("nt") = 64,
        py::arg("T") = 1.0, py::arg("omega") = "rect 0.3 0.3 0.7 0.7",
        py::arg("omega0") = "disc 0.5 0.5 0.12", py::arg("s") = 0.0,
        py::arg("lam") = 1.0, py::arg("exp_clamp") = 60.0,
        py::arg("eps") = 1e-4, py::arg("cg_tol") = 1e-10,
        py::arg("cg_max_iter") = 400, py::arg("control_index") = 2,
        py::arg("seed") = 1,
        "Solve one penalized control problem for a random unit start and "
        "return its metrics.  s <= 0 selects the automatic weight scale.");

    m.def(
        "audit",
        [](int nx, int ny, int nt, double T, const std::string& omega,
           const std::string& omega0, std::vector<double> s_values, double lam,
           double exp_clamp, int samples, int control_index,
           std::uint64_t seed) {
            const Problem p = make_problem(nx, ny, nt, T, omega, omega0);
            if (s_values.empty()) {
                const double a = auto_s(p.eta, p.tp, lam, 40.0);
                s_values = {a, 2 * a, 4 * a};
            }
            const StokesOperator op(p.g, p.g.dt);
            const AuditReport rep =
                audit_sweep(op, p.eta, p.tp, s_values, lam, exp_clamp, samples,
                            control_index, seed);

            py::list rows;
            for (const AuditRow& r : rep.rows) {
                py::dict d;
                d["s"] = r.s;
                d["seed"] = r.seed;
                d["ratio27"] = r.ratio27;
                d["ratio33"] = r.ratio33;
                d["outlier"] = r.outlier;
                rows.append(d);
            }
            py::dict out;
            out["s_values"] = rep.s_values;
            out["median27"] = rep.median27;
            out["max27"] = rep.max27;
            out["median33"] = rep.median33;
            out["max33"] = rep.max33;
            out["all_finite"] = rep.all_finite;
            out["rows"] = rows;
            return out;
        },
        py::arg("nx") = 32, py::arg("ny") = 32, py::arg("nt") = 64,
        py::arg("T") = 1.0, py::arg("omega") = "rect 0.3 0.3 0.7 0.7",
        py::arg("omega0") = "disc 0.5 0.5 0.12",
        py::arg("s_values") = std::vector<double>{}, py::arg("lam") = 1.0,
        py::arg("exp_clamp") = 60.0, py::arg("samples") = 10,
        py::arg("control_index") = 2, py::arg("seed") = 1,
        "Run the observability audit sweep and return per-s statistics plus "
        "one row per (sample, s) pair.  Empty s_values selects the automatic "
        "scale times {1, 2, 4}.");
}
