#include "nsctrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nsctrl/carleman.hpp"
#include "nsctrl/io.hpp"
#include "nsctrl/nonlinear.hpp"

namespace nsctrl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolName = "nsctrl";
constexpr const char* kToolVersion = "1.0.0";

std::string eigen_version() {
    return std::to_string(EIGEN_WORLD_VERSION) + "." +
           std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& tok, const std::string& where) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw config_error(where + ": not a number: '" + tok + "'");
    }
    if (pos != tok.size())
        throw config_error(where + ": trailing characters after number: '" +
                           tok + "'");
    return v;
}

int parse_int(const std::string& tok, const std::string& where) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
        throw config_error(where + ": not an integer: '" + tok + "'");
    }
    if (pos != tok.size())
        throw config_error(where + ": trailing characters after integer: '" +
                           tok + "'");
    if (v < std::numeric_limits<int>::min() ||
        v > std::numeric_limits<int>::max())
        throw config_error(where + ": integer out of range: '" + tok + "'");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& tok, const std::string& where) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
        throw config_error(where + ": not a non-negative integer: '" + tok +
                           "'");
    }
    if (pos != tok.size() || tok.find('-') != std::string::npos)
        throw config_error(where + ": not a non-negative integer: '" + tok +
                           "'");
    return v;
}

bool parse_bool(const std::string& tok, const std::string& where) {
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    throw config_error(where + ": expected true/false: '" + tok + "'");
}

std::vector<std::string> split_list(const std::string& val,
                                    const std::string& where) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(val);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) throw config_error(where + ": empty list entry");
        out.push_back(t);
    }
    if (out.empty()) throw config_error(where + ": empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& val,
                                      const std::string& where) {
    std::vector<double> out;
    for (const std::string& t : split_list(val, where))
        out.push_back(parse_double(t, where));
    return out;
}

std::vector<int> parse_int_list(const std::string& val,
                                const std::string& where) {
    std::vector<int> out;
    for (const std::string& t : split_list(val, where))
        out.push_back(parse_int(t, where));
    return out;
}

void apply_key(ExperimentConfig& c, const std::string& key,
               const std::string& val, const std::string& where) {
    if (key == "kind") c.kind = val;
    else if (key == "nx") c.nx = parse_int(val, where);
    else if (key == "ny") c.ny = parse_int(val, where);
    else if (key == "nt") c.nt = parse_int(val, where);
    else if (key == "T") c.T = parse_double(val, where);
    else if (key == "omega") c.omega = val;
    else if (key == "omega0") c.omega0 = val;
    else if (key == "lambda") c.lambda = parse_double(val, where);
    else if (key == "s") {
        if (val == "auto") {
            c.s_mode = "auto";
        } else {
            c.s_mode = "numeric";
            c.s_value = parse_double(val, where);
        }
    } else if (key == "s_target") c.s_target = parse_double(val, where);
    else if (key == "exp_clamp") c.exp_clamp = parse_double(val, where);
    else if (key == "floor_delta") c.floor_delta = parse_double(val, where);
    else if (key == "seed") c.seed = parse_u64(val, where);
    else if (key == "control_index") c.control_index = parse_int(val, where);
    else if (key == "eps") c.eps = parse_double(val, where);
    else if (key == "eps_list") c.eps_list = parse_double_list(val, where);
    else if (key == "cg_tol") c.cg_tol = parse_double(val, where);
    else if (key == "cg_max_iter") c.cg_max_iter = parse_int(val, where);
    else if (key == "picard_tol") c.picard_tol = parse_double(val, where);
    else if (key == "picard_max_iter") c.picard_max_iter = parse_int(val, where);
    else if (key == "amplitude") c.amplitude = parse_double(val, where);
    else if (key == "amplitudes") c.amplitudes = parse_double_list(val, where);
    else if (key == "bisection_steps") c.bisection_steps = parse_int(val, where);
    else if (key == "samples") c.samples = parse_int(val, where);
    else if (key == "s_list") c.s_list = parse_double_list(val, where);
    else if (key == "spatial_grids") c.spatial_grids = parse_int_list(val, where);
    else if (key == "temporal_nts") c.temporal_nts = parse_int_list(val, where);
    else if (key == "mms_nt") c.mms_nt = parse_int(val, where);
    else if (key == "mms_grid") c.mms_grid = parse_int(val, where);
    else if (key == "mms_ref_nt") c.mms_ref_nt = parse_int(val, where);
    else if (key == "dump_weights") c.dump_weights = parse_bool(val, where);
    else if (key == "output") c.output = val;
    else throw config_error(where + ": unknown key '" + key + "'");
}

// keys accepted by every kind
const std::set<std::string>& common_keys() {
    static const std::set<std::string> k = {
        "kind", "nx", "ny", "nt", "T", "omega", "omega0",
        "lambda", "s", "s_target", "exp_clamp", "floor_delta",
        "seed", "control_index", "output", "dump_weights"};
    return k;
}

const std::set<std::string>& extra_keys(const std::string& kind) {
    static const std::set<std::string> fwd = {
        "spatial_grids", "temporal_nts", "mms_nt", "mms_grid", "mms_ref_nt"};
    static const std::set<std::string> hum = {"eps", "eps_list", "cg_tol",
                                              "cg_max_iter"};
    static const std::set<std::string> audit = {"samples", "s_list"};
    static const std::set<std::string> nonlinear = {
        "eps", "cg_tol", "cg_max_iter", "picard_tol", "picard_max_iter",
        "amplitude"};
    static const std::set<std::string> sweep = {
        "eps", "cg_tol", "cg_max_iter", "picard_tol", "picard_max_iter",
        "amplitudes", "bisection_steps"};
    static const std::set<std::string> none;
    if (kind == "forward-check") return fwd;
    if (kind == "hum") return hum;
    if (kind == "audit") return audit;
    if (kind == "nonlinear") return nonlinear;
    if (kind == "delta-sweep") return sweep;
    return none;
}

Grid grid_of(const ExperimentConfig& cfg) {
    return build_grid(cfg.nx, cfg.ny, cfg.nt, cfg.T,
                      RegionSpec::parse(cfg.omega),
                      RegionSpec::parse(cfg.omega0));
}

// Everything the weight-based kinds share: grid, spatial profile, time
// profile, resolved s (auto or explicit) and the evaluated weight set.
struct WeightContext {
    Grid g;
    EtaField eta;
    TimeProfile tp;
    double auto_value = 0;
    double s = 0;
    WeightSet w;
};

WeightContext make_weight_context(const ExperimentConfig& cfg) {
    WeightContext c;
    c.g = grid_of(cfg);
    c.eta = build_eta(c.g);
    c.tp = build_time_profile(cfg.nt, cfg.T, cfg.floor_delta);
    c.auto_value = auto_s(c.eta, c.tp, cfg.lambda, cfg.s_target);
    c.s = cfg.s_mode == "auto" ? c.auto_value : cfg.s_value;
    WeightParams prm;
    prm.s = c.s;
    prm.lambda = cfg.lambda;
    prm.exp_clamp = cfg.exp_clamp;
    c.w = eval_weights(c.eta, c.tp, prm);
    // only the audit kind consumes the alpha-family exponentials the flush
    // census tracks; the flag is still recorded in every summary
    if (c.w.overflush_flag && cfg.kind == "audit")
        std::cerr << "warning: more than half of the exponential weight "
                     "samples flushed to zero (s too large for this mesh)\n";
    return c;
}

json weights_summary(const ExperimentConfig& cfg, const WeightContext& c) {
    return json{{"s", c.s},
                {"s_mode", cfg.s_mode},
                {"auto_s", c.auto_value},
                {"lambda", cfg.lambda},
                {"exp_clamp", cfg.exp_clamp},
                {"floor_delta", cfg.floor_delta},
                {"overflush", c.w.overflush_flag},
                {"flush_fraction", c.w.flush_fraction}};
}

void maybe_dump_weights(const ExperimentConfig& cfg, const WeightContext& c,
                        const fs::path& out) {
    if (!cfg.dump_weights) return;
    dump_weights(out / "weights.bin", c.w);
    export_weights_csv(out / "weights.csv", c.g, c.w);
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = c.kind;
    j["nx"] = c.nx;
    j["ny"] = c.ny;
    j["nt"] = c.nt;
    j["T"] = c.T;
    j["omega"] = c.omega;
    j["omega0"] = c.omega0;
    j["lambda"] = c.lambda;
    j["s"] = c.s_mode == "auto" ? json("auto") : json(c.s_value);
    j["s_mode"] = c.s_mode;
    j["s_target"] = c.s_target;
    j["exp_clamp"] = c.exp_clamp;
    j["floor_delta"] = c.floor_delta;
    j["seed"] = c.seed;
    j["control_index"] = c.control_index;
    j["eps"] = c.eps;
    j["eps_list"] = c.eps_list;
    j["cg_tol"] = c.cg_tol;
    j["cg_max_iter"] = c.cg_max_iter;
    j["picard_tol"] = c.picard_tol;
    j["picard_max_iter"] = c.picard_max_iter;
    j["amplitude"] = c.amplitude;
    j["amplitudes"] = c.amplitudes;
    j["bisection_steps"] = c.bisection_steps;
    j["samples"] = c.samples;
    j["s_list"] = c.s_list;
    j["spatial_grids"] = c.spatial_grids;
    j["temporal_nts"] = c.temporal_nts;
    j["mms_nt"] = c.mms_nt;
    j["mms_grid"] = c.mms_grid;
    j["mms_ref_nt"] = c.mms_ref_nt;
    j["dump_weights"] = c.dump_weights;
    j["output"] = c.output;
    return j;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw config_error("cannot open output file: " + p.string());
    out << content;
}

std::string point_dir_name(int i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "eps_%03d", i);
    return buf;
}

// successive convergence orders between refinement levels plus a
// least-squares slope of log(err) against log(scale)
struct OrderFit {
    std::vector<double> orders;
    double fit = std::numeric_limits<double>::quiet_NaN();
};

OrderFit order_fit(const std::vector<double>& scale,
                   const std::vector<double>& err) {
    OrderFit f;
    const int n = static_cast<int>(scale.size());
    for (int i = 1; i < n; ++i)
        f.orders.push_back(std::log(err[i - 1] / err[i]) /
                           std::log(scale[i - 1] / scale[i]));
    if (n < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(scale[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    f.fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return f;
}

// Final-time state of the manufactured-solution forward run on grid g;
// streamed so only the last level is retained.
Vec mms_final_state(const Grid& g) {
    StokesOperator op(g, g.dt);
    const SourceFn f = [&g](int k, Vec& out) { out += mms_source(g, g.t(k)); };
    Vec last;
    run_forward(op, mms_velocity(g, 0.0), f, nullptr,
                [&](int k, const Vec& vel, const Vec&) {
                    if (k == g.nt) last = vel;
                });
    return last;
}

constexpr double kDivTol = 1e-10;  // relative divergence invariant

int run_forward_check(const ExperimentConfig& cfg, const fs::path& out,
                      json& summary) {
    const Grid g = grid_of(cfg);
    int code = 0;

    // free decay of a random solenoidal field: energy must fall, the
    // discrete divergence must stay at rounding level on every step
    {
        StokesOperator op(g, g.dt);
        Rng rng(cfg.seed);
        const Vec y0 = random_stream_velocity(g, rng);
        CsvWriter metrics(out / "forward_metrics.csv",
                          {"t", "energy", "max_divergence"});
        double max_div = 0, prev_energy = 0, e0 = 0, eT = 0;
        bool monotone = true;
        run_forward(op, y0, nullptr, nullptr,
                    [&](int k, const Vec& vel, const Vec&) {
                        const double e = 0.5 * dot_l2(g, vel, vel);
                        const double dv = max_divergence_rel(g, vel);
                        metrics.row({g.t(k), e, dv});
                        max_div = std::max(max_div, dv);
                        if (k == 0) e0 = e;
                        else if (e > prev_energy) monotone = false;
                        prev_energy = e;
                        eT = e;
                    });
        summary["forward"] = json{{"energy_initial", e0},
                                  {"energy_final", eT},
                                  {"energy_monotone", monotone},
                                  {"max_divergence", max_div}};
        if (!(max_div <= kDivTol)) {
            std::cerr << "invariant violated: relative divergence " << max_div
                      << " exceeds " << kDivTol << "\n";
            code = 2;
        }
    }

    const RegionSpec ro = RegionSpec::parse(cfg.omega);
    const RegionSpec ro0 = RegionSpec::parse(cfg.omega0);

    // spatial refinement against the closed-form solution, time mesh held
    // fine and fixed so the first-order time error stays subordinate
    {
        std::vector<double> hs, errs;
        // mms_nt applies to the first grid; finer grids get dt ~ h^2 so the
        // first-order time error scales like the second-order space error
        const double n0 = cfg.spatial_grids.front();
        for (int n : cfg.spatial_grids) {
            const int nt_n = std::max(
                4, static_cast<int>(std::lround(cfg.mms_nt * (n / n0) * (n / n0))));
            const Grid gs = build_grid(n, n, nt_n, cfg.T, ro, ro0);
            const Vec last = mms_final_state(gs);
            errs.push_back(norm_l2(gs, last - mms_velocity(gs, gs.T)));
            hs.push_back(gs.hx);
        }
        const OrderFit fit = order_fit(hs, errs);
        CsvWriter csv(out / "spatial.csv", {"grid", "h", "error", "order"});
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const double ord = i == 0
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : fit.orders[i - 1];
            csv.raw_row(std::to_string(cfg.spatial_grids[i]) + "," +
                        format_g17(hs[i]) + "," + format_g17(errs[i]) + "," +
                        format_g17(ord));
        }
        summary["mms"]["spatial"] =
            json{{"grids", cfg.spatial_grids},
                 {"errors", errs},
                 {"orders", fit.orders},
                 {"order_fit", fit.fit}};
    }

    // temporal refinement against a time-refined run on the same spatial
    // grid (identical face layout, so the difference is exactly the time
    // discretization error)
    {
        const Grid gr = build_grid(cfg.mms_grid, cfg.mms_grid, cfg.mms_ref_nt,
                                   cfg.T, ro, ro0);
        const Vec ref = mms_final_state(gr);
        std::vector<double> dts, errs;
        for (int nt : cfg.temporal_nts) {
            const Grid gt =
                build_grid(cfg.mms_grid, cfg.mms_grid, nt, cfg.T, ro, ro0);
            const Vec last = mms_final_state(gt);
            errs.push_back(norm_l2(gt, last - ref));
            dts.push_back(gt.dt);
        }
        const OrderFit fit = order_fit(dts, errs);
        CsvWriter csv(out / "temporal.csv", {"nt", "dt", "error", "order"});
        for (std::size_t i = 0; i < dts.size(); ++i) {
            const double ord = i == 0
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : fit.orders[i - 1];
            csv.raw_row(std::to_string(cfg.temporal_nts[i]) + "," +
                        format_g17(dts[i]) + "," + format_g17(errs[i]) + "," +
                        format_g17(ord));
        }
        summary["mms"]["temporal"] =
            json{{"nts", cfg.temporal_nts},
                 {"errors", errs},
                 {"orders", fit.orders},
                 {"order_fit", fit.fit}};
    }

    if (cfg.dump_weights) {
        const WeightContext c = make_weight_context(cfg);
        maybe_dump_weights(cfg, c, out);
        summary["weights"] = weights_summary(cfg, c);
    }
    return code;
}

int run_hum(const ExperimentConfig& cfg, const fs::path& out, json& summary,
            int parallel) {
    const WeightContext c = make_weight_context(cfg);
    summary["weights"] = weights_summary(cfg, c);
    maybe_dump_weights(cfg, c, out);

    Rng rng(cfg.seed);
    const Vec y0 = random_stream_velocity(c.g, rng);
    const std::vector<double> eps_points =
        cfg.eps_list.empty() ? std::vector<double>{cfg.eps} : cfg.eps_list;
    const int n = static_cast<int>(eps_points.size());
    std::vector<RunResult> results(n);

    const auto solve_point = [&](const StokesOperator& op, int i) {
        HumOptions opt;
        opt.control_index = cfg.control_index;
        opt.eps = eps_points[i];
        opt.cg_tol = cfg.cg_tol;
        opt.cg_max_iter = cfg.cg_max_iter;
        results[i] = solve_penalized_hum(op, c.w, y0, {}, opt);
    };

    // Sweep points are independent; each worker owns its factorization of
    // the one shared step matrix, so the results are identical for any
    // worker count and the outputs are written in sweep order afterwards.
    const int workers = std::max(1, std::min(parallel, n));
    if (workers == 1) {
        const StokesOperator op(c.g, c.g.dt);
        for (int i = 0; i < n; ++i) solve_point(op, i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&]() {
                const StokesOperator op(c.g, c.g.dt);
                for (int i = next++; i < n; i = next++) solve_point(op, i);
            });
        for (std::thread& th : pool) th.join();
    }

    CsvWriter table(out / "hum_metrics.csv",
                    {"eps", "terminal_norm", "optimality_residual", "rhs_norm",
                     "cg_iterations", "stagnated", "weighted_state",
                     "weighted_control", "weighted_h2", "weighted_h1_max",
                     "max_divergence"});
    json points = json::array();
    int code = 0;
    for (int i = 0; i < n; ++i) {
        const RunResult& rr = results[i];
        const fs::path dir = out / point_dir_name(i);
        fs::create_directories(dir);

        CsvWriter cg(dir / "cg.csv", {"iteration", "functional", "residual"});
        for (const CgRecord& rec : rr.cg_history)
            cg.row({static_cast<double>(rec.iter), rec.functional,
                    rec.residual});

        CsvWriter traj(dir / "trajectory.csv", {"t", "norm_y", "norm_v"});
        for (int k = 0; k <= c.g.nt; ++k)
            traj.row({c.g.t(k), norm_l2(c.g, rr.state.vel[k]),
                      norm_l2(c.g, rr.control.v[k])});

        dump_trajectory(dir / "state.bin", c.g, rr.state,
                        {0, c.g.nt / 2, c.g.nt});

        const double dv = trajectory_max_div(c.g, rr.state);
        table.row({eps_points[i], rr.terminal_norm, rr.optimality_residual,
                   rr.rhs_norm, static_cast<double>(rr.cg_iterations),
                   rr.stagnated ? 1.0 : 0.0, rr.weighted[0], rr.weighted[1],
                   rr.weighted[2], rr.weighted[3], dv});
        points.push_back(json{{"eps", eps_points[i]},
                              {"terminal_norm", rr.terminal_norm},
                              {"optimality_residual", rr.optimality_residual},
                              {"rhs_norm", rr.rhs_norm},
                              {"cg_iterations", rr.cg_iterations},
                              {"stagnated", rr.stagnated},
                              {"weighted", rr.weighted},
                              {"max_divergence", dv}});
        if (!(dv <= kDivTol)) {
            std::cerr << "invariant violated: relative divergence " << dv
                      << " exceeds " << kDivTol << " at sweep point " << i
                      << "\n";
            code = 2;
        }
    }
    summary["hum"] = json{{"points", points}};
    return code;
}

int run_audit(const ExperimentConfig& cfg, const fs::path& out,
              json& summary) {
    const WeightContext c = make_weight_context(cfg);
    summary["weights"] = weights_summary(cfg, c);
    maybe_dump_weights(cfg, c, out);

    std::vector<double> s_values = cfg.s_list;
    if (s_values.empty())
        s_values = {c.auto_value, 2 * c.auto_value, 4 * c.auto_value};

    const StokesOperator op(c.g, c.g.dt);
    const AuditReport rep =
        audit_sweep(op, c.eta, c.tp, s_values, cfg.lambda, cfg.exp_clamp,
                    cfg.samples, cfg.control_index, cfg.seed);

    CsvWriter csv(out / "audit.csv",
                  {"s", "lambda", "sample_seed", "lhs27", "rhs27", "ratio27",
                   "lhs33", "rhs33", "ratio33", "outlier"});
    for (const AuditRow& r : rep.rows)
        csv.raw_row(format_g17(r.s) + "," + format_g17(r.lambda) + "," +
                    std::to_string(r.seed) + "," + format_g17(r.lhs27) + "," +
                    format_g17(r.rhs27) + "," + format_g17(r.ratio27) + "," +
                    format_g17(r.lhs33) + "," + format_g17(r.rhs33) + "," +
                    format_g17(r.ratio33) + "," + (r.outlier ? "1" : "0"));

    std::ostringstream txt;
    json stats = json::array();
    for (std::size_t i = 0; i < rep.s_values.size(); ++i) {
        txt << "s=" << format_g17(rep.s_values[i])
            << " median27=" << format_g17(rep.median27[i])
            << " max27=" << format_g17(rep.max27[i])
            << " median33=" << format_g17(rep.median33[i])
            << " max33=" << format_g17(rep.max33[i]) << "\n";
        stats.push_back(json{{"s", rep.s_values[i]},
                             {"median27", rep.median27[i]},
                             {"max27", rep.max27[i]},
                             {"median33", rep.median33[i]},
                             {"max33", rep.max33[i]}});
    }
    write_text(out / "summary.txt", txt.str());
    summary["audit"] = json{{"samples", cfg.samples},
                            {"s_values", rep.s_values},
                            {"stats", stats},
                            {"all_finite", rep.all_finite}};
    if (!rep.all_finite) {
        std::cerr << "invariant violated: non-finite observability audit "
                     "terms\n";
        return 2;
    }
    return 0;
}

int run_nonlinear(const ExperimentConfig& cfg, const fs::path& out,
                  json& summary) {
    const WeightContext c = make_weight_context(cfg);
    summary["weights"] = weights_summary(cfg, c);
    maybe_dump_weights(cfg, c, out);

    const StokesOperator op(c.g, c.g.dt);
    Rng rng(cfg.seed);
    const Vec unit = random_stream_velocity(c.g, rng);
    const Vec y0 = cfg.amplitude * unit;

    PicardOptions popt;
    popt.hum.control_index = cfg.control_index;
    popt.hum.eps = cfg.eps;
    popt.hum.cg_tol = cfg.cg_tol;
    popt.hum.cg_max_iter = cfg.cg_max_iter;
    popt.tol = cfg.picard_tol;
    popt.max_iter = cfg.picard_max_iter;

    const NonlinearResult res = solve_nonlinear(op, c.w, y0, popt);

    CsvWriter csv(out / "picard.csv", {"iteration", "residual",
                                       "terminal_norm", "source_norm",
                                       "cg_iterations"});
    for (const PicardIter& it : res.history)
        csv.row({static_cast<double>(it.k), it.residual, it.terminal_norm,
                 it.source_norm, static_cast<double>(it.cg_iterations)});

    int code = 0;
    double div_linear = 0, div_resim = 0;
    if (!res.last.state.vel.empty()) {
        dump_trajectory(out / "state.bin", c.g, res.last.state,
                        {0, c.g.nt / 2, c.g.nt});
        div_linear = trajectory_max_div(c.g, res.last.state);
    }
    if (!res.resim.vel.empty()) {
        dump_trajectory(out / "resim.bin", c.g, res.resim,
                        {0, c.g.nt / 2, c.g.nt});
        div_resim = trajectory_max_div(c.g, res.resim);
    }
    summary["nonlinear"] = json{
        {"amplitude", cfg.amplitude},
        {"converged", res.converged},
        {"diverged", res.diverged},
        {"iterations", res.history.size()},
        {"linear_terminal_norm", res.last.terminal_norm},
        {"resim_terminal_norm", res.resim_terminal},
        {"weighted", res.last.weighted},
        {"max_divergence", std::max(div_linear, div_resim)}};
    if (!res.diverged &&
        (!(div_linear <= kDivTol) || !(div_resim <= kDivTol))) {
        std::cerr << "invariant violated: relative divergence "
                  << std::max(div_linear, div_resim) << " exceeds " << kDivTol
                  << "\n";
        code = 2;
    }
    return code;
}

int run_delta_sweep(const ExperimentConfig& cfg, const fs::path& out,
                    json& summary) {
    const WeightContext c = make_weight_context(cfg);
    summary["weights"] = weights_summary(cfg, c);
    maybe_dump_weights(cfg, c, out);

    const StokesOperator op(c.g, c.g.dt);
    Rng rng(cfg.seed);
    const Vec unit = random_stream_velocity(c.g, rng);

    PicardOptions popt;
    popt.hum.control_index = cfg.control_index;
    popt.hum.eps = cfg.eps;
    popt.hum.cg_tol = cfg.cg_tol;
    popt.hum.cg_max_iter = cfg.cg_max_iter;
    popt.tol = cfg.picard_tol;
    popt.max_iter = cfg.picard_max_iter;

    const ThresholdEstimate est = estimate_delta(op, c.w, unit,
                                                 cfg.amplitudes, popt,
                                                 cfg.bisection_steps);

    CsvWriter csv(out / "sweep.csv",
                  {"amplitude", "converged", "diverged", "iterations",
                   "final_residual", "resim_terminal"});
    for (const SweepRow& r : est.rows)
        csv.row({r.amplitude, r.converged ? 1.0 : 0.0, r.diverged ? 1.0 : 0.0,
                 static_cast<double>(r.iterations), r.final_residual,
                 r.resim_terminal});

    summary["delta_sweep"] = json{{"bracket_lo", est.bracket_lo},
                                  {"bracket_hi", est.bracket_hi},
                                  {"all_converged", est.all_converged},
                                  {"all_diverged", est.all_diverged},
                                  {"monotone", est.monotone},
                                  {"points", est.rows.size()}};
    return 0;
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error(where + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw config_error(where + ": empty key");
        if (val.empty())
            throw config_error(where + ": empty value for key '" + key + "'");
        if (!seen.insert(key).second)
            throw config_error(where + ": duplicate key '" + key + "'");
        cfg.echo.emplace_back(key, val);
        apply_key(cfg, key, val, where);
    }
    return cfg;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    static const std::set<std::string> kinds = {
        "forward-check", "hum", "audit", "nonlinear", "delta-sweep"};
    const bool kind_ok = kinds.count(cfg.kind) > 0;
    if (cfg.kind.empty())
        out.push_back("missing required key: kind");
    else if (!kind_ok)
        out.push_back("unknown kind '" + cfg.kind +
                      "' (expected forward-check, hum, audit, nonlinear or "
                      "delta-sweep)");

    // Every key present in the file must apply to the selected kind.
    if (kind_ok) {
        const std::set<std::string>& extras = extra_keys(cfg.kind);
        for (const auto& [key, val] : cfg.echo)
            if (common_keys().count(key) == 0 && extras.count(key) == 0)
                out.push_back("key '" + key + "' does not apply to kind '" +
                              cfg.kind + "'");
    }

    // grid, regions and the spatial profile (containment, critical point)
    try {
        const Grid g = grid_of(cfg);
        build_eta(g);
    } catch (const config_error& e) {
        out.push_back(e.what());
    }
    try {
        build_time_profile(cfg.nt, cfg.T, cfg.floor_delta);
    } catch (const config_error& e) {
        out.push_back(e.what());
    }

    if (!(cfg.lambda >= 1)) out.push_back("lambda must be >= 1");
    if (cfg.s_mode != "auto" && !(cfg.s_value > 0))
        out.push_back("s must be 'auto' or a positive number");
    if (!(cfg.s_target > 0)) out.push_back("s_target must be positive");
    if (!(cfg.exp_clamp > 0 && cfg.exp_clamp <= 250))
        out.push_back("exp_clamp must lie in (0, 250]");
    if (cfg.control_index != 1 && cfg.control_index != 2)
        out.push_back("component index out of range");
    if (cfg.output.empty()) out.push_back("output must be non-empty");

    const auto check_cg = [&]() {
        if (!(cfg.eps > 0)) out.push_back("eps must be positive");
        if (!(cfg.cg_tol > 0)) out.push_back("cg_tol must be positive");
        if (cfg.cg_max_iter < 1) out.push_back("cg_max_iter must be >= 1");
    };
    const auto check_picard = [&]() {
        if (!(cfg.picard_tol > 0)) out.push_back("picard_tol must be positive");
        if (cfg.picard_max_iter < 1)
            out.push_back("picard_max_iter must be >= 1");
    };

    if (cfg.kind == "hum") {
        check_cg();
        for (double e : cfg.eps_list)
            if (!(e > 0)) out.push_back("eps_list entries must be positive");
    } else if (cfg.kind == "audit") {
        if (cfg.samples < 1) out.push_back("samples must be >= 1");
        for (double s : cfg.s_list)
            if (!(s > 0)) out.push_back("s_list entries must be positive");
    } else if (cfg.kind == "nonlinear") {
        check_cg();
        check_picard();
        if (!(cfg.amplitude > 0)) out.push_back("amplitude must be positive");
    } else if (cfg.kind == "delta-sweep") {
        check_cg();
        check_picard();
        if (cfg.amplitudes.empty()) {
            out.push_back("delta-sweep requires a non-empty amplitudes list");
        } else {
            for (double a : cfg.amplitudes)
                if (!(a > 0))
                    out.push_back("amplitudes entries must be positive");
            for (std::size_t i = 1; i < cfg.amplitudes.size(); ++i)
                if (!(cfg.amplitudes[i] > cfg.amplitudes[i - 1])) {
                    out.push_back("amplitudes must be strictly ascending");
                    break;
                }
        }
        if (cfg.bisection_steps < 0)
            out.push_back("bisection_steps must be >= 0");
    } else if (cfg.kind == "forward-check") {
        if (cfg.spatial_grids.empty())
            out.push_back("spatial_grids must be non-empty");
        for (std::size_t i = 1; i < cfg.spatial_grids.size(); ++i)
            if (cfg.spatial_grids[i] <= cfg.spatial_grids[i - 1]) {
                out.push_back("spatial_grids must be strictly ascending");
                break;
            }
        for (int n : cfg.spatial_grids)
            try {
                build_grid(n, n, 4, cfg.T, RegionSpec::parse(cfg.omega),
                           RegionSpec::parse(cfg.omega0));
            } catch (const config_error& e) {
                out.push_back(std::string("spatial grid ") +
                              std::to_string(n) + ": " + e.what());
            }
        if (cfg.temporal_nts.empty())
            out.push_back("temporal_nts must be non-empty");
        int max_nt = 0;
        for (std::size_t i = 0; i < cfg.temporal_nts.size(); ++i) {
            const int nt = cfg.temporal_nts[i];
            if (nt < 4) out.push_back("temporal_nts entries must be >= 4");
            if (i > 0 && nt <= cfg.temporal_nts[i - 1]) {
                out.push_back("temporal_nts must be strictly ascending");
            }
            max_nt = std::max(max_nt, nt);
        }
        if (cfg.mms_nt < 4) out.push_back("mms_nt must be >= 4");
        if (cfg.mms_grid < 4) out.push_back("mms_grid must be >= 4");
        if (cfg.mms_ref_nt < 4 * max_nt)
            out.push_back("mms_ref_nt must be at least 4x the largest "
                          "temporal_nts entry");
    }
    return out;
}

int run_experiment(const ExperimentConfig& cfg0,
                   const std::optional<std::string>& output_override,
                   const std::optional<std::uint64_t>& seed_override,
                   int parallel) {
    ExperimentConfig cfg = cfg0;
    if (output_override) cfg.output = *output_override;
    if (seed_override) cfg.seed = *seed_override;
    if (parallel < 1) parallel = 1;

    const std::vector<std::string> diags = validate_config(cfg);
    if (!diags.empty()) {
        for (const std::string& d : diags) std::cerr << "config: " << d << "\n";
        return 1;
    }

    const fs::path out(cfg.output);
    fs::create_directories(out);

    {
        std::ostringstream v;
        v << "name " << kToolName << "\n"
          << "version " << kToolVersion << "\n"
          << "eigen " << eigen_version() << "\n"
          << "seed " << cfg.seed << "\n"
          << "kind " << cfg.kind << "\n";
        write_text(out / "version.txt", v.str());
    }
    {
        std::ostringstream e;
        for (const auto& [key, val] : cfg.echo) e << key << " = " << val << "\n";
        if (output_override)
            e << "# override: output = " << *output_override << "\n";
        if (seed_override) e << "# override: seed = " << *seed_override << "\n";
        write_text(out / "config_echo.cfg", e.str());
    }

    json summary;
    summary["name"] = kToolName;
    summary["version"] = kToolVersion;
    summary["kind"] = cfg.kind;
    summary["seed"] = cfg.seed;
    summary["config"] = config_json(cfg);

    int code = 0;
    try {
        if (cfg.kind == "forward-check")
            code = run_forward_check(cfg, out, summary);
        else if (cfg.kind == "hum")
            code = run_hum(cfg, out, summary, parallel);
        else if (cfg.kind == "audit")
            code = run_audit(cfg, out, summary);
        else if (cfg.kind == "nonlinear")
            code = run_nonlinear(cfg, out, summary);
        else
            code = run_delta_sweep(cfg, out, summary);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        summary["error"] = e.what();
        code = 1;
    } catch (const solver_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        summary["error"] = e.what();
        code = 2;
    }

    write_text(out / "summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << out.string() << "\n";
    return code;
}

}  // namespace nsctrl
