#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsctrl/grid.hpp"

namespace nsctrl {

// Flat key = value experiment description.  Unknown keys and keys that do
// not apply to the selected kind are hard errors; see README for the schema.
struct ExperimentConfig {
    std::string kind;  // forward-check | hum | audit | nonlinear | delta-sweep

    int nx = 32, ny = 32, nt = 64;
    double T = 1.0;
    std::string omega = "rect 0.3 0.3 0.7 0.7";
    std::string omega0 = "disc 0.5 0.5 0.12";

    double lambda = 1.0;
    std::string s_mode = "auto";  // "auto" or a positive number
    double s_value = 0;           // used when s_mode is numeric
    double s_target = 40.0;       // auto target exponent
    double exp_clamp = 60.0;
    double floor_delta = 1e-2;

    std::uint64_t seed = 1;
    int control_index = 2;

    double eps = 1e-4;
    std::vector<double> eps_list;  // hum sweep; defaults to {eps}
    double cg_tol = 1e-10;
    int cg_max_iter = 400;

    double picard_tol = 1e-10;
    int picard_max_iter = 12;
    double amplitude = 1e-2;
    std::vector<double> amplitudes;  // delta-sweep
    int bisection_steps = 3;

    int samples = 50;                 // audit
    std::vector<double> s_list;       // audit; empty = auto*{1,2,4}

    std::vector<int> spatial_grids{16, 32, 64};  // forward-check
    std::vector<int> temporal_nts{32, 64, 128};
    int mms_nt = 128;    // time mesh on the first spatial grid (scaled ~n^2)
    int mms_grid = 32;   // space mesh for the temporal study
    int mms_ref_nt = 2048;  // time-refined reference for the temporal study

    bool dump_weights = false;
    std::string output = "runs/out";

    std::vector<std::pair<std::string, std::string>> echo;  // parsed lines
};

ExperimentConfig parse_config(const std::string& path);

// Returns diagnostics (empty = valid).  Checks ranges, region containment,
// and kind applicability of every key actually present.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// Runs the experiment, writing metric CSVs, field dumps, a config echo and
// summary.json into the output directory.  Returns the process exit code
// (0 on success, nonzero with a diagnostic on stderr on any failed
// invariant).  `parallel` bounds the number of concurrently processed
// independent sweep points; outputs are indexed by sweep position, so the
// results do not depend on scheduling.
int run_experiment(const ExperimentConfig& cfg,
                   const std::optional<std::string>& output_override,
                   const std::optional<std::uint64_t>& seed_override,
                   int parallel = 1);

}  // namespace nsctrl
