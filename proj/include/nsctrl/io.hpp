#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nsctrl/fields.hpp"
#include "nsctrl/weights.hpp"

namespace nsctrl {

// Minimal CSV writer with fixed %.17g formatting so repeated runs are
// byte-identical.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path,
              const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);

  private:
    std::ofstream out_;
};

std::string format_g17(double v);

// Binary trajectory dump.  Layout (little-endian, no padding):
//   char magic[4] = "NSTJ", u32 version = 1,
//   i32 nx, ny, nsteps; f64 T; u8 has_pressure;
//   then per level: u block ((nx+1)*ny), v block (nx*(ny+1)),
//   and if has_pressure the cell block (nx*ny), all f64 row-major.
void dump_trajectory(const std::filesystem::path& path, const Grid& g,
                     const StateTrajectory& tr,
                     const std::vector<int>& levels);

// Binary weight dump: char magic[4] = "NSWT", u32 version = 1,
// i32 nnx, nny, nnt (node/level counts); f64 T; then the four node x time
// arrays log_alpha, log_xi, log_beta, log_gamma.
void dump_weights(const std::filesystem::path& path, const WeightSet& w);

// CSV export of the weight fields: x,y,t,log_alpha,log_xi,log_beta,log_gamma.
void export_weights_csv(const std::filesystem::path& path, const Grid& g,
                        const WeightSet& w);

// Readers used by round-trip tests.
struct TrajectoryDump {
    int nx = 0, ny = 0, nsteps = 0;
    double T = 0;
    bool has_pressure = false;
    std::vector<Vec> vel, pre;
};
TrajectoryDump read_trajectory_dump(const std::filesystem::path& path);

}  // namespace nsctrl
