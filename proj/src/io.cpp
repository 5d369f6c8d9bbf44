#include "nsctrl/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>

namespace nsctrl {

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void put_block(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p),
              static_cast<std::streamsize>(n * sizeof(double)));
}

void get_block(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p),
            static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) throw config_error("cannot open output file " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format_g17(values[i]);
    }
    out_ << '\n';
}

void CsvWriter::raw_row(const std::string& line) { out_ << line << '\n'; }

void dump_trajectory(const std::filesystem::path& path, const Grid& g,
                     const StateTrajectory& tr,
                     const std::vector<int>& levels) {
    const bool has_pre = !tr.pre.empty();
    for (int lv : levels)
        if (lv < 0 || lv > tr.nt())
            throw config_error("trajectory dump: level " + std::to_string(lv) +
                               " out of range");
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open output file " + path.string());

    out.write("NSTJ", 4);
    put<std::uint32_t>(out, 1);
    put<std::int32_t>(out, g.nx);
    put<std::int32_t>(out, g.ny);
    put<std::int32_t>(out, static_cast<std::int32_t>(levels.size()));
    put<double>(out, g.T);
    put<std::uint8_t>(out, has_pre ? 1 : 0);
    for (int lv : levels) {
        // the flat face vector is already the u block followed by the v block
        put_block(out, tr.vel[lv].data(), static_cast<std::size_t>(g.nfaces()));
        if (has_pre)
            put_block(out, tr.pre[lv].data(),
                      static_cast<std::size_t>(g.ncells()));
    }
    if (!out) throw config_error("short write to " + path.string());
}

TrajectoryDump read_trajectory_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open trajectory file " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NSTJ", 4) != 0)
        throw config_error(path.string() + " is not a trajectory dump");
    std::uint32_t version = 0;
    get(in, version);
    if (version != 1)
        throw config_error("unsupported trajectory dump version " +
                           std::to_string(version));
    TrajectoryDump d;
    std::int32_t nx = 0, ny = 0, nsteps = 0;
    get(in, nx);
    get(in, ny);
    get(in, nsteps);
    get(in, d.T);
    std::uint8_t hp = 0;
    get(in, hp);
    if (!in || nx <= 0 || ny <= 0 || nsteps < 0)
        throw config_error("corrupt trajectory header in " + path.string());
    d.nx = nx;
    d.ny = ny;
    d.nsteps = nsteps;
    d.has_pressure = hp != 0;
    const std::size_t nfaces =
        static_cast<std::size_t>(nx + 1) * ny + static_cast<std::size_t>(nx) * (ny + 1);
    const std::size_t ncells = static_cast<std::size_t>(nx) * ny;
    d.vel.resize(nsteps);
    if (d.has_pressure) d.pre.resize(nsteps);
    for (int k = 0; k < nsteps; ++k) {
        d.vel[k].resize(static_cast<Eigen::Index>(nfaces));
        get_block(in, d.vel[k].data(), nfaces);
        if (d.has_pressure) {
            d.pre[k].resize(static_cast<Eigen::Index>(ncells));
            get_block(in, d.pre[k].data(), ncells);
        }
    }
    if (!in) throw config_error("truncated trajectory dump " + path.string());
    return d;
}

void dump_weights(const std::filesystem::path& path, const WeightSet& w) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open output file " + path.string());
    out.write("NSWT", 4);
    put<std::uint32_t>(out, 1);
    put<std::int32_t>(out, w.nx + 1);
    put<std::int32_t>(out, w.ny + 1);
    put<std::int32_t>(out, w.nt + 1);
    put<double>(out, w.T);
    const std::size_t n = static_cast<std::size_t>(w.log_alpha.size());
    put_block(out, w.log_alpha.data(), n);
    put_block(out, w.log_xi.data(), n);
    put_block(out, w.log_beta.data(), n);
    put_block(out, w.log_gamma.data(), n);
    if (!out) throw config_error("short write to " + path.string());
}

void export_weights_csv(const std::filesystem::path& path, const Grid& g,
                        const WeightSet& w) {
    if (g.nx != w.nx || g.ny != w.ny || g.nt != w.nt)
        throw config_error("weight export: grid and weight shapes differ");
    CsvWriter csv(path,
                  {"x", "y", "t", "log_alpha", "log_xi", "log_beta",
                   "log_gamma"});
    const int nn = w.nnodes();
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) {
                const int idx = g.inode(i, j) + k * nn;
                csv.row({g.xn(i), g.yn(j), g.t(k), w.log_alpha[idx],
                         w.log_xi[idx], w.log_beta[idx], w.log_gamma[idx]});
            }
}

}  // namespace nsctrl
