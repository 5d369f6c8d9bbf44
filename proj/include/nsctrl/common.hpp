#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace nsctrl {

// Configuration / input problems: bad grid sizes, region containment
// violations, malformed config files.  The CLI maps these to exit code 1.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures at run time (factorization breakdown, non-finite
// residuals where finiteness is required).  CLI exit code 2.
struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic RNG used everywhere randomness is needed.  mt19937_64 with
// an explicit Box-Muller transform; std::normal_distribution is not pinned
// down by the standard, and reproducible streams matter more here than
// sampling speed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in (0,1]; never returns 0 so log() below is safe
    double uniform() {
        const std::uint64_t r = eng_();
        return (static_cast<double>(r >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nsctrl
