#pragma once

#include <cstdint>

#include "nsctrl/stokes.hpp"
#include "nsctrl/weights.hpp"

namespace nsctrl {

// One audit sample: a smooth random backward source g (unit L2(Q) norm) and
// a random divergence-free terminal datum phiT (unit L2 norm), plus the
// backward solution they generate.  The solution does not depend on the
// weight parameters, so one sample is reused across an s sweep.
struct CarlemanSample {
    std::uint64_t seed = 0;
    std::vector<Vec> g;  // levels 0..nt (backward steps consume 1..nt)
    Vec phiT;
    StateTrajectory phi;
};

CarlemanSample sample_adjoint_data(const StokesOperator& op,
                                   std::uint64_t seed);

// Observability-inequality audits.  Both sides are evaluated with midpoint
// quadrature in space and trapezoid in time.
//
// ratio27 uses the weight family that vanishes at both time endpoints
// (alpha/xi); its endpoint quadrature weights are zeroed:
//   lhs = s^4 Int e^{-5 s a*} (xi*)^4 |phi|^2
//   rhs = Int e^{-3 s a*} |g|^2
//       + s^7 sum_{j != i} Int_omega e^{-2 s a^ - 3 s a*} (xi^)^7 |phi_j|^2
//
// ratio33 uses the family that stays bounded near t = 0 (beta/gamma), keeps
// the trapezoid endpoints (evaluated with floored profiles), adds the
// unweighted |phi(0)|^2 to the left side and carries no explicit s powers:
//   lhs = Int e^{-5 s b*} (g*)^4 |phi|^2 + |phi(0)|^2
//   rhs = Int e^{-3 s b*} |g|^2
//       + sum_{j != i} Int_omega e^{-2 s b^ - 3 s b*} (g^)^7 |phi_j|^2
struct AuditTerms {
    double lhs = 0, rhs = 0, ratio = 0;
};

AuditTerms carleman_ratio_27(const Grid& g, const WeightSet& w,
                             const CarlemanSample& sample, int control_index);
AuditTerms carleman_ratio_33(const Grid& g, const WeightSet& w,
                             const CarlemanSample& sample, int control_index);

struct AuditRow {
    double s = 0, lambda = 0;
    std::uint64_t seed = 0;
    double lhs27 = 0, rhs27 = 0, ratio27 = 0;
    double lhs33 = 0, rhs33 = 0, ratio33 = 0;
    bool outlier = false;  // ratio beyond 10x the median of its s group
};

struct AuditReport {
    std::vector<AuditRow> rows;
    std::vector<double> s_values;
    std::vector<double> median27, max27, median33, max33;  // per s value
    bool all_finite = true;
};

AuditReport audit_sweep(const StokesOperator& op, const EtaField& eta,
                        const TimeProfile& tp, const std::vector<double>& s_values,
                        double lambda, double exp_clamp, int n_samples,
                        int control_index, std::uint64_t seed_base);

}  // namespace nsctrl
