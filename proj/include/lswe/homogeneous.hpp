#pragma once

// The homogeneous solution psi(z) = N exp(-S(z)) of the linear part, with
// int_0^1 z psi dz = 1.  All arithmetic stays in log space until the final
// exponential: S spans hundreds at small delta (the layer barrier is
// kappa/sqrt(delta)), so ratios are formed by subtracting exponents, never by
// dividing values.  Off-node S is monotone-faithful piecewise-cubic (pchip)
// in z; linear interpolation of S is visibly too crude for the ratio
// tolerances at production grid resolution.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

// Boost 1.74 pchip calls unqualified isnan; double has no ADL namespace, so
// make std::isnan visible at the template's definition context.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "lswe/errors.hpp"
#include "lswe/grid.hpp"
#include "lswe/kernels.hpp"

namespace lswe {

namespace homogeneous_detail {
using SInterp = boost::math::interpolators::pchip<std::vector<double>>;
}

struct PsiProfile {
    LogWeight log_weight;
    double log_norm = 0.0;          // log N; psi = exp(log_norm - S)
    std::vector<double> values;     // psi at the grid nodes
    std::shared_ptr<const homogeneous_detail::SInterp> s_interp;  // S off-node
};

inline PsiProfile compute_psi(LogWeight lw) {
    const Grid& g = *lw.grid;
    PsiProfile psi;
    // min of S over [0, 1] shifts the normalization quadrature so its largest
    // sample is exp(0) = 1; Q then cannot overflow and cannot vanish
    const std::size_t i_one = g.index_of(1.0);
    double m = 0.0;
    for (std::size_t i = 0; i <= i_one; ++i)
        m = std::min(m, lw.s_values[i]);
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i <= i_one; ++i)
        v[i] = g.nodes[i] * std::exp(-(lw.s_values[i] - m));
    const double q = integrate(g, v, 0.0, 1.0);
    if (!(q > 0.0)) throw OverflowError("compute_psi: normalization underflow");
    psi.log_norm = m - std::log(q);
    psi.values.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        psi.values[i] = std::exp(psi.log_norm - lw.s_values[i]);
    psi.s_interp = std::make_shared<const homogeneous_detail::SInterp>(
        std::vector<double>(g.nodes), std::vector<double>(lw.s_values));
    psi.log_weight = std::move(lw);
    return psi;
}

inline PsiProfile compute_psi(const ParamState& params, GridPtr grid) {
    return compute_psi(build_log_weight(params, std::move(grid)));
}

// S at arbitrary z in [0, z_max]; exact at the nodes
inline double s_at(const PsiProfile& psi, double z) {
    const Grid& g = *psi.log_weight.grid;
    if (!(z >= 0.0) || z > g.z_max)
        throw std::invalid_argument("s_at: z outside [0, z_max]");
    return (*psi.s_interp)(z);
}

inline double psi_value(const PsiProfile& psi, double z) {
    return std::exp(psi.log_norm - s_at(psi, z));
}

// psi(z) / psi(xi) = exp(S(xi) - S(z)); throws OverflowError rather than
// returning inf when the exponent exceeds double range
inline double psi_ratio(double z, double xi, const PsiProfile& psi) {
    const double d = s_at(psi, xi) - s_at(psi, z);
    if (d > 709.0) throw OverflowError("psi_ratio: ratio exceeds double range");
    return std::exp(d);
}

}  // namespace lswe
