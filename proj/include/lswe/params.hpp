#pragma once

// The Gamma/G/g functionals and the two-parameter compatibility fixed point
// for (eps, teps).
//
//   Gamma_i(xi) = int_0^xi gamma_i(z) exp(S(xi) - S(z)) dz,  gamma_1(z) = z,
//   gamma_2(z) = 1;  K_i = Gammahat_i(1)  (hat = eps = teps = 0).
//   G_i[h] = int_0^Zmax xi a(xi) h(xi) Gamma_i(xi) dxi,  g_i = eps^2 G_i.
//
// The compatibility conditions g_1 = eps, g_2 = teps pin the parameters for a
// given candidate h.  log K_i grows like kappa/sqrt(delta), so eps reaches
// exp(-kappa/sqrt(delta)): everything is assembled from log-space pieces and
// the linear-space values stay representable for delta >= 1e-4.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "lswe/errors.hpp"
#include "lswe/grid.hpp"
#include "lswe/homogeneous.hpp"
#include "lswe/kernels.hpp"
#include "lswe/profile.hpp"

namespace lswe {

struct GammaTable {
    GridPtr grid;
    int index = 1;  // i in {1, 2}
    bool hats = false;
    ParamState params;
    std::vector<double> log_values;  // log Gamma_i at nodes; -inf at z = 0
};

// Gamma_i at every node from the cumulative exponent: with m = min S,
// Gamma_i(z_k) = exp(S_k - m) * prefix_k[gamma_i exp(-(S - m))].  Every factor
// of the prefix integrand lies in (0, 1] times gamma_i, so the quadrature
// never overflows and log() recovers the wide range exactly.
inline GammaTable gamma_from_logweight(int i, const LogWeight& lw) {
    if (i != 1 && i != 2)
        throw std::invalid_argument("gamma_from_logweight: index must be 1 or 2");
    const Grid& g = *lw.grid;
    const double m =
        *std::min_element(lw.s_values.begin(), lw.s_values.end());
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double gam = i == 1 ? g.nodes[k] : 1.0;
        v[k] = gam * std::exp(-(lw.s_values[k] - m));
    }
    std::vector<double> prefix = integral_prefix(g, v);
    // The first cube cell's stencil excludes node 0, and that extrapolatory
    // rule can return a (tiny) negative integral for gamma_1 ~ u^5 in the
    // panel parameter.  The Gamma integrand times the Jacobian 3 zb u^2
    // vanishes exactly at u = 0, so re-anchor the cell there with the closed
    // end rule and shift the whole prefix; the shift is O(z_1^2), harmless
    // everywhere except inside log().
    if (!g.panels.empty() && g.panels[0].map == GridPanel::Map::cube) {
        const GridPanel& p = g.panels[0];
        const double hu = 1.0 / static_cast<double>(p.cells);
        double gu[4] = {0.0, 0.0, 0.0, 0.0};
        for (int k = 1; k < 4; ++k) {
            const double u = static_cast<double>(k) * hu;
            gu[k] = v[static_cast<std::size_t>(k)] * 3.0 * p.zb * u * u;
        }
        const double cell0 =
            hu * (19.0 * gu[1] - 5.0 * gu[2] + gu[3]) / 24.0;
        const double shift = cell0 - prefix[1];
        for (std::size_t k = 1; k < g.size(); ++k) prefix[k] += shift;
    }
    GammaTable t;
    t.grid = lw.grid;
    t.index = i;
    t.hats = lw.params.hats();
    t.params = lw.params;
    t.log_values.resize(g.size());
    t.log_values[0] = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < g.size(); ++k)
        t.log_values[k] = lw.s_values[k] - m + std::log(prefix[k]);
    return t;
}

inline GammaTable compute_gamma(int i, const ParamState& params, GridPtr grid,
                                const PsiProfile& psi) {
    const ParamState& q = psi.log_weight.params;
    if (q.delta != params.delta || q.eps != params.eps || q.teps != params.teps)
        throw std::invalid_argument("compute_gamma: params disagree with psi");
    if (grid && grid != psi.log_weight.grid &&
        grid->nodes != psi.log_weight.grid->nodes)
        throw std::invalid_argument("compute_gamma: grid disagrees with psi");
    return gamma_from_logweight(i, psi.log_weight);
}

// log K_i = log Gammahat_i(1); defined for the hat table only
inline double log_k(const GammaTable& t) {
    if (!t.hats)
        throw std::invalid_argument("log_k: K_i is defined from the hat table");
    return t.log_values[t.grid->index_of(1.0)];
}

// G_i split by region, plus a bound on the omitted (Z_max, inf) piece.  The
// bound uses Gamma_i(xi) <= (Gamma_i(Z)/Z^4) xi^4 (valid beyond Z where Gamma
// grows subquadratically) and |h(xi)| <= ||h||_tail e^(-b1 xi) xi^(-b2).
struct GParts {
    double part_core = 0.0;  // int over [0, 1]
    double part_far = 0.0;   // int over [1, Z_max]
    double tail_bar = 0.0;   // error bar, never added into the value
    double total() const { return part_core + part_far; }
};

inline GParts compute_G_parts(const Profile& h, const GammaTable& gamma) {
    const Grid& g = *gamma.grid;
    if (!same_grid(h.grid, gamma.grid))
        throw std::invalid_argument("compute_G_parts: h grid mismatch");
    const double delta = gamma.params.delta;
    std::vector<double> v(g.size(), 0.0);
    double ca = 0.0;  // sup of xi a(xi) on [1, Z_max]
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double z = g.nodes[k];
        const double za = z * eval_a(z, delta);
        if (z >= 1.0) ca = std::max(ca, za);
        v[k] = za * h.values[k] * std::exp(gamma.log_values[k]);
    }
    const std::vector<double> prefix = integral_prefix(g, v);
    const std::size_t i_one = g.index_of(1.0);
    GParts parts;
    parts.part_core = prefix[i_one];
    parts.part_far = prefix[g.size() - 1] - prefix[i_one];

    const double zm = g.z_max;
    const double b1 = h.norm_spec.beta1, b2 = h.norm_spec.beta2;
    const double h_tail = z_norm(h).tail_part;
    const double log_cg = gamma.log_values[g.size() - 1] - 4.0 * std::log(zm);
    const double p = 4.0 - b2;
    // int_Z^inf xi^p e^(-b1 xi) dxi
    const double tail_int =
        p + 1.0 > 0.0
            ? boost::math::tgamma(p + 1.0, b1 * zm) / std::pow(b1, p + 1.0)
            : std::pow(zm, p) * std::exp(-b1 * zm) / b1;
    parts.tail_bar = ca * std::exp(log_cg) * h_tail * tail_int;
    return parts;
}

inline double compute_G(int i, const Profile& h, const ParamState& params,
                        const GammaTable& gamma, GridPtr grid) {
    if (gamma.index != i)
        throw std::invalid_argument("compute_G: gamma table is for the other index");
    const ParamState& q = gamma.params;
    if (q.delta != params.delta || q.eps != params.eps || q.teps != params.teps)
        throw std::invalid_argument("compute_G: params disagree with gamma");
    if (grid && grid != gamma.grid && grid->nodes != gamma.grid->nodes)
        throw std::invalid_argument("compute_G: grid disagrees with gamma");
    for (double x : h.values)
        if (x < 0.0) throw std::invalid_argument("compute_G: h must be >= 0");
    return compute_G_parts(h, gamma).total();
}

struct ParamSolveResult {
    double eps = 0.0;
    double teps = 0.0;
    double eps_app = 0.0;   // 1 / Ghat_1[h]
    double teps_app = 0.0;  // eps_app * Ghat_2 / Ghat_1
    double band_alpha = 2.0;
    std::size_t iterations = 0;  // outer fixed-point steps
    std::pair<double, double> residuals{0.0, 0.0};
};

namespace params_detail {

// tail bars above this fraction of G mean the truncated domain no longer
// determines the parameters; the bar itself is reported, not silently eaten
inline constexpr double kTailBarFraction = 0.1;

inline void check_tail(const GParts& p) {
    if (!(p.tail_bar <= kTailBarFraction * p.total()))
        throw TailDominance(
            "G tail bound exceeds 10% of the computed functional; increase "
            "z_max or weaken the tail norm");
}

}  // namespace params_detail

// Nested solve for the compatibility conditions g_1 = eps, g_2 = teps.
// Inner: monotone 1-D root of eps G_1 - 1 at fixed teps, bisection on
// [eps_app/2, 2 eps_app] to 1e-12 relative plus one secant polish.  Outer:
// damped fixed point teps <- g_2(eps(teps), teps).  teps_start overrides the
// outer starting point (0 = use teps_app); the solution must not depend on it.
inline ParamSolveResult solve_params(const Profile& h, double delta,
                                     GridPtr grid, double tol,
                                     double teps_start = 0.0) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_params: tol must be > 0");
    if (!grid) throw std::invalid_argument("solve_params: null grid");
    if (!same_grid(h.grid, grid))
        throw std::invalid_argument("solve_params: h grid mismatch");
    for (double x : h.values)
        if (x < 0.0) throw std::invalid_argument("solve_params: h must be >= 0");

    const LogWeight lw0 = build_log_weight(make_params(delta), grid);
    const auto parts = [&](int i, double eps, double teps) {
        const LogWeight lw = eps == 0.0 && teps == 0.0
                                 ? lw0
                                 : shifted_log_weight(lw0, eps, teps);
        return compute_G_parts(h, gamma_from_logweight(i, lw));
    };

    const GParts ghat1 = parts(1, 0.0, 0.0);
    const GParts ghat2 = parts(2, 0.0, 0.0);
    params_detail::check_tail(ghat1);
    params_detail::check_tail(ghat2);

    ParamSolveResult r;
    r.eps_app = 1.0 / ghat1.total();
    r.teps_app = r.eps_app * ghat2.total() / ghat1.total();
    const double lo = r.eps_app / r.band_alpha;
    const double hi = r.band_alpha * r.eps_app;

    // eps G_1 - 1 is increasing in eps on the bracket
    const auto inner = [&](double teps) {
        double a = lo, b = hi;
        double fa = a * parts(1, a, teps).total() - 1.0;
        double fb = b * parts(1, b, teps).total() - 1.0;
        if (!(fa < 0.0 && fb > 0.0))
            throw BracketFailure(
                "eps G_1 - 1 does not change sign on [eps_app/2, 2 eps_app]; "
                "delta is outside the contractive regime");
        while (b - a > 1e-12 * a) {
            const double mid = 0.5 * (a + b);
            const double fm = mid * parts(1, mid, teps).total() - 1.0;
            (fm < 0.0 ? a : b) = mid;
            (fm < 0.0 ? fa : fb) = fm;
        }
        return b - fb * (b - a) / (fb - fa);  // secant polish
    };

    double teps = teps_start > 0.0 ? teps_start : r.teps_app;
    double eps = r.eps_app;
    double prev_update = 0.0, prev_mag = 0.0;
    double damp = 1.0;
    std::size_t grew = 0;
    const std::size_t cap = 100;
    for (r.iterations = 1; r.iterations <= cap; ++r.iterations) {
        eps = inner(teps);
        const GParts p2 = parts(2, eps, teps);
        params_detail::check_tail(p2);
        const double g2 = eps * eps * p2.total();
        const double update = g2 - teps;
        const double mag = std::abs(update);
        if (prev_mag > 0.0 && mag > prev_mag) {
            if (++grew >= 2)
                throw NonContraction("solve_params: outer iterates diverge");
        } else {
            grew = 0;
        }
        if (update * prev_update < 0.0) damp = 0.5;  // oscillation
        prev_update = update;
        prev_mag = mag;
        teps += damp * update;
        if (mag <= tol * teps) break;
    }
    if (r.iterations > cap)
        throw NonContraction("solve_params: no outer convergence in 100 steps");

    eps = inner(teps);
    const GParts p1 = parts(1, eps, teps);
    const GParts p2 = parts(2, eps, teps);
    params_detail::check_tail(p1);
    params_detail::check_tail(p2);
    r.eps = eps;
    r.teps = teps;
    r.residuals.first = std::abs(eps * p1.total() - 1.0);
    r.residuals.second = std::abs(eps * eps * p2.total() - teps) / teps;
    if (!(r.residuals.first <= tol) || !(r.residuals.second <= tol))
        throw NonContraction("solve_params: residuals above tolerance at exit");
    return r;
}

// Finite-difference log-sensitivities of g_i:
//   {eps dg_1/deps, teps dg_1/dteps, eps dg_2/deps, teps dg_2/dteps}
struct SensitivityMatrix {
    double eps_dg1_deps = 0.0;
    double teps_dg1_dteps = 0.0;
    double eps_dg2_deps = 0.0;
    double teps_dg2_dteps = 0.0;
};

inline SensitivityMatrix param_sensitivity(const Profile& h,
                                           const ParamState& params,
                                           GridPtr grid) {
    if (!grid || !same_grid(h.grid, grid))
        throw std::invalid_argument("param_sensitivity: h grid mismatch");
    const LogWeight lw0 = build_log_weight(make_params(params.delta), grid);
    const auto g_val = [&](int i, double eps, double teps) {
        const LogWeight lw = shifted_log_weight(lw0, eps, teps);
        return eps * eps * compute_G_parts(h, gamma_from_logweight(i, lw)).total();
    };
    // central differences in relative step eta give eps dg/deps directly;
    // halving eta must reproduce the estimate (Richardson consistency)
    const auto scaled_diff = [&](int i, bool in_eps, double eta) {
        const double e = params.eps, t = params.teps;
        const double up = in_eps ? g_val(i, e * (1.0 + eta), t)
                                 : g_val(i, e, t * (1.0 + eta));
        const double dn = in_eps ? g_val(i, e * (1.0 - eta), t)
                                 : g_val(i, e, t * (1.0 - eta));
        return (up - dn) / (2.0 * eta);
    };
    const auto estimate = [&](int i, bool in_eps) {
        const double scale = std::abs(g_val(i, params.eps, params.teps));
        const double c1 = scaled_diff(i, in_eps, 1e-3);
        const double c2 = scaled_diff(i, in_eps, 5e-4);
        if (std::abs(c2 - c1) > 0.05 * std::abs(c2) + 1e-3 * scale)
            throw StepBreakdown(
                "param_sensitivity: finite differences fail Richardson "
                "consistency");
        return (4.0 * c2 - c1) / 3.0;
    };
    SensitivityMatrix m;
    m.eps_dg1_deps = estimate(1, true);
    m.teps_dg1_dteps = estimate(1, false);
    m.eps_dg2_deps = estimate(2, true);
    m.teps_dg2_dteps = estimate(2, false);
    return m;
}

}  // namespace lswe
