#pragma once

// The profile fixed point: operators J, J_app, J_res, Ibar, and the
// contraction iteration Phi_{n+1} = Ibar[Phi_n] in the Z-norm.
//
//   J[h](z) = psi(z) int_z^Zmax xi a(xi) h(xi) / psi(xi) dxi
//           = e^{-S(z)} int_z^Zmax xi a(xi) h(xi) e^{S(xi)} dxi,
// assembled as exp((M - S(z)) + log U(z)) with M = max S and U the suffix
// quadrature of xi a h e^{S - M}.  U is accumulated tail-first, cell by cell,
// so small suffixes are sums of same-sign comparable terms, never differences
// of large prefixes.  Ibar[phi] = eps J[phi*phi] with (eps, teps) re-solved
// from the compatibility conditions at every iterate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lswe/errors.hpp"
#include "lswe/grid.hpp"
#include "lswe/homogeneous.hpp"
#include "lswe/kernels.hpp"
#include "lswe/params.hpp"
#include "lswe/profile.hpp"

namespace lswe {

struct SolverConfig {
    double delta = 0.04;
    NormSpec norm_spec{};
    double z_max = 10.0;
    std::size_t n_base = 400;
    double tol_profile = 1e-8;
    double tol_params = 1e-10;
    std::size_t max_iter = 100;
    // ball radius for membership reporting; any policy with mu = o(1),
    // 1/(delta K_1) = o(mu^2) and ||psihat - Phi_LSW|| = o(mu^2) is admissible
    std::string mu_policy =
        "max(delta^(1/4), 2 (delta K1)^(-1/2), 2 ||psihat-phi_lsw||^(1/2))";
};

struct FixedPointResult {
    Profile profile;
    ParamState params;
    std::size_t iterations = 0;
    std::vector<double> contraction_ratios;
    double final_residual = 0.0;  // ||Phi - Ibar[Phi]||_Z on the truncated domain
    bool in_ball = false;         // ||Phi - psihat restriction|| <= mu^2
    double mu = 0.0;
    double dist_to_center = 0.0;
    double tail_bar = 0.0;  // bound on the omitted J tail, reported separately
};

namespace solver_detail {

inline void validate(const SolverConfig& c) {
    if (!(c.delta > 0.0) || c.delta > 1.0)
        throw std::invalid_argument("SolverConfig: delta must lie in (0, 1]");
    if (!(c.z_max >= 1.0))
        throw std::invalid_argument("SolverConfig: z_max must be >= 1");
    if (!(c.tol_profile > 0.0) || !(c.tol_params > 0.0))
        throw std::invalid_argument("SolverConfig: tolerances must be > 0");
    if (c.max_iter < 1)
        throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    make_norm_spec(c.norm_spec.beta1, c.norm_spec.beta2);
}

}  // namespace solver_detail

inline Profile apply_J(const Profile& h, const ParamState& params,
                       const PsiProfile& psi, GridPtr grid) {
    if (!grid || !same_grid(h.grid, grid) ||
        !same_grid(psi.log_weight.grid, grid))
        throw std::invalid_argument("apply_J: inputs on different grids");
    const ParamState& q = psi.log_weight.params;
    if (q.delta != params.delta || q.eps != params.eps || q.teps != params.teps)
        throw std::invalid_argument("apply_J: params disagree with psi");
    const Grid& g = *grid;
    const std::vector<double>& S = psi.log_weight.s_values;
    const double M = *std::max_element(S.begin(), S.end());

    std::vector<double> t(g.size(), 0.0);
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double z = g.nodes[k];
        t[k] = z * eval_a(z, params.delta) * h.values[k] * std::exp(S[k] - M);
    }
    // suffix quadrature U[k] = int over [z_k, z_max], accumulated tail-first
    std::vector<double> u(g.size(), 0.0);
    double acc = 0.0, comp = 0.0;
    for (std::size_t c = g.cell_count(); c-- > 0;) {
        const auto s = g.stencil[c];
        const auto& w = g.weights[c];
        const double cell = w[0] * t[s] + w[1] * t[s + 1] + w[2] * t[s + 2] +
                            w[3] * t[s + 3];
        const double y = cell - comp;
        const double tt = acc + y;
        comp = (tt - acc) - y;
        acc = tt;
        u[c] = acc;
    }
    Profile out = h;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(u[k] > 0.0)) {
            out.values[k] = 0.0;
            continue;
        }
        const double e = (M - S[k]) + std::log(u[k]);
        if (e > 709.0) throw OverflowError("apply_J: value exceeds double range");
        out.values[k] = std::exp(e);
    }
    return out;
}

// Z-norm bound on the omitted integral over (z_max, inf), scaled by
// exp(log_scale).  Uses |h| <= ||h||_tail e^{-b1 xi} xi^{-b2}, xi a <= C_a and
// S(xi) <= S(Z) + S'(Z)(xi - Z) for xi >= Z (S' is decreasing there):
//   J_err(z) <= e^{S(Z)-S(z)} C_a ||h||_tail Z^{-b2} e^{-b1 Z} / (b1 - S'(Z)).
// Returns inf when b1 <= S'(Z) (no exponential control at this z_max).
inline double j_tail_bound(const Profile& h, const ParamState& params,
                           const PsiProfile& psi, double log_scale) {
    const Grid& g = *h.grid;
    const std::vector<double>& S = psi.log_weight.s_values;
    const double b1 = h.norm_spec.beta1, b2 = h.norm_spec.beta2;
    const double h_tail = z_norm(h).tail_part;
    if (h_tail == 0.0) return 0.0;
    const double zm = g.z_max;
    const double sprime =
        eval_a(zm, params.delta) *
        (eval_b(zm, params.delta) - params.eps - params.teps * zm);
    if (!(b1 > sprime)) return std::numeric_limits<double>::infinity();
    double ca = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.nodes[k] >= 1.0)
            ca = std::max(ca, g.nodes[k] * eval_a(g.nodes[k], params.delta));
    const double log_c = std::log(ca) + std::log(h_tail) - b2 * std::log(zm) -
                         b1 * zm - std::log(b1 - sprime) + log_scale;
    double e_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        double e = S[g.size() - 1] - S[k] + log_c;
        if (g.nodes[k] >= 1.0)
            e += b1 * g.nodes[k] + b2 * std::log(g.nodes[k]);
        e_max = std::max(e_max, e);
    }
    if (e_max > 700.0) return std::numeric_limits<double>::infinity();
    return std::exp(e_max);
}

// J_app(z) = chi_[0,1](z) psi(z) int_0^Zmax xi J[h](xi) dxi and the remainder
// J_res = J - J_app; the pair reconstructs J node-wise to rounding.
inline std::pair<Profile, Profile> split_J(const Profile& h,
                                           const ParamState& params,
                                           const PsiProfile& psi,
                                           GridPtr grid) {
    const Profile j = apply_J(h, params, psi, grid);
    const Grid& g = *grid;
    std::vector<double> zj(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        zj[k] = g.nodes[k] * j.values[k];
    const double jint = integrate(g, zj);
    Profile j_app = j, j_res = j;
    for (std::size_t k = 0; k < g.size(); ++k) {
        j_app.values[k] = g.nodes[k] <= 1.0 ? psi.values[k] * jint : 0.0;
        j_res.values[k] = j.values[k] - j_app.values[k];
    }
    return {std::move(j_app), std::move(j_res)};
}

namespace solver_detail {

struct IbarStep {
    Profile out;
    Profile h;
    PsiProfile psi;
    ParamState params;
    ParamSolveResult solve;
};

inline IbarStep ibar_step(const Profile& phi, const SolverConfig& config,
                          const LogWeight& lw0) {
    IbarStep step{.out = phi, .h = convolve(phi, phi), .psi = {}, .params = {},
                  .solve = {}};
    step.solve = solve_params(step.h, config.delta, phi.grid, config.tol_params);
    step.params = make_params(config.delta, step.solve.eps, step.solve.teps);
    step.psi = compute_psi(shifted_log_weight(lw0, step.solve.eps,
                                              step.solve.teps));
    const Profile j = apply_J(step.h, step.params, step.psi, phi.grid);
    for (std::size_t k = 0; k < j.values.size(); ++k)
        step.out.values[k] = step.solve.eps * j.values[k];
    return step;
}

}  // namespace solver_detail

inline std::pair<Profile, ParamState> apply_Ibar(const Profile& phi,
                                                 const SolverConfig& config) {
    solver_detail::validate(config);
    if (!phi.grid || phi.grid->delta != config.delta)
        throw std::invalid_argument("apply_Ibar: profile grid delta mismatch");
    for (double x : phi.values)
        if (x < 0.0) throw std::invalid_argument("apply_Ibar: phi must be >= 0");
    const LogWeight lw0 = build_log_weight(make_params(config.delta), phi.grid);
    auto step = solver_detail::ibar_step(phi, config, lw0);
    return {std::move(step.out), step.params};
}

inline FixedPointResult solve_profile(const SolverConfig& config) {
    solver_detail::validate(config);
    const GridPtr grid = make_grid(config.delta, config.z_max, config.n_base);
    const LogWeight lw0 = build_log_weight(make_params(config.delta), grid);
    const PsiProfile psi0 = compute_psi(lw0);

    // ball center: psihat restricted to [0,1], zero beyond
    Profile center = make_profile(grid, psi0.values, config.norm_spec);
    for (std::size_t k = 0; k < grid->size(); ++k)
        if (grid->nodes[k] > 1.0) center.values[k] = 0.0;

    FixedPointResult res;
    const double log_k1 = log_k(gamma_from_logweight(1, lw0));
    const Profile lsw = sample_profile(grid, phi_lsw, config.norm_spec);
    const double d0 = z_norm(profile_difference(center, lsw)).total();
    res.mu = std::max({std::pow(config.delta, 0.25),
                       2.0 * std::exp(-0.5 * (std::log(config.delta) + log_k1)),
                       2.0 * std::sqrt(d0)});

    Profile phi = center;
    double prev_d = 0.0;
    bool converged = false;
    while (res.iterations < config.max_iter) {
        auto step = solver_detail::ibar_step(phi, config, lw0);
        ++res.iterations;
        const double d = z_norm(profile_difference(step.out, phi)).total();
        if (res.iterations >= 2) {
            res.contraction_ratios.push_back(d / prev_d);
            const auto& r = res.contraction_ratios;
            if (r.size() >= 2 && r[r.size() - 1] > 1.0 && r[r.size() - 2] > 1.0)
                throw NonContraction(
                    "solve_profile: two consecutive expansion steps at delta " +
                    std::to_string(config.delta));
        }
        phi = std::move(step.out);
        prev_d = d;
        if (d <= config.tol_profile) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw MaxIterExceeded("solve_profile: no convergence in " +
                              std::to_string(config.max_iter) + " iterations");

    // one extra application gives the honest fixed-point residual and the
    // parameters attached to the returned profile
    auto last = solver_detail::ibar_step(phi, config, lw0);
    res.final_residual = z_norm(profile_difference(last.out, phi)).total();
    res.tail_bar = j_tail_bound(last.h, last.params, last.psi,
                                std::log(last.solve.eps));
    res.profile = std::move(phi);
    res.params = last.params;
    res.dist_to_center =
        z_norm(profile_difference(res.profile, center)).total();
    res.in_ball = res.dist_to_center <= res.mu * res.mu;
    return res;
}

}  // namespace lswe
