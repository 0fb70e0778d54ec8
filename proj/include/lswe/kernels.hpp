#pragma once

// Closed-form ingredients: the coefficients a_delta, b_delta, the LSW profile,
// the cumulative exponent S of the homogeneous weight, and the leading-order
// functionals rho_delta, R_delta, R_0.
//
// Everything routes through the substitution s = z^(1/3).  The denominator
//   D(z) = 1 + z - lambda z^(1/3),  lambda = lambda_lsw - delta,
// becomes P(s) = s^3 - lambda s + 1, which at delta = 0 factors exactly as
// (s - a_s)^2 (s + b_s) with a_s = 2^(-1/3), b_s = 2^(2/3) = 2 a_s.  Working
// with the factored form keeps every cancellation at the layer z = 1/2 exact.
// For delta > 0, P has a single real root r in (-b_s, 0) and antiderivatives
// of 1/P, s/P, 3s^2/P are elementary; they give closed forms for
// int a dy, int y a dy and int a b dy (via b = D' + 1), used by rho_delta in
// production and as oracles for the grid-quadrature S elsewhere.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "lswe/errors.hpp"
#include "lswe/grid.hpp"
#include "lswe/profile.hpp"

namespace lswe {

inline double lambda_lsw() { return 3.0 * std::cbrt(0.25); }

// kappa = sqrt(3) pi / 2^(1/3): the layer constant in sqrt(delta) int_0^1 a_delta
inline double kappa() {
    return std::numbers::sqrt3 * std::numbers::pi / std::cbrt(2.0);
}

// kappa^2 = 3 pi^2 / 2^(2/3): the limit of delta (log eps)^2
inline double kappa_sq() {
    return 3.0 * std::numbers::pi * std::numbers::pi / std::cbrt(4.0);
}

struct ParamState {
    double delta = 0.0;
    double lambda = 0.0;  // lambda_lsw() - delta
    double eps = 0.0;
    double teps = 0.0;
    double m0 = 0.0;  // teps / eps when eps > 0
    bool hats() const { return eps == 0.0 && teps == 0.0; }
};

inline ParamState make_params(double delta, double eps = 0.0, double teps = 0.0) {
    if (!(delta > 0.0) || delta > 1.0)
        throw std::invalid_argument("make_params: delta must lie in (0, 1]");
    if (!(eps >= 0.0) || !(teps >= 0.0))
        throw std::invalid_argument("make_params: eps, teps must be >= 0");
    ParamState p;
    p.delta = delta;
    p.lambda = lambda_lsw() - delta;
    p.eps = eps;
    p.teps = teps;
    p.m0 = eps > 0.0 ? teps / eps : 0.0;
    return p;
}

namespace kernel_detail {

// D(z) = 1 + z - lambda_lsw z^(1/3) + delta z^(1/3) in the exactly factored
// form; at z = 1/2 the double-root factor is a computed zero, so
// eval_a(1/2, delta) = 2^(1/3)/delta without cancellation loss.
inline double denom(double z, double delta) {
    const double t = std::cbrt(z);
    const double as = std::cbrt(0.5), bs = std::cbrt(4.0);
    return (t - as) * (t - as) * (t + bs) + delta * t;
}

// P(s) = s^3 - lam s + 1 split into (s - r)(s^2 + r s + gamma), gamma = -1/r
struct CubicFactors {
    double lam;    // lambda_lsw - delta
    double r;      // the real root, in (-b_s, 0)
    double gamma;  // -1/r
    double w;      // sqrt(gamma - r^2/4) > 0, the complex pair's imaginary part
    double dP_r;   // P'(r) = 3 r^2 - lam
};

inline CubicFactors factor_cubic(double delta) {
    if (!(delta > 0.0))
        throw std::invalid_argument("factor_cubic: delta must be > 0");
    CubicFactors f;
    f.lam = lambda_lsw() - delta;
    // discriminant 1/4 - (lam/3)^3 written as a product: (lambda_lsw/3)^3 is
    // exactly 1/4, so the difference of cubes avoids all cancellation
    const double u = lambda_lsw() / 3.0, v = f.lam / 3.0;
    const double disc = (delta / 3.0) * (u * u + u * v + v * v);
    const double sq = std::sqrt(disc);
    double r = std::cbrt(-0.5 + sq) + std::cbrt(-0.5 - sq);
    for (int it = 0; it < 3; ++it) {  // Newton polish; the root is simple
        const double P = (r * r - f.lam) * r + 1.0;
        r -= P / (3.0 * r * r - f.lam);
    }
    f.r = r;
    f.gamma = -1.0 / r;
    f.w = std::sqrt(f.gamma - 0.25 * r * r);
    f.dP_r = 3.0 * r * r - f.lam;
    return f;
}

// antiderivative of A/(s - r) + (B s + C)/(s^2 + r s + gamma), for s >= 0
inline double pf_antider(double s, const CubicFactors& f, double A, double B,
                         double C) {
    const double quad = (s + f.r) * s + f.gamma;
    return A * std::log(s - f.r) + 0.5 * B * std::log(quad) +
           (C - 0.5 * B * f.r) / f.w * std::atan((s + 0.5 * f.r) / f.w);
}

// int 3 s^2 / P ds; equals int dy / D(y) under y = s^3, hence also int a dy
inline double antider_inv_d(double s, const CubicFactors& f) {
    const double A = 3.0 * f.r * f.r / f.dP_r;
    return pf_antider(s, f, A, 3.0 - A, (3.0 - 2.0 * A) * f.r);
}

inline double antider_inv_p(double s, const CubicFactors& f) {
    const double A = 1.0 / f.dP_r;
    return pf_antider(s, f, A, -A, -2.0 * A * f.r);
}

inline double antider_s_inv_p(double s, const CubicFactors& f) {
    const double A = f.r / f.dP_r;
    return pf_antider(s, f, A, -A, 1.0 - 2.0 * A * f.r);
}

// int 3 s^5 / P ds = int y dy / D(y) under y = s^3, via polynomial division:
// 3s^5/P = 3s^2 + 3 lam + (-3s^2 + 3 lam^2 s - 3 lam)/P
inline double antider_y_inv_d(double s, const CubicFactors& f) {
    return s * s * s + 3.0 * f.lam * s - antider_inv_d(s, f) +
           3.0 * f.lam * f.lam * antider_s_inv_p(s, f) -
           3.0 * f.lam * antider_inv_p(s, f);
}

// delta = 0 antiderivatives of 3 s^2 / P0, P0 = (s - a_s)^2 (s + b_s); the
// partial fractions are 5/3 / (s - a_s) + a_s / (s - a_s)^2 + 4/3 / (s + b_s)
inline double antider_inv_d0_left(double s) {  // s < a_s
    const double as = std::cbrt(0.5), bs = std::cbrt(4.0);
    return (5.0 / 3.0) * std::log(as - s) + as / (as - s) +
           (4.0 / 3.0) * std::log(s + bs);
}

inline double antider_inv_d0_right(double s) {  // s > a_s
    const double as = std::cbrt(0.5), bs = std::cbrt(4.0);
    return (5.0 / 3.0) * std::log(s - as) - as / (s - as) +
           (4.0 / 3.0) * std::log(s + bs);
}

// closed form of S(z) = int_0^z a (b - teps y - eps) dy:
// S = ln D + (1 - eps) int_0^z a dy - teps int_0^z y a dy, using a b = (ln D)' + a
inline double s_closed(double z, const ParamState& p, const CubicFactors& f) {
    if (z == 0.0) return 0.0;
    const double s = std::cbrt(z);
    const double a_part = antider_inv_d(s, f) - antider_inv_d(0.0, f);
    const double ay_part = antider_y_inv_d(s, f) - antider_y_inv_d(0.0, f);
    return std::log(denom(z, p.delta)) + (1.0 - p.eps) * a_part - p.teps * ay_part;
}

inline double s_closed(double z, const ParamState& p) {
    return s_closed(z, p, factor_cubic(p.delta));
}

// rho with the cubic factorization precomputed (R_delta samples many nodes)
inline double rho_delta_impl(double xi, const CubicFactors& f) {
    const double s = std::cbrt(xi);
    const double e = antider_inv_d(s, f) - antider_inv_d(1.0, f);
    return xi / (2.0 - f.lam) * std::exp(e);
}

}  // namespace kernel_detail

// a_delta(z) = 1 / (1 + z - lambda_lsw z^(1/3) + delta z^(1/3)).  delta = 0 is
// permitted only where the denominator is positive (it vanishes at z = 1/2).
inline double eval_a(double z, double delta) {
    if (!(z >= 0.0)) throw std::invalid_argument("eval_a: z must be >= 0");
    if (!(delta >= 0.0)) throw std::invalid_argument("eval_a: delta must be >= 0");
    const double d = kernel_detail::denom(z, delta);
    if (!(d > 0.0))
        throw std::invalid_argument("eval_a: denominator vanishes (delta = 0, z = 1/2)");
    return 1.0 / d;
}

// b_delta(z) = 2 - (1/3)(lambda_lsw - delta) z^(-2/3).  z = 0 is rejected; the
// integrable singularity is the grid's job, not pointwise evaluation's.
inline double eval_b(double z, double delta) {
    if (!(z > 0.0)) throw std::invalid_argument("eval_b: z must be > 0");
    const double t = std::cbrt(z);
    return 2.0 - (lambda_lsw() - delta) / 3.0 / (t * t);
}

// Phi_LSW: the compactly supported self-similar LSW profile,
//   C (a_s - s)^(-11/3) (s + b_s)^(-7/3) exp(-a_s/(a_s - s)) on [0, 1/2),
// zero from z = 1/2 on, normalized so that int z Phi_LSW dz = 1.

namespace kernel_detail {

// log of the unnormalized profile; requires 0 <= z < 1/2
inline double log_phi_lsw_shape(double z) {
    const double s = std::cbrt(z);
    return -(std::log(denom(z, 0.0)) + antider_inv_d0_left(s) -
             antider_inv_d0_left(0.0));
}

inline double phi_lsw_norm_constant() {
    // One cached normalization quadrature.  Panel [0, 0.4] under z = x^3 is
    // analytic (the shape is a function of s = z^(1/3)); the panels toward the
    // support edge shrink geometrically, and beyond 0.49 the profile is below
    // 1e-55, outside double relevance.
    static const double c = [] {
        using gl = boost::math::quadrature::gauss<double, 64>;
        auto f_sub = [](double x) {
            const double x2 = x * x;
            return 3.0 * x2 * x2 * x * std::exp(log_phi_lsw_shape(x * x * x));
        };
        auto f = [](double z) { return z * std::exp(log_phi_lsw_shape(z)); };
        double m = gl::integrate(f_sub, 0.0, std::cbrt(0.40));
        m += gl::integrate(f, 0.40, 0.45);
        m += gl::integrate(f, 0.45, 0.475);
        m += gl::integrate(f, 0.475, 0.49);
        return 1.0 / m;
    }();
    return c;
}

}  // namespace kernel_detail

inline double phi_lsw(double z) {
    if (!(z >= 0.0)) throw std::invalid_argument("phi_lsw: z must be >= 0");
    if (z >= 0.5) return 0.0;
    const double lg = kernel_detail::log_phi_lsw_shape(z);
    if (lg < -744.0) return 0.0;  // underflow toward the all-order zero at 1/2
    return kernel_detail::phi_lsw_norm_constant() * std::exp(lg);
}

// rho_delta(xi) = xi a_delta(xi) exp(-int_xi^1 a_delta b_delta dy).  In closed
// form the a and ln D parts cancel exactly: rho = xi e^(I(s)-I(1)) / P(1) with
// I = antider_inv_d, so the layer maximum of a never appears.
inline double rho_delta(double xi, double delta) {
    if (!(xi > 0.0) || xi > 1.0)
        throw std::invalid_argument("rho_delta: xi must lie in (0, 1]");
    return kernel_detail::rho_delta_impl(xi,
                                         kernel_detail::factor_cubic(delta));
}

// delta = 0 limit of rho_delta: identically 0 on [0, 1/2] (the exponent
// diverges through the layer), closed form on (1/2, 1]
inline double rho_zero(double xi) {
    if (!(xi >= 0.0) || xi > 1.0)
        throw std::invalid_argument("rho_zero: xi must lie in [0, 1]");
    if (xi <= 0.5) return 0.0;
    const double s = std::cbrt(xi);
    const double e = kernel_detail::antider_inv_d0_right(s) -
                     kernel_detail::antider_inv_d0_right(1.0);
    return xi / (2.0 - lambda_lsw()) * std::exp(e);
}

// R_delta[h] = int_0^1 rho_delta h dxi on h's grid
inline double R_delta(const Profile& h, double delta) {
    const Grid& g = *h.grid;
    if (g.z_max < 1.0)
        throw std::invalid_argument("R_delta: h must be defined on [0, 1]");
    const auto f = kernel_detail::factor_cubic(delta);
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = g.nodes[i];
        if (z == 0.0 || z > 1.0) continue;  // rho(0+) = 0; support ends at 1
        v[i] = kernel_detail::rho_delta_impl(z, f) * h.values[i];
    }
    return integrate(g, v, 0.0, 1.0);
}

// R_0[h] = int_(1/2)^1 xi a_0 h exp(-int_xi^1 a_0 b_0 dy) dxi; the integrand's
// limit at xi = 1/2+ is 0 and the delta = 0 coefficients are never evaluated
// at the double root
inline double R_0(const Profile& h) {
    const Grid& g = *h.grid;
    if (g.z_max < 1.0)
        throw std::invalid_argument("R_0: h must be defined on [0, 1]");
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = g.nodes[i];
        if (z <= 0.5 || z > 1.0) continue;
        v[i] = rho_zero(z) * h.values[i];
    }
    return integrate(g, v, 0.5, 1.0);
}

// The cumulative exponent of the homogeneous weight, per node:
//   S(z) = int_0^z a_delta(y) (b_delta(y) - teps y - eps) dy.
// The three prefix quadratures are cached so that re-weighting in (eps, teps)
// costs one linear pass (solve_params shifts parameters thousands of times).
struct LogWeight {
    GridPtr grid;
    std::vector<double> s_values;  // S at nodes; s_values[0] = 0
    ParamState params;
    std::vector<double> s_hat;   // prefix of int a b
    std::vector<double> a_int;   // prefix of int a
    std::vector<double> ay_int;  // prefix of int y a
};

namespace kernel_detail {

inline std::vector<double> assemble_s(const LogWeight& lw, double eps,
                                      double teps) {
    std::vector<double> s(lw.s_hat.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        s[k] = lw.s_hat[k] - eps * lw.a_int[k] - teps * lw.ay_int[k];
    return s;
}

}  // namespace kernel_detail

inline LogWeight build_log_weight(const ParamState& params, GridPtr grid) {
    if (!grid) throw std::invalid_argument("build_log_weight: null grid");
    if (grid->panels.empty() ||
        grid->panels.front().map != GridPanel::Map::cube)
        throw std::invalid_argument(
            "build_log_weight: grid must grade the origin (cube first panel)");
    if (grid->delta != params.delta)
        throw std::invalid_argument(
            "build_log_weight: grid built for a different delta");
    const Grid& g = *grid;
    const double d = params.delta;
    const auto ab = sample_skip_origin(
        g, [d](double z) { return eval_a(z, d) * eval_b(z, d); });
    const auto av = sample(g, [d](double z) { return eval_a(z, d); });
    const auto ay = sample(g, [d](double z) { return z * eval_a(z, d); });
    LogWeight lw;
    lw.grid = std::move(grid);
    lw.params = params;
    lw.s_hat = integral_prefix(g, ab);
    lw.a_int = integral_prefix(g, av);
    lw.ay_int = integral_prefix(g, ay);
    lw.s_values = kernel_detail::assemble_s(lw, params.eps, params.teps);
    return lw;
}

// Same grid and delta, new (eps, teps); one linear pass over cached prefixes.
inline LogWeight shifted_log_weight(const LogWeight& lw, double eps,
                                    double teps) {
    LogWeight out = lw;
    out.params = make_params(lw.params.delta, eps, teps);
    out.s_values = kernel_detail::assemble_s(lw, eps, teps);
    return out;
}

}  // namespace lswe
