#pragma once

// Quantitative verification: moments, tail fits, stationary-equation
// residuals, and the delta-sweep for the scaling law delta (log eps)^2 ->
// 3 pi^2 2^(-2/3).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
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
#include "lswe/solver.hpp"

namespace lswe {

// int z^k phi dz over the truncated domain; k = 0, 1/3, 1 are the moments the
// model constrains
inline double moments(const Profile& phi, double k) {
    if (!(k >= 0.0)) throw std::invalid_argument("moments: k must be >= 0");
    const Grid& g = *phi.grid;
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        v[i] = std::pow(g.nodes[i], k) * phi.values[i];
    return integrate(g, v);
}

// the mean field lambda = m_0 / m_(1/3); equals lambda_lsw - delta up to the
// model's o(1) corrections for the solved profile
inline double lambda_estimate(const Profile& phi) {
    return moments(phi, 0.0) / moments(phi, 1.0 / 3.0);
}

// sqrt(delta) int_0^1 a_delta dz on a production grid; tends to kappa
inline double kappa_estimate(double delta, std::size_t n_base = 400) {
    const Grid g = build_grid(delta, 1.0, n_base);
    const auto v = sample(g, [delta](double z) { return eval_a(z, delta); });
    return std::sqrt(delta) * integrate(g, v);
}

struct TailFit {
    double z_lo = 0.0, z_hi = 0.0;
    double rate = 0.0;   // fitted exponential decay rate
    double power = 0.0;  // fitted algebraic prefactor exponent
    double r_squared = 0.0;
};

// least squares of log phi ~ c0 - rate z - power log z on [z_lo, z_hi]
inline TailFit tail_fit(const Profile& phi, double z_lo, double z_hi) {
    if (!(z_lo >= 1.5))
        throw std::invalid_argument("tail_fit: window must start at z >= 1.5");
    const Grid& g = *phi.grid;
    if (!(z_hi > z_lo) || z_hi > g.z_max)
        throw std::invalid_argument("tail_fit: bad window");
    std::vector<double> zs, ys;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = g.nodes[i];
        if (z < z_lo || z > z_hi) continue;
        if (!(phi.values[i] > 0.0))
            throw NonPositiveTail("tail_fit: profile not positive at z = " +
                                  std::to_string(z));
        zs.push_back(z);
        ys.push_back(std::log(phi.values[i]));
    }
    if (zs.size() < 10)
        throw std::invalid_argument("tail_fit: window covers fewer than 10 nodes");

    // normal equations for the design (1, -z, -log z)
    double m[3][4] = {};
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double x[3] = {1.0, -zs[i], -std::log(zs[i])};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += x[r] * x[c];
            m[r][3] += x[r] * ys[i];
        }
    }
    for (int col = 0; col < 3; ++col) {  // partial-pivot elimination
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    double sol[3];
    for (int r = 2; r >= 0; --r) {
        double s = m[r][3];
        for (int c = r + 1; c < 3; ++c) s -= m[r][c] * sol[c];
        sol[r] = s / m[r][r];
    }

    TailFit fit;
    fit.z_lo = z_lo;
    fit.z_hi = z_hi;
    fit.rate = sol[1];
    fit.power = sol[2];
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= double(ys.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double fitv = sol[0] - sol[1] * zs[i] - sol[2] * std::log(zs[i]);
        ss_res += (ys[i] - fitv) * (ys[i] - fitv);
        ss_tot += (ys[i] - mean) * (ys[i] - mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

// Residuals of the stationary equation, independent of solver bookkeeping.
// Integral form: Phi - eps J[Phi*Phi] in the Z-norm.  Differential form:
// (1/a) Phi' + b Phi + eps (z h - Phi - m0 z Phi) with h = Phi*Phi, evaluated
// by nonuniform central differences on [0.05, 0.95] outside the layer band
// |z - 1/2| < 1.5 sqrt(delta), relative to the local term magnitude.
struct ResidualReport {
    double integral_norm = 0.0;
    double differential_max = 0.0;
    double eps = 0.0;
    double teps = 0.0;
};

namespace diagnostics_detail {

inline double differential_max(const Profile& phi, const Profile& h,
                               const ParamState& p) {
    const Grid& g = *phi.grid;
    const double band = 1.5 * std::sqrt(p.delta);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < g.size(); ++k) {
        const double z = g.nodes[k];
        if (z < 0.05 || z > 0.95 || std::abs(z - 0.5) < band) continue;
        const double h1 = z - g.nodes[k - 1], h2 = g.nodes[k + 1] - z;
        const double dphi = -h2 / (h1 * (h1 + h2)) * phi.values[k - 1] +
                            (h2 - h1) / (h1 * h2) * phi.values[k] +
                            h1 / (h2 * (h1 + h2)) * phi.values[k + 1];
        const double ia = 1.0 / eval_a(z, p.delta);
        const double t_deriv = ia * dphi;
        const double t_b = eval_b(z, p.delta) * phi.values[k];
        const double t_conv = p.eps * z * h.values[k];
        const double t_lin = -p.eps * phi.values[k] * (1.0 + p.m0 * z);
        const double r = t_deriv + t_b + t_conv + t_lin;
        const double scale = std::max({std::abs(t_deriv), std::abs(t_b),
                                       std::abs(t_conv), std::abs(t_lin),
                                       1e-300});
        worst = std::max(worst, std::abs(r) / scale);
    }
    return worst;
}

}  // namespace diagnostics_detail

inline ResidualReport check_residuals(const Profile& phi, double delta,
                                      double tol_params = 1e-10) {
    const Profile h = convolve(phi, phi);
    const ParamSolveResult pr = solve_params(h, delta, phi.grid, tol_params);
    const ParamState p = make_params(delta, pr.eps, pr.teps);
    const PsiProfile psi = compute_psi(build_log_weight(p, phi.grid));
    const Profile j = apply_J(h, p, psi, phi.grid);
    Profile diff = phi;
    for (std::size_t k = 0; k < diff.values.size(); ++k)
        diff.values[k] = phi.values[k] - pr.eps * j.values[k];
    ResidualReport rep;
    rep.integral_norm = z_norm(diff).total();
    rep.differential_max = diagnostics_detail::differential_max(phi, h, p);
    rep.eps = pr.eps;
    rep.teps = pr.teps;
    return rep;
}

// Relative residual of Phi_LSW in the eps = 0 stationary equation
// (1/a_0) Phi' + b_0 Phi = 0 at one point, via the 5-point derivative with
// step adapted to the local log-slope (log Phi_LSW)' = -a_0 b_0; valid on
// (0, 1/2) away from the endpoints by at least twice the chosen step
inline double phi_lsw_ode_residual(double z) {
    if (!(z > 0.0) || !(z < 0.5))
        throw std::invalid_argument("phi_lsw_ode_residual: z must lie in (0, 1/2)");
    const double slope = eval_a(z, 0.0) * eval_b(z, 0.0);
    const double step = std::min({0.005 / std::max(std::abs(slope), 1.0),
                                  0.25 * z, 0.25 * (0.5 - z)});
    const double d = (phi_lsw(z - 2.0 * step) - 8.0 * phi_lsw(z - step) +
                      8.0 * phi_lsw(z + step) - phi_lsw(z + 2.0 * step)) /
                     (12.0 * step);
    const double v = phi_lsw(z);
    const double t_deriv = d / eval_a(z, 0.0);
    const double t_b = eval_b(z, 0.0) * v;
    const double scale = std::max({std::abs(t_deriv), std::abs(t_b), v});
    return std::abs(t_deriv + t_b) / scale;
}

struct SweepRow {
    double delta = 0.0;
    double eps = 0.0;
    double teps = 0.0;
    double log_eps = 0.0;
    double law_value = 0.0;  // delta (log eps)^2
    double lead_eps = 0.0;   // 1 / (K_1 R_0[Phi_LSW * Phi_LSW])
    std::size_t iterations = 0;
    double residual = 0.0;
    bool ok = true;
    std::string error;
};

inline std::vector<SweepRow> sweep_scaling(const std::vector<double>& deltas,
                                           const SolverConfig& config) {
    if (deltas.empty())
        throw std::invalid_argument("sweep_scaling: empty delta list");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i] < deltas[i - 1]))
            throw std::invalid_argument("sweep_scaling: deltas must decrease");
    std::vector<SweepRow> rows;
    for (double d : deltas) {
        SweepRow row;
        row.delta = d;
        try {
            SolverConfig c = config;
            c.delta = d;
            const FixedPointResult res = solve_profile(c);
            row.eps = res.params.eps;
            row.teps = res.params.teps;
            row.log_eps = std::log(res.params.eps);
            row.law_value = d * row.log_eps * row.log_eps;
            const GridPtr grid = res.profile.grid;
            const LogWeight lw0 = build_log_weight(make_params(d), grid);
            const double lk1 = log_k(gamma_from_logweight(1, lw0));
            const Profile lsw = sample_profile(grid, phi_lsw, config.norm_spec);
            const double r0 = R_0(convolve(lsw, lsw));
            row.lead_eps = std::exp(-(lk1 + std::log(r0)));
            row.iterations = res.iterations;
            row.residual = res.final_residual;
        } catch (const SolverError& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.eps = row.teps = row.log_eps = nan;
            row.law_value = row.lead_eps = row.residual = nan;
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Richardson in sqrt(delta) from the last two successful rows:
// law(delta) ~ L - c sqrt(delta) near the limit
struct SweepExtrapolation {
    double value = 0.0;
    double coefficient = 0.0;
};

inline SweepExtrapolation sweep_richardson(const std::vector<SweepRow>& rows) {
    const SweepRow* a = nullptr;
    const SweepRow* b = nullptr;  // b = smallest-delta successful row
    for (const SweepRow& r : rows)
        if (r.ok) {
            a = b;
            b = &r;
        }
    if (!a || !b)
        throw std::invalid_argument(
            "sweep_richardson: needs two successful rows");
    const double sa = std::sqrt(a->delta), sb = std::sqrt(b->delta);
    SweepExtrapolation ex;
    ex.coefficient = (a->law_value - b->law_value) / (sa - sb);
    ex.value = b->law_value - ex.coefficient * sb;
    return ex;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "delta,eps,teps,log_eps,law_value,lead_eps,iterations,residual\n";
    char buf[360];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%.17g\n",
                      r.delta, r.eps, r.teps, r.log_eps, r.law_value,
                      r.lead_eps, r.iterations, r.residual);
        os << buf;
    }
    if (!os) throw IoError("write_sweep_csv: stream write failed");
}

inline void write_sweep_csv(const std::string& path,
                            const std::vector<SweepRow>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("write_sweep_csv: cannot open " + path);
    write_sweep_csv(os, rows);
}

}  // namespace lswe
