#pragma once

// Reference quadrature for tests: adaptive bisection with Richardson control.
// Deliberately independent of the panel rules in lswe/grid.hpp; everything here
// is plain Simpson on shrinking intervals plus an error estimate from the
// two-half refinement.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>

namespace lswe_test {

namespace detail {

template <class F>
double simpson(const F& f, double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_step(const F& f, double a, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
    const double m  = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left  = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    const double err = (left + right - whole) / 15.0;  // Richardson estimate
    if (depth <= 0)
        throw std::runtime_error("adaptive_quad: recursion depth exhausted");
    if (std::abs(err) <= tol)
        return left + right + err;
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
         + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Absolute-tolerance adaptive Simpson; throws instead of silently degrading.
template <class F>
double adaptive_quad(const F& f, double a, double b, double tol, int max_depth = 48) {
    if (!(a < b)) throw std::invalid_argument("adaptive_quad: need a < b");
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::adaptive_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integrands with an integrable z^(-2/3)-type singularity at z = 0: substitute
// z = t^3, so dz = 3 t^2 dt and the transformed integrand is bounded.  g0 is
// the caller-supplied limit of 3 t^2 f(t^3) at t = 0 (0 for bounded f).
template <class F>
double adaptive_quad_cube0(const F& f, double b, double g0, double tol, int max_depth = 48) {
    auto g = [&](double t) {
        if (t == 0.0) return g0;
        return 3.0 * t * t * f(t * t * t);
    };
    return adaptive_quad(g, 0.0, std::cbrt(b), tol, max_depth);
}

// Dense-scan maximizer with golden-section polish, for norm cross-checks.
template <class F>
double scan_max(const F& f, double a, double b, std::size_t n = 4096) {
    double best = f(a);
    double xb = a;
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = a + (b - a) * double(i) / double(n);
        const double v = f(x);
        if (v > best) { best = v; xb = x; }
    }
    double lo = std::max(a, xb - (b - a) / double(n));
    double hi = std::min(b, xb + (b - a) / double(n));
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 200; ++it) {
        if (f(c) < f(d)) lo = c; else hi = d;
        c = hi - gr * (hi - lo);
        d = lo + gr * (hi - lo);
    }
    return std::max(best, f(0.5 * (lo + hi)));
}

}  // namespace lswe_test
