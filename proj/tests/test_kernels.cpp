#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lswe/grid.hpp"
#include "lswe/kernels.hpp"
#include "lswe/profile.hpp"

using namespace lswe;

namespace {

// index of the node closest to z; the graded mesh places these targets on
// nodes up to rounding, but index_of wants the stored bit pattern
std::size_t nearest_node(const Grid& g, double z) {
    std::size_t best = 0;
    double d = 1e300;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double dd = std::abs(g.nodes[k] - z);
        if (dd < d) {
            d = dd;
            best = k;
        }
    }
    REQUIRE(d <= 1e-9);
    return best;
}

}  // namespace

TEST_CASE("model constants") {
    // lambda = 3 * 2^(-2/3) stated through cbrt so the identity is exact
    REQUIRE(lambda_lsw() == 3.0 * std::cbrt(0.25));
    REQUIRE(lambda_lsw() == Catch::Approx(1.8898815748423097).epsilon(1e-15));
    REQUIRE(kappa() == Catch::Approx(4.318840528266973).epsilon(1e-12));
    REQUIRE(std::abs(kappa() * kappa() - kappa_sq()) <= 1e-14 * kappa_sq());
}

TEST_CASE("make_params validates and derives") {
    REQUIRE_THROWS_AS(make_params(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_params(-0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_params(1.1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_params(0.04, -1e-3, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_params(0.04, 1e-3, -1e-3), std::invalid_argument);

    const ParamState hat = make_params(0.04);
    REQUIRE(hat.hats());
    REQUIRE(hat.lambda == lambda_lsw() - 0.04);
    REQUIRE(hat.m0 == 0.0);

    const ParamState p = make_params(0.04, 2e-3, 5e-3);
    REQUIRE_FALSE(p.hats());
    REQUIRE(p.m0 == Catch::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("a-coefficient identity and special values") {
    // a * (1 + z - lambda z^(1/3) + delta z^(1/3)) = 1 against the unfactored
    // denominator; the factored evaluation must agree to rounding
    for (double delta : {0.04, 0.3, 1.0})
        for (double z : {1e-4, 1e-2, 0.1, 0.3, 0.49, 0.51, 0.7, 1.0, 2.0, 10.0}) {
            const double direct =
                1.0 + z - (lambda_lsw() - delta) * std::cbrt(z);
            REQUIRE(std::abs(eval_a(z, delta) * direct - 1.0) <= 1e-12);
        }

    // a(0) = 1: the factored constant term as^2 bs = 1 up to rounding
    REQUIRE(eval_a(0.0, 0.04) == Catch::Approx(1.0).margin(5e-16));
    REQUIRE(eval_a(0.0, 0.0) == Catch::Approx(1.0).margin(5e-16));

    // at the layer center the double-root factor cancels exactly:
    // a(1/2, delta) = 2^(1/3) / delta
    for (double delta : {1.0, 0.1, 0.04, 0.01})
        REQUIRE(std::abs(eval_a(0.5, delta) * delta - std::cbrt(2.0)) <=
                1e-15 * std::cbrt(2.0));

    REQUIRE(eval_a(1.0, 0.0) ==
            Catch::Approx(1.0 / (2.0 - lambda_lsw())).epsilon(1e-14));

    REQUIRE_THROWS_AS(eval_a(-1.0, 0.04), std::invalid_argument);
    REQUIRE_THROWS_AS(eval_a(0.5, -0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(eval_a(0.5, 0.0), std::invalid_argument);

    // positive on the production grid
    const Grid g = build_grid(0.04, 10.0, 400);
    for (double z : g.nodes) REQUIRE(eval_a(z, 0.04) > 0.0);
}

TEST_CASE("a-coefficient asymptotics") {
    // z a -> 1 at z -> inf; the correction is (lambda - delta) z^(-2/3)
    REQUIRE(std::abs(1e3 * eval_a(1e3, 0.04) - 1.0) <= 2.5e-2);
    REQUIRE(std::abs(1e6 * eval_a(1e6, 0.04) - 1.0) <= 2.5e-4);

    // near 0 only the product has a clean limit: 3 z^(2/3) a b -> -(lambda - delta)
    const double lam = lambda_lsw() - 0.04;
    auto prod = [](double z) {
        return 3.0 * std::cbrt(z * z) * eval_a(z, 0.04) * eval_b(z, 0.04);
    };
    REQUIRE(std::abs(prod(1e-3) + lam) <= 0.5);
    REQUIRE(std::abs(prod(1e-6) + lam) <= 0.05);
    REQUIRE(std::abs(prod(1e-9) + lam) <= 0.005);
}

TEST_CASE("b-coefficient structure") {
    // b = 2 - (lambda/3) z^(-2/3) vanishes at z = (1/2)^(5/2) when delta = 0
    REQUIRE(std::abs(eval_b(std::pow(0.5, 2.5), 0.0)) <= 1e-15);
    REQUIRE(eval_b(1.0, 0.0) ==
            Catch::Approx(2.0 - lambda_lsw() / 3.0).epsilon(1e-15));
    REQUIRE(eval_b(0.5, 0.04) ==
            Catch::Approx(1.0211653473595763).epsilon(1e-14));
    REQUIRE(std::abs(eval_b(1e6, 0.04) - 2.0) <= 1e-3);

    // negative in the deep core, positive past the zero, monotone in z
    REQUIRE(eval_b(0.05, 0.0) < 0.0);
    REQUIRE(eval_b(0.05, 0.04) < 0.0);
    REQUIRE(eval_b(0.3, 0.0) > 0.0);
    REQUIRE(eval_b(0.3, 0.04) > 0.0);
    REQUIRE(eval_b(0.1, 0.04) < eval_b(0.2, 0.04));
    REQUIRE(eval_b(0.2, 0.04) < eval_b(0.4, 0.04));

    REQUIRE_THROWS_AS(eval_b(0.0, 0.04), std::invalid_argument);
    REQUIRE_THROWS_AS(eval_b(-0.2, 0.04), std::invalid_argument);
}

TEST_CASE("LSW profile values and support") {
    REQUIRE(phi_lsw(0.0) == Catch::Approx(5.9755666188945842).epsilon(1e-12));
    REQUIRE(phi_lsw(0.1) == Catch::Approx(20.159746635328624).epsilon(1e-12));
    REQUIRE(phi_lsw(0.25) == Catch::Approx(19.069189384302497).epsilon(1e-12));

    // compact support [0, 1/2] with an all-orders zero at the edge
    REQUIRE(phi_lsw(0.5) == 0.0);
    REQUIRE(phi_lsw(0.75) == 0.0);
    REQUIRE(phi_lsw(0.499) <= 1e-8 * phi_lsw(0.25));

    for (double z = 0.0; z < 0.49; z += 0.01) REQUIRE(phi_lsw(z) > 0.0);
    REQUIRE_THROWS_AS(phi_lsw(-1e-9), std::invalid_argument);
}

TEST_CASE("rho functionals") {
    struct Row {
        double delta, at25, at85;
    };
    const Row rows[] = {
        {0.1, 0.0010645577956614799, 1.7583722723886028},
        {0.05, 9.468884019735891e-06, 1.6889815556043215},
        {0.025, 5.7338903968599579e-09, 1.5348132167925039},
    };
    double prev_ratio = 1e300;
    for (const Row& r : rows) {
        REQUIRE(rho_delta(0.25, r.delta) ==
                Catch::Approx(r.at25).epsilon(1e-12));
        REQUIRE(rho_delta(0.85, r.delta) ==
                Catch::Approx(r.at85).epsilon(1e-12));
        // mass inside the layer dies much faster than outside as delta -> 0
        const double ratio = rho_delta(0.25, r.delta) / rho_delta(0.85, r.delta);
        REQUIRE(ratio < 0.1 * prev_ratio);
        prev_ratio = ratio;
    }
    REQUIRE_THROWS_AS(rho_delta(0.0, 0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(rho_delta(1.5, 0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(rho_delta(-0.5, 0.1), std::invalid_argument);

    // delta = 0 limit: identically zero through the layer, closed form beyond
    REQUIRE(rho_zero(0.0) == 0.0);
    REQUIRE(rho_zero(0.3) == 0.0);
    REQUIRE(rho_zero(0.5) == 0.0);
    REQUIRE(rho_zero(0.5 + 1e-7) == 0.0);  // all-orders flat at 1/2+
    REQUIRE(rho_zero(0.75) == Catch::Approx(0.11436818495251369).epsilon(1e-12));
    REQUIRE(rho_zero(1.0) ==
            Catch::Approx(1.0 / (2.0 - lambda_lsw())).epsilon(1e-14));
    REQUIRE_THROWS_AS(rho_zero(-0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(rho_zero(1.0001), std::invalid_argument);

    // R_0 against an independently computed value for h = z^2 e^{-z}
    const NormSpec ns = make_norm_spec(1.0, 2.0);
    const GridPtr g = make_grid(0.04, 10.0, 400);
    const Profile h =
        sample_profile(g, [](double z) { return z * z * std::exp(-z); }, ns);
    REQUIRE(R_0(h) == Catch::Approx(0.23948863289087166).epsilon(1e-7));

    // R_delta -> R_0 monotonically as delta -> 0
    const double r0 = R_0(h);
    const double gaps[] = {
        std::abs(R_delta(h, 0.2) - r0),
        std::abs(R_delta(h, 0.1) - r0),
        std::abs(R_delta(h, 0.04) - r0),
        std::abs(R_delta(h, 0.02) - r0),
    };
    REQUIRE(gaps[1] < gaps[0]);
    REQUIRE(gaps[2] < gaps[1]);
    REQUIRE(gaps[3] < gaps[2]);
    REQUIRE(gaps[3] <= 0.01);
}

TEST_CASE("closed-form S matches frozen values at delta = 0.04") {
    const ParamState p = make_params(0.04);
    struct Pt {
        double z, s;
    };
    const Pt pts[] = {
        {0.2, -1.2543849196182981},  {0.25, -1.0853727753119093},
        {0.5, 3.8216121130884453},   {0.9, 12.580091961435084},
        {1.0, 13.619997155784311},
    };
    for (const Pt& q : pts)
        REQUIRE(std::abs(kernel_detail::s_closed(q.z, p) - q.s) <= 1e-11);

    // S decreases while b < 0, then climbs through the layer
    REQUIRE(kernel_detail::s_closed(0.1, p) < kernel_detail::s_closed(0.05, p));
    REQUIRE(kernel_detail::s_closed(0.25, p) > kernel_detail::s_closed(0.2, p));
    REQUIRE(kernel_detail::s_closed(0.0, p) == 0.0);
}

TEST_CASE("log-weight prefixes and grid accuracy") {
    const ParamState p = make_params(0.04);
    const LogWeight lw = build_log_weight(p, make_grid(0.04, 10.0, 400));
    const Grid& g = *lw.grid;

    REQUIRE(lw.s_values.size() == g.size());
    REQUIRE(lw.s_values[0] == 0.0);
    REQUIRE(lw.s_hat[0] == 0.0);
    REQUIRE(lw.a_int[0] == 0.0);
    REQUIRE(lw.ay_int[0] == 0.0);
    // with hat parameters the assembled S is the ab-prefix itself
    REQUIRE(lw.s_values == lw.s_hat);

    const double zs[] = {0.2, 0.25, 0.5, 0.9, 1.0};
    const double ss[] = {-1.2543849196182981, -1.0853727753119093,
                         3.8216121130884453, 12.580091961435084,
                         13.619997155784311};
    auto max_dev = [&](const LogWeight& w) {
        double m = 0.0;
        for (int i = 0; i < 5; ++i)
            m = std::max(
                m, std::abs(w.s_values[nearest_node(*w.grid, zs[i])] - ss[i]));
        return m;
    };
    const double dev400 = max_dev(lw);
    REQUIRE(dev400 <= 5e-7);

    const LogWeight lw8 = build_log_weight(p, make_grid(0.04, 10.0, 800));
    const double dev800 = max_dev(lw8);
    REQUIRE(dev800 <= 1e-7);
    REQUIRE(dev800 < 0.5 * dev400);  // at least 2x gain per grid doubling

    // prefix of int a at z = 1 against the independently computed integral,
    // on the coarse grid the spec'd configuration resolves
    const LogWeight lwc =
        build_log_weight(make_params(0.01), make_grid(0.01, 10.0, 200));
    const double a1 = lwc.a_int[nearest_node(*lwc.grid, 1.0)];
    REQUIRE(a1 == Catch::Approx(36.767172771434872).epsilon(1e-6));
}

TEST_CASE("discrete S-derivative matches a (b - teps z - eps)") {
    const ParamState p = make_params(0.04, 1e-3, 2e-3);
    const LogWeight lw = build_log_weight(
        make_params(0.04), make_grid(0.04, 10.0, 400));
    const LogWeight sh = shifted_log_weight(lw, p.eps, p.teps);
    const Grid& g = *sh.grid;
    for (double z : {0.3, 0.7, 2.0, 5.0}) {
        const std::size_t k = nearest_node(g, z);
        const double zk = g.nodes[k];
        const double num = (sh.s_values[k + 1] - sh.s_values[k - 1]) /
                           (g.nodes[k + 1] - g.nodes[k - 1]);
        const double exact =
            eval_a(zk, 0.04) * (eval_b(zk, 0.04) - p.teps * zk - p.eps);
        REQUIRE(std::abs(num - exact) <= 1e-3 * std::max(1.0, std::abs(exact)));
    }
}

TEST_CASE("shifted log-weight overwrites the parameter state") {
    const LogWeight lw =
        build_log_weight(make_params(0.04), make_grid(0.04, 10.0, 400));

    // shifts are absolute: re-shifting replaces, never composes
    const LogWeight once = shifted_log_weight(lw, 5e-4, 1e-4);
    const LogWeight twice =
        shifted_log_weight(shifted_log_weight(lw, 1e-3, 2e-3), 5e-4, 1e-4);
    REQUIRE(once.s_values == twice.s_values);
    REQUIRE(shifted_log_weight(lw, 0.0, 0.0).s_values == lw.s_values);

    REQUIRE(once.params.eps == 5e-4);
    REQUIRE(once.params.teps == 1e-4);
    REQUIRE(once.s_hat == lw.s_hat);
    REQUIRE(once.a_int == lw.a_int);
    REQUIRE(once.ay_int == lw.ay_int);

    // new parameters go through make_params validation
    REQUIRE_THROWS_AS(shifted_log_weight(lw, -1e-3, 0.0), std::invalid_argument);

    // the shift lowers S for positive eps, teps (a > 0)
    const Grid& g = *lw.grid;
    const std::size_t k = g.index_of(1.0);
    REQUIRE(once.s_values[k] < lw.s_values[k]);
}

TEST_CASE("build_log_weight validation") {
    REQUIRE_THROWS_AS(build_log_weight(make_params(0.04), nullptr),
                      std::invalid_argument);
    // a generic-node grid has no origin-grading cube panel
    const GridPtr flat = std::make_shared<const Grid>(
        grid_from_nodes({0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0}));
    REQUIRE_THROWS_AS(build_log_weight(make_params(0.04), flat),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        build_log_weight(make_params(0.04), make_grid(0.1, 10.0, 400)),
        std::invalid_argument);
}
