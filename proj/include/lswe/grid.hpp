#pragma once

// Graded quadrature grid on [0, z_max].
//
// The mesh is a chain of panels, each one the image of a uniform parameter
// step under a smooth map:
//   * a cube panel [0, z_c] with z = z_c u^3, so node density near the origin
//     resolves z^(-1/3) and z^(-2/3) factors without any per-integrand work;
//   * affine panels elsewhere, refined to spacing <= sqrt(delta)/40 across
//     [1/2 - 8 sqrt(delta), 1/2 + 8 sqrt(delta)] where the coefficient a_delta
//     develops its 1/delta peak.
//
// Quadrature is interpolatory of order 4: per cell, a cubic through the four
// nearest panel nodes is integrated in the panel parameter.  On the cube panel
// the stencil never touches the z = 0 node, so sampled integrands may carry an
// integrable singularity there; the slot 0 value is simply never read.
// Prefix sums of the per-cell contributions make integrate() exactly additive
// in its endpoints; endpoints inside a cell contribute via the trapezoid of
// the linear interpolant, matching the piecewise-linear profile convention.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace lswe {

struct GridPanel {
    enum class Map { affine, cube };
    Map map;
    double za, zb;
    std::size_t first;  // global index of the panel's first node
    std::size_t cells;
};

struct Grid {
    double delta = 0.0;
    double z_max = 0.0;
    std::size_t n_base = 0;
    double layer_center = 0.5;
    double layer_width = 0.0;  // sqrt(delta)

    std::vector<double> nodes;
    std::vector<GridPanel> panels;

    // cell k spans [nodes[k], nodes[k+1]]; its quadrature reads 4 consecutive
    // values starting at stencil[k]
    std::vector<std::uint32_t> stencil;
    std::vector<std::array<double, 4>> weights;
    std::vector<double> node_weight;  // accumulated full-range weights

    std::size_t size() const { return nodes.size(); }
    std::size_t cell_count() const { return nodes.empty() ? 0 : nodes.size() - 1; }

    // index of the cell containing z (right-closed at z_max)
    std::size_t locate(double z) const {
        if (z < 0.0 || z > z_max)
            throw std::invalid_argument("Grid::locate: point outside [0, z_max]");
        auto it = std::upper_bound(nodes.begin(), nodes.end(), z);
        std::size_t idx = static_cast<std::size_t>(it - nodes.begin());
        if (idx == 0) return 0;
        if (idx >= nodes.size()) return nodes.size() - 2;
        return idx - 1;
    }

    // node index of an exact panel boundary (0, 1, z_max, ...)
    std::size_t index_of(double z) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), z);
        if (it == nodes.end() || *it != z)
            throw std::invalid_argument("Grid::index_of: no node at requested z");
        return static_cast<std::size_t>(it - nodes.begin());
    }
};

using GridPtr = std::shared_ptr<const Grid>;

namespace grid_detail {

// integrals of the cubic Lagrange basis over one uniform cell, by cell offset
// within the 4-point stencil; offset -1 is the right-sided stencil used for
// the first cube cell, whose stencil starts one node past the cell
inline constexpr std::array<std::array<double, 4>, 4> kCellTab = {{
    {{55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0}},  // offset -1
    {{9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0}},     // offset 0
    {{-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0}},   // offset 1
    {{1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 9.0 / 24.0}},     // offset 2
}};

inline void append_panel(Grid& g, GridPanel::Map map, double za, double zb,
                         std::size_t cells) {
    cells = std::max<std::size_t>(cells, map == GridPanel::Map::cube ? 4 : 3);
    GridPanel p{map, za, zb, g.nodes.empty() ? 0 : g.nodes.size() - 1, cells};
    if (g.nodes.empty()) g.nodes.push_back(za);
    for (std::size_t i = 1; i <= cells; ++i) {
        const double u = double(i) / double(cells);
        double z = map == GridPanel::Map::cube ? zb * u * u * u
                                               : za + (zb - za) * u;
        if (i == cells) z = zb;  // snap panel ends exactly
        g.nodes.push_back(z);
    }
    g.panels.push_back(p);
}

inline void build_weights(Grid& g) {
    const std::size_t nc = g.cell_count();
    g.stencil.assign(nc, 0);
    g.weights.assign(nc, {0.0, 0.0, 0.0, 0.0});
    g.node_weight.assign(g.size(), 0.0);
    for (const GridPanel& p : g.panels) {
        const double h = 1.0 / double(p.cells);
        const bool cube = p.map == GridPanel::Map::cube;
        // local stencil start excludes the z = 0 node on cube panels
        const std::size_t lo = cube ? 1 : 0;
        for (std::size_t j = 0; j < p.cells; ++j) {
            const std::size_t s =
                std::clamp<std::size_t>(j == 0 ? lo : j - 1, lo, p.cells - 3);
            const int offset = int(j) - int(s);  // in [-1, 2]
            const auto& tab = kCellTab[static_cast<std::size_t>(offset + 1)];
            const std::size_t cell = p.first + j;
            g.stencil[cell] = static_cast<std::uint32_t>(p.first + s);
            for (std::size_t m = 0; m < 4; ++m) {
                const double u = double(s + m) * h;
                const double zprime =
                    cube ? 3.0 * p.zb * u * u : (p.zb - p.za);
                const double w = h * tab[m] * zprime;
                g.weights[cell][m] = w;
                g.node_weight[p.first + s + m] += w;
            }
        }
    }
}

}  // namespace grid_detail

// Graded mesh for a given layer scale.  Node count is bounded by
//   n_cube + (1 - z_c) / min(1/n_base, s_fine) + (z_max - 1) * n_base / 4 + O(1),
// with s_fine = min(sqrt(delta)/40, 0.7 delta) and n_cube <= max(n_base,
// 3 z_c / s_fine).  The 0.7 delta term keeps the log-weight increment per cell
// of order one inside the layer, where |(log psi)'| reaches 2^(1/3)/delta.
inline Grid build_grid(double delta, double z_max, std::size_t n_base) {
    if (!(delta > 0.0) || delta > 1.0)
        throw std::invalid_argument("build_grid: delta must lie in (0, 1]");
    if (!(z_max >= 1.0))
        throw std::invalid_argument("build_grid: z_max must be >= 1");
    if (n_base < 64)
        throw std::invalid_argument("build_grid: n_base must be >= 64");

    Grid g;
    g.delta = delta;
    g.z_max = z_max;
    g.n_base = n_base;
    g.layer_center = 0.5;
    g.layer_width = std::sqrt(delta);

    const double w = g.layer_width;
    const double s_fine = std::min(w / 40.0, 0.7 * delta);
    const double h_base = 1.0 / double(n_base);
    const double z_c = 0.125;
    const double fine_lo = std::max(z_c, 0.5 - 8.0 * w);
    const double fine_hi = std::min(1.0, 0.5 + 8.0 * w);

    std::size_t n_cube = n_base;
    if (fine_lo <= z_c)  // layer reaches the cube panel: cap its edge spacing
        n_cube = std::max(n_cube,
                          static_cast<std::size_t>(std::ceil(3.0 * z_c / s_fine)));
    grid_detail::append_panel(g, GridPanel::Map::cube, 0.0, z_c, n_cube);

    auto affine = [&](double za, double zb, double spacing) {
        if (zb <= za) return;
        const auto cells =
            static_cast<std::size_t>(std::ceil((zb - za) / spacing - 1e-9));
        grid_detail::append_panel(g, GridPanel::Map::affine, za, zb, cells);
    };
    affine(z_c, fine_lo, h_base);
    affine(fine_lo, fine_hi, std::min(s_fine, h_base));
    affine(fine_hi, 1.0, h_base);
    if (z_max > 1.0) affine(1.0, z_max, std::min(4.0 * h_base, 0.05));

    grid_detail::build_weights(g);
    return g;
}

// Grid over an explicit ordered node list (test fixtures, stored profiles).
// One affine-style panel per run of nodes with generic non-uniform stencils.
inline Grid grid_from_nodes(std::vector<double> nodes) {
    if (nodes.size() < 4)
        throw std::invalid_argument("grid_from_nodes: need at least 4 nodes");
    if (nodes.front() != 0.0)
        throw std::invalid_argument("grid_from_nodes: nodes must start at 0");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1]))
            throw std::invalid_argument("grid_from_nodes: nodes must increase");

    Grid g;
    g.delta = 1.0;
    g.z_max = nodes.back();
    g.n_base = nodes.size() - 1;
    g.layer_center = 0.5;
    g.layer_width = 0.0;
    g.nodes = std::move(nodes);
    g.panels.push_back(GridPanel{GridPanel::Map::affine, 0.0, g.z_max, 0,
                                 g.cell_count()});

    const std::size_t nc = g.cell_count();
    g.stencil.assign(nc, 0);
    g.weights.assign(nc, {0.0, 0.0, 0.0, 0.0});
    g.node_weight.assign(g.size(), 0.0);
    for (std::size_t j = 0; j < nc; ++j) {
        const std::size_t s = std::clamp<std::size_t>(j == 0 ? 0 : j - 1, 0, nc - 3);
        g.stencil[j] = static_cast<std::uint32_t>(s);
        // integrate each cubic Lagrange basis polynomial over the cell
        const double x[4] = {g.nodes[s], g.nodes[s + 1], g.nodes[s + 2], g.nodes[s + 3]};
        const double a = g.nodes[j], b = g.nodes[j + 1];
        for (std::size_t m = 0; m < 4; ++m) {
            // Lagrange numerator in monomial form, then integrate term-wise
            double poly[4] = {1.0, 0.0, 0.0, 0.0};
            std::size_t deg = 0;
            double denom = 1.0;
            for (std::size_t r = 0; r < 4; ++r) {
                if (r == m) continue;
                for (std::size_t k = deg + 1; k-- > 0;) {
                    const double pk = poly[k];
                    poly[k + 1] += pk;
                    poly[k] = -x[r] * pk;
                }
                ++deg;
                denom *= (x[m] - x[r]);
            }
            double integral = 0.0;
            for (std::size_t k = 0; k <= deg; ++k)
                integral += poly[k] / double(k + 1) *
                            (std::pow(b, double(k + 1)) - std::pow(a, double(k + 1)));
            const double wgt = integral / denom;
            g.weights[j][m] = wgt;
            g.node_weight[s + m] += wgt;
        }
    }
    return g;
}

// Per-cell contributions and their prefix sums at nodes; prefix[k] holds the
// quadrature of the sampled integrand over [0, nodes[k]].
inline std::vector<double> integral_prefix(const Grid& g,
                                           std::span<const double> values) {
    if (values.size() != g.size())
        throw std::invalid_argument("integral_prefix: values/nodes size mismatch");
    std::vector<double> prefix(g.size(), 0.0);
    double acc = 0.0, comp = 0.0;  // Kahan
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        const auto s = g.stencil[k];
        const auto& w = g.weights[k];
        const double c = w[0] * values[s] + w[1] * values[s + 1] +
                         w[2] * values[s + 2] + w[3] * values[s + 3];
        const double y = c - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        prefix[k + 1] = acc;
    }
    return prefix;
}

inline double integrate(const Grid& g, std::span<const double> values) {
    if (values.size() != g.size())
        throw std::invalid_argument("integrate: values/nodes size mismatch");
    double acc = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double y = g.node_weight[i] * values[i] - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc;
}

namespace grid_detail {

// prefix value extended off-node: linear-interpolant trapezoid inside a cell
inline double prefix_at(const Grid& g, std::span<const double> values,
                        const std::vector<double>& prefix, double x) {
    const std::size_t j = g.locate(x);
    const double zj = g.nodes[j], zj1 = g.nodes[j + 1];
    if (x == zj) return prefix[j];
    if (x == zj1) return prefix[j + 1];
    const double t = (x - zj) / (zj1 - zj);
    const double vx = values[j] + (values[j + 1] - values[j]) * t;
    return prefix[j] + 0.5 * (values[j] + vx) * (x - zj);
}

}  // namespace grid_detail

// Quadrature over [a, b]; additive in the endpoints by construction.
inline double integrate(const Grid& g, std::span<const double> values, double a,
                        double b) {
    if (values.size() != g.size())
        throw std::invalid_argument("integrate: values/nodes size mismatch");
    if (!(0.0 <= a && a < b && b <= g.z_max))
        throw std::invalid_argument("integrate: need 0 <= a < b <= z_max");
    const std::vector<double> prefix = integral_prefix(g, values);
    return grid_detail::prefix_at(g, values, prefix, b) -
           grid_detail::prefix_at(g, values, prefix, a);
}

inline GridPtr make_grid(double delta, double z_max, std::size_t n_base) {
    return std::make_shared<const Grid>(build_grid(delta, z_max, n_base));
}

// Sample a callable at every node.
template <class F>
std::vector<double> sample(const Grid& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.nodes[i]);
    return v;
}

// Sample a callable whose value at z = 0 is undefined or infinite; the slot
// is written as 0 and never enters any quadrature weight on cube-first grids.
template <class F>
std::vector<double> sample_skip_origin(const Grid& g, F&& f) {
    std::vector<double> v(g.size());
    v[0] = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) v[i] = f(g.nodes[i]);
    return v;
}

}  // namespace lswe
