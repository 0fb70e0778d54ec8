#pragma once

// Grid-sampled profiles, the weighted Z-norm, and the symmetric convolution.
//
// A Profile is piecewise linear between its nodes and zero beyond z_max; every
// operation below is consistent with that convention.  The Z-norm is
//   ||phi|| = sup_[0,1] |phi| + sup_[1,z_max] |phi(z)| e^(beta1 z) z^beta2,
// both parts taken over nodes.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lswe/errors.hpp"
#include "lswe/grid.hpp"

namespace lswe {

struct NormSpec {
    double beta1 = 1.0;
    double beta2 = 2.0;
};

inline NormSpec make_norm_spec(double beta1, double beta2) {
    if (!(beta1 > 0.0))
        throw std::invalid_argument("make_norm_spec: beta1 must be > 0");
    if (!(beta2 > 1.0))
        throw std::invalid_argument("make_norm_spec: beta2 must be > 1");
    return NormSpec{beta1, beta2};
}

struct Profile {
    GridPtr grid;
    std::vector<double> values;
    NormSpec norm_spec;
};

inline Profile make_profile(GridPtr grid, std::vector<double> values,
                            NormSpec norm_spec = {}) {
    if (!grid) throw std::invalid_argument("make_profile: null grid");
    if (values.size() != grid->size())
        throw std::invalid_argument("make_profile: values/nodes size mismatch");
    return Profile{std::move(grid), std::move(values), norm_spec};
}

template <class F>
Profile sample_profile(GridPtr grid, F&& f, NormSpec norm_spec = {}) {
    auto values = sample(*grid, f);
    return make_profile(std::move(grid), std::move(values), norm_spec);
}

inline bool same_grid(const GridPtr& a, const GridPtr& b) {
    return (a == b && a) || (a && b && a->nodes == b->nodes);
}

inline bool same_grid(const Profile& p, const Profile& q) {
    return same_grid(p.grid, q.grid);
}

struct ZNorm {
    double sup_part = 0.0;   // max |phi| over nodes in [0, 1]
    double tail_part = 0.0;  // max |phi| e^(beta1 z) z^beta2 over nodes in [1, z_max]
    double total() const { return sup_part + tail_part; }
};

inline ZNorm z_norm(const Profile& phi) {
    ZNorm n;
    const Grid& g = *phi.grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = g.nodes[i];
        const double a = std::fabs(phi.values[i]);
        if (z <= 1.0) n.sup_part = std::max(n.sup_part, a);
        if (z >= 1.0) {
            const double w =
                std::exp(phi.norm_spec.beta1 * z) * std::pow(z, phi.norm_spec.beta2);
            n.tail_part = std::max(n.tail_part, a * w);
        }
    }
    return n;
}

inline Profile profile_difference(const Profile& p, const Profile& q) {
    if (!same_grid(p, q))
        throw std::invalid_argument("profile_difference: grids differ");
    Profile d = p;
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= q.values[i];
    return d;
}

namespace profile_detail {

// piecewise-linear value of (nodes, v) at x, for x within [0, z_max]
inline double lerp_at(const std::vector<double>& nodes,
                      const std::vector<double>& v, std::size_t cell, double x) {
    const double za = nodes[cell], zb = nodes[cell + 1];
    const double t = (x - za) / (zb - za);
    return v[cell] + (v[cell + 1] - v[cell]) * t;
}

}  // namespace profile_detail

// (phi1 * phi2)(z) = 1/2 int_0^z phi1(z-y) phi2(y) dy at every node, with the
// integrand's off-node values by linear interpolation.  Per target node the
// integration range is cut at the merged breakpoints {y_j} and {z - y_j}; on
// each segment the integrand is a quadratic, so Simpson is exact.  Cost is
// O(n^2) over the whole grid.
inline Profile convolve(const Profile& phi1, const Profile& phi2) {
    if (!same_grid(phi1, phi2))
        throw std::invalid_argument("convolve: profiles on different grids");
    const Grid& g = *phi1.grid;
    const std::vector<double>& nodes = g.nodes;
    const std::vector<double>& v1 = phi1.values;
    const std::vector<double>& v2 = phi2.values;
    const std::size_t n = g.size();

    Profile out = phi1;
    out.values.assign(n, 0.0);

    std::vector<double> cuts;
    cuts.reserve(2 * n);
    for (std::size_t k = 1; k < n; ++k) {
        const double zk = nodes[k];
        cuts.clear();
        // merge nodes[0..k-1] with the reflections zk - nodes[k-1..0], both
        // ascending; the final breakpoint zk is pushed by the reflection of 0
        std::size_t i1 = 0, i2 = k;
        while (i1 < k || i2 > 0) {
            const double a = i1 < k ? nodes[i1] : zk + 1.0;
            const double b = i2 > 0 ? zk - nodes[i2 - 1] : zk + 1.0;
            if (a < b) {
                cuts.push_back(a);
                ++i1;
            } else if (b < a) {
                cuts.push_back(b);
                --i2;
            } else {
                cuts.push_back(a);
                ++i1;
                --i2;
            }
        }

        double acc = 0.0, comp = 0.0;  // Kahan over segments
        // cells containing y and zk - y, advanced by segment midpoints; the
        // midpoint is interior, so reflected-breakpoint rounding cannot pick
        // the wrong cell
        std::size_t c1 = 0, c2 = k - 1;
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            const double ya = cuts[s], yb = cuts[s + 1];
            if (!(yb > ya)) continue;
            const double ym = 0.5 * (ya + yb);
            while (c1 + 2 < n && nodes[c1 + 1] < ym) ++c1;
            while (c2 > 0 && nodes[c2] > zk - ym) --c2;
            auto f = [&](double y) {
                const double p2 = profile_detail::lerp_at(nodes, v2, c1, y);
                const double p1 = profile_detail::lerp_at(nodes, v1, c2, zk - y);
                return p1 * p2;
            };
            const double seg = (yb - ya) / 6.0 * (f(ya) + 4.0 * f(ym) + f(yb));
            const double y = seg - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        out.values[k] = 0.5 * acc;
    }
    return out;
}

// CSV schema: header "z,value", one row per node, full precision decimal.
inline void write_profile_csv(std::ostream& os, const Profile& phi) {
    os << "z,value\n";
    char buf[64];
    for (std::size_t i = 0; i < phi.grid->size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", phi.grid->nodes[i],
                      phi.values[i]);
        os << buf;
    }
}

inline void write_profile_csv(const std::string& path, const Profile& phi) {
    std::ofstream os(path);
    if (!os) throw IoError("write_profile_csv: cannot open " + path);
    write_profile_csv(os, phi);
    if (!os) throw IoError("write_profile_csv: write failed for " + path);
}

// Reads a profile written by write_profile_csv; the grid is rebuilt from the
// z column via grid_from_nodes.
inline Profile read_profile_csv(std::istream& is, NormSpec norm_spec = {}) {
    std::string line;
    if (!std::getline(is, line))
        throw IoError("read_profile_csv: empty input");
    if (line == "z,value\r") line.pop_back();
    if (line != "z,value")
        throw IoError("read_profile_csv: bad header '" + line + "'");
    std::vector<double> nodes, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError("read_profile_csv: bad row '" + line + "'");
        std::size_t pos = 0;
        const double z = std::stod(line.substr(0, comma), &pos);
        const double v = std::stod(line.substr(comma + 1));
        nodes.push_back(z);
        values.push_back(v);
    }
    auto grid = std::make_shared<const Grid>(grid_from_nodes(std::move(nodes)));
    return make_profile(std::move(grid), std::move(values), norm_spec);
}

inline Profile read_profile_csv(const std::string& path, NormSpec norm_spec = {}) {
    std::ifstream is(path);
    if (!is) throw IoError("read_profile_csv: cannot open " + path);
    return read_profile_csv(is, norm_spec);
}

}  // namespace lswe
