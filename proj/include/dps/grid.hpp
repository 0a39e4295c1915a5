#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dps {

// Uniform tensor-product grid on (0,L0) or (0,L0)x(0,L1) with a homogeneous
// Dirichlet boundary. Nodes carry field values, cells carry gradients.
struct Grid {
    int dim = 1;
    std::array<double, 2> extent{1.0, 1.0};
    int nodes_per_axis = 3;

    double h(int axis) const { return extent[static_cast<std::size_t>(axis)] / (nodes_per_axis - 1); }

    std::size_t nodes_axis() const { return static_cast<std::size_t>(nodes_per_axis); }
    std::size_t cells_axis() const { return static_cast<std::size_t>(nodes_per_axis - 1); }

    std::size_t node_count() const {
        std::size_t n = nodes_axis();
        return dim == 1 ? n : n * n;
    }
    std::size_t cell_count() const {
        std::size_t c = cells_axis();
        return dim == 1 ? c : c * c;
    }
    double cell_volume() const { return dim == 1 ? h(0) : h(0) * h(1); }

    std::size_t node_index(std::size_t i, std::size_t j = 0) const { return j * nodes_axis() + i; }

    bool is_boundary(std::size_t node) const {
        std::size_t n = nodes_axis();
        std::size_t i = node % n;
        if (i == 0 || i + 1 == n) return true;
        if (dim == 2) {
            std::size_t j = node / n;
            if (j == 0 || j + 1 == n) return true;
        }
        return false;
    }

    std::array<double, 2> node_pos(std::size_t node) const {
        std::size_t n = nodes_axis();
        std::array<double, 2> x{0.0, 0.0};
        x[0] = static_cast<double>(node % n) * h(0);
        if (dim == 2) x[1] = static_cast<double>(node / n) * h(1);
        return x;
    }

    // Corner nodes of a cell, lexicographic: 1D {left,right}, 2D {00,10,01,11}.
    void cell_nodes(std::size_t cell, std::size_t* out) const {
        std::size_t n = nodes_axis();
        if (dim == 1) {
            out[0] = cell;
            out[1] = cell + 1;
            return;
        }
        std::size_t c = cells_axis();
        std::size_t ci = cell % c, cj = cell / c;
        out[0] = cj * n + ci;
        out[1] = cj * n + ci + 1;
        out[2] = (cj + 1) * n + ci;
        out[3] = (cj + 1) * n + ci + 1;
    }

    std::array<double, 2> cell_center(std::size_t cell) const {
        if (dim == 1) return {(static_cast<double>(cell) + 0.5) * h(0), 0.0};
        std::size_t c = cells_axis();
        return {(static_cast<double>(cell % c) + 0.5) * h(0), (static_cast<double>(cell / c) + 0.5) * h(1)};
    }

    bool operator==(const Grid&) const = default;
};

inline Grid build_grid(int dim, std::array<double, 2> extent, int nodes_per_axis) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dimension must be 1 or 2");
    if (nodes_per_axis < 3) throw std::invalid_argument("grid: need at least 3 nodes per axis");
    for (int a = 0; a < dim; ++a)
        if (!(extent[static_cast<std::size_t>(a)] > 0.0))
            throw std::invalid_argument("grid: extent must be positive");
    if (dim == 1) extent[1] = 1.0;
    return Grid{dim, extent, nodes_per_axis};
}

// Nodal scalar field; boundary values are pinned to zero at construction.
struct Field {
    Grid grid;
    std::vector<double> v;

    explicit Field(const Grid& g) : grid(g), v(g.node_count(), 0.0) {}

    Field(const Grid& g, std::vector<double> values) : grid(g), v(std::move(values)) {
        if (v.size() != g.node_count()) throw std::invalid_argument("field: value count does not match grid");
        zero_boundary();
    }

    void zero_boundary() {
        for (std::size_t k = 0; k < v.size(); ++k)
            if (grid.is_boundary(k)) v[k] = 0.0;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) {
            double a = x < 0 ? -x : x;
            if (a > m) m = a;
        }
        return m;
    }

    bool all_zero() const {
        for (double x : v)
            if (x != 0.0) return false;
        return true;
    }
};

// Per-cell vector field (constant on each cell), e.g. a gradient. Component
// count is 1 for scalars and grid.dim for gradients; storage is cell-major.
struct CellField {
    Grid grid;
    int components = 1;
    std::vector<double> v;

    CellField(const Grid& g, int comps) : grid(g), components(comps), v(g.cell_count() * static_cast<std::size_t>(comps), 0.0) {}

    double* cell(std::size_t c) { return v.data() + c * static_cast<std::size_t>(components); }
    const double* cell(std::size_t c) const { return v.data() + c * static_cast<std::size_t>(components); }
};

// Difference-quotient gradient: 1D slope per cell; 2D averages the two
// difference quotients per axis over the opposite cell edges.
inline CellField gradient(const Field& u) {
    const Grid& g = u.grid;
    CellField out(g, g.dim);
    if (g.dim == 1) {
        double inv_h = 1.0 / g.h(0);
        for (std::size_t c = 0; c < g.cell_count(); ++c)
            out.v[c] = (u.v[c + 1] - u.v[c]) * inv_h;
        return out;
    }
    double ix = 0.5 / g.h(0), iy = 0.5 / g.h(1);
    std::size_t nodes[4];
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        g.cell_nodes(c, nodes);
        double v00 = u.v[nodes[0]], v10 = u.v[nodes[1]], v01 = u.v[nodes[2]], v11 = u.v[nodes[3]];
        double* gc = out.cell(c);
        gc[0] = (v10 - v00 + v11 - v01) * ix;
        gc[1] = (v01 - v00 + v11 - v10) * iy;
    }
    return out;
}

// Cell-sum quadrature. Nodal integrands are taken at cell midpoints by
// averaging the corner values.
inline double integrate(const Grid& g, const std::vector<double>& nodal) {
    if (nodal.size() != g.node_count()) throw std::invalid_argument("integrate: value count does not match grid");
    double vol = g.cell_volume();
    double acc = 0.0;
    if (g.dim == 1) {
        for (std::size_t c = 0; c < g.cell_count(); ++c)
            acc += 0.5 * (nodal[c] + nodal[c + 1]);
    } else {
        std::size_t nodes[4];
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            g.cell_nodes(c, nodes);
            acc += 0.25 * (nodal[nodes[0]] + nodal[nodes[1]] + nodal[nodes[2]] + nodal[nodes[3]]);
        }
    }
    return acc * vol;
}

inline double integrate(const Field& f) { return integrate(f.grid, f.v); }

inline double integrate(const CellField& f) {
    if (f.components != 1) throw std::invalid_argument("integrate: cell field must be scalar");
    double acc = 0.0;
    for (double x : f.v) acc += x;
    return acc * f.grid.cell_volume();
}

} // namespace dps
