#pragma once

// Uniform structured grids (2D with unit thickness, or 3D) for two-point flux
// discretizations. Interior facets are stored once with cell_a < cell_b; jumps
// use the convention [v] = v_a - v_b and the facet normal points from a to b.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermoflow {

struct Facet {
    int cell_a = -1;            // lower cell index ("+" side)
    int cell_b = -1;            // higher cell index ("-" side)
    int axis = 0;               // normal direction; normal points from a to b (+axis)
    double area = 0.0;
    double dist = 0.0;          // center-to-center distance
};

struct BoundaryFacet {
    int cell = -1;
    int axis = 0;
    int side = 0;               // 0: low end of the axis, 1: high end
    double area = 0.0;
    double dist = 0.0;          // cell center to face
};

class Grid {
public:
    Grid() = default;

    int ndim() const { return ndim_; }
    const std::array<int, 3>& dims() const { return dims_; }
    const std::array<double, 3>& cell_size() const { return h_; }
    const std::array<double, 3>& lengths() const { return len_; }
    int num_cells() const { return ncells_; }
    int num_facets() const { return static_cast<int>(facets_.size()); }

    const std::vector<Facet>& facets() const { return facets_; }
    const std::vector<BoundaryFacet>& boundary_facets() const { return bfacets_; }

    double cell_volume(int) const { return vol_; }

    std::array<double, 3> cell_center(int cell) const {
        check_cell(cell);
        const auto ijk = cell_ijk(cell);
        return {(ijk[0] + 0.5) * h_[0], (ijk[1] + 0.5) * h_[1],
                ndim_ == 3 ? (ijk[2] + 0.5) * h_[2] : 0.0};
    }

    std::array<int, 3> cell_ijk(int cell) const {
        check_cell(cell);
        const int i = cell % dims_[0];
        const int j = (cell / dims_[0]) % dims_[1];
        const int k = cell / (dims_[0] * dims_[1]);
        return {i, j, k};
    }

    int cell_index(int i, int j, int k = 0) const {
        return i + dims_[0] * (j + dims_[1] * k);
    }

    // (facet index, neighbor cell) pairs for one cell.
    std::vector<std::pair<int, int>> facet_neighbors(int cell) const {
        check_cell(cell);
        std::vector<std::pair<int, int>> out;
        for (int q = nbr_ptr_[cell]; q < nbr_ptr_[cell + 1]; ++q) {
            const Facet& f = facets_[nbr_facet_[q]];
            out.emplace_back(nbr_facet_[q], f.cell_a == cell ? f.cell_b : f.cell_a);
        }
        return out;
    }

    friend Grid build_grid(const std::vector<int>& dims, const std::vector<double>& lengths);

private:
    void check_cell(int cell) const {
        if (cell < 0 || cell >= ncells_)
            throw std::out_of_range("grid: cell index " + std::to_string(cell) +
                                    " out of range [0," + std::to_string(ncells_) + ")");
    }

    int ndim_ = 0;
    int ncells_ = 0;
    double vol_ = 0.0;
    std::array<int, 3> dims_{1, 1, 1};
    std::array<double, 3> h_{0.0, 0.0, 0.0};
    std::array<double, 3> len_{0.0, 0.0, 0.0};
    std::vector<Facet> facets_;
    std::vector<BoundaryFacet> bfacets_;
    std::vector<int> nbr_ptr_;      // CSR layout of cell -> incident interior facets
    std::vector<int> nbr_facet_;
};

inline Grid build_grid(const std::vector<int>& dims, const std::vector<double>& lengths) {
    if (dims.size() != lengths.size() || (dims.size() != 2 && dims.size() != 3))
        throw std::invalid_argument("build_grid: dims and lengths must both have size 2 or 3");
    for (std::size_t a = 0; a < dims.size(); ++a) {
        if (dims[a] <= 0)
            throw std::invalid_argument("build_grid: extent " + std::to_string(dims[a]) +
                                        " on axis " + std::to_string(a) + " must be positive");
        if (!(lengths[a] > 0.0))
            throw std::invalid_argument("build_grid: length " + std::to_string(lengths[a]) +
                                        " on axis " + std::to_string(a) + " must be positive");
    }

    Grid g;
    g.ndim_ = static_cast<int>(dims.size());
    for (int a = 0; a < g.ndim_; ++a) {
        g.dims_[a] = dims[a];
        g.len_[a] = lengths[a];
        g.h_[a] = lengths[a] / dims[a];
    }
    if (g.ndim_ == 2) {
        g.dims_[2] = 1;
        g.len_[2] = 1.0;      // unit thickness
        g.h_[2] = 1.0;
    }
    g.ncells_ = g.dims_[0] * g.dims_[1] * g.dims_[2];
    g.vol_ = g.h_[0] * g.h_[1] * g.h_[2];

    const std::array<int, 3> stride{1, g.dims_[0], g.dims_[0] * g.dims_[1]};
    for (int axis = 0; axis < g.ndim_; ++axis) {
        const double area = g.vol_ / g.h_[axis];
        for (int k = 0; k < g.dims_[2]; ++k)
            for (int j = 0; j < g.dims_[1]; ++j)
                for (int i = 0; i < g.dims_[0]; ++i) {
                    const std::array<int, 3> ijk{i, j, k};
                    const int c = g.cell_index(i, j, k);
                    if (ijk[axis] + 1 < g.dims_[axis]) {
                        Facet f;
                        f.cell_a = c;
                        f.cell_b = c + stride[axis];
                        f.axis = axis;
                        f.area = area;
                        f.dist = g.h_[axis];
                        g.facets_.push_back(f);
                    }
                    for (int side = 0; side < 2; ++side) {
                        if ((side == 0 && ijk[axis] == 0) ||
                            (side == 1 && ijk[axis] == g.dims_[axis] - 1)) {
                            BoundaryFacet b;
                            b.cell = c;
                            b.axis = axis;
                            b.side = side;
                            b.area = area;
                            b.dist = 0.5 * g.h_[axis];
                            g.bfacets_.push_back(b);
                        }
                    }
                }
    }

    g.nbr_ptr_.assign(g.ncells_ + 1, 0);
    for (const Facet& f : g.facets_) {
        ++g.nbr_ptr_[f.cell_a + 1];
        ++g.nbr_ptr_[f.cell_b + 1];
    }
    for (int c = 0; c < g.ncells_; ++c) g.nbr_ptr_[c + 1] += g.nbr_ptr_[c];
    g.nbr_facet_.resize(g.facets_.size() * 2);
    std::vector<int> fill(g.nbr_ptr_.begin(), g.nbr_ptr_.end() - 1);
    for (int e = 0; e < g.num_facets(); ++e) {
        g.nbr_facet_[fill[g.facets_[e].cell_a]++] = e;
        g.nbr_facet_[fill[g.facets_[e].cell_b]++] = e;
    }
    return g;
}

} // namespace thermoflow
