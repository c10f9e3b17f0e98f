#pragma once

// =============================================================================
// Discrete calculus on the interval [0, L] (bounded) or the circle (periodic).
//
// Two field types realize the staggering:
//   NodeField -- pointwise samples at grid nodes (straight 0-forms)
//   CellField -- per-unit-length densities at cell centers (twisted top-forms)
//
// The difference operators d_nc (node -> cell) and d_cn (cell -> node) satisfy
// an exact summation-by-parts identity together with the trapezoid node inner
// product and the copy-adjacent ghost policy:
//
//   <e, d_nc g>_cell + <d_cn e, g>_node = e[n-1]*g[n] - e[0]*g[0]   (bounded)
//                                       = 0                          (periodic)
//
// The averaging operators avg_cn / avg_nc are exact adjoints of each other
// with respect to the same inner products.
// =============================================================================

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ephs {

using Field = std::vector<double>;

struct Grid1D {
    double length = 1.0;
    std::size_t cells = 2;
    bool periodic = false;

    Grid1D() = default;
    Grid1D(double L, std::size_t n, bool per) : length(L), cells(n), periodic(per) {
        if (n < 2) throw std::invalid_argument("Grid1D: need at least 2 cells");
        if (!(L > 0.0)) throw std::invalid_argument("Grid1D: length must be positive");
    }

    double dz() const { return length / static_cast<double>(cells); }
    std::size_t node_count() const { return periodic ? cells : cells + 1; }
    std::size_t cell_count() const { return cells; }

    double node_coord(std::size_t j) const { return dz() * static_cast<double>(j); }
    double cell_coord(std::size_t i) const { return dz() * (static_cast<double>(i) + 0.5); }

    bool operator==(const Grid1D& o) const {
        return length == o.length && cells == o.cells && periodic == o.periodic;
    }
};

// Boundary values of a node or cell field, (left, right).
using EndpointPair = std::pair<double, double>;

// d_nc: node field -> cell field, (g[i+1] - g[i]) / dz.
Field d_nc(const Grid1D& g, const Field& node);

// d_cn: cell field -> node field, (e[j] - e[j-1]) / dz at interior nodes.
// On bounded grids the two boundary nodes use the ghost values e_left/e_right;
// the copy-adjacent choice (e_left = e[0], e_right = e[n-1]) makes the
// summation-by-parts identity exact. Ghosts are ignored on periodic grids.
Field d_cn(const Grid1D& g, const Field& cell, double e_left, double e_right);

// d_cn with the copy-adjacent ghost policy (boundary nodes evaluate to zero).
Field d_cn(const Grid1D& g, const Field& cell);

// Two-point means between the staggered locations. Boundary nodes copy the
// adjacent cell value on bounded grids.
Field avg_cn(const Grid1D& g, const Field& cell);
Field avg_nc(const Grid1D& g, const Field& node);

// Inner products: plain dz-weighted sum on cells, trapezoid weights on nodes
// (plain sum when periodic).
double inner_cell(const Grid1D& g, const Field& a, const Field& b);
double inner_node(const Grid1D& g, const Field& a, const Field& b);

// Endpoint samples of a node field; on periodic grids both ends are node 0.
EndpointPair restrict_node(const Grid1D& g, const Field& node);

// Values of the first and last cell; the discrete boundary trace of a cell
// quantity (adjacent-cell restriction, consistent with the ghost policy).
EndpointPair restrict_cell(const Grid1D& g, const Field& cell);

// The oriented boundary pairing of eq-style endpoint pairs:
// (a*b)|right - (a*b)|left. Zero contribution convention for periodic grids
// is the caller's responsibility.
inline double boundary_pairing(const EndpointPair& a, const EndpointPair& b) {
    return a.second * b.second - a.first * b.first;
}

// Size guards used by the operators above.
void require_node_size(const Grid1D& g, const Field& f, const char* who);
void require_cell_size(const Grid1D& g, const Field& f, const char* who);

}  // namespace ephs
