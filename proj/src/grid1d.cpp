#include "ephs/grid1d.hpp"

#include <string>

namespace ephs {

void require_node_size(const Grid1D& g, const Field& f, const char* who) {
    if (f.size() != g.node_count())
        throw std::invalid_argument(std::string(who) + ": node field size mismatch");
}

void require_cell_size(const Grid1D& g, const Field& f, const char* who) {
    if (f.size() != g.cell_count())
        throw std::invalid_argument(std::string(who) + ": cell field size mismatch");
}

Field d_nc(const Grid1D& g, const Field& node) {
    require_node_size(g, node, "d_nc");
    const std::size_t n = g.cell_count();
    const double inv = 1.0 / g.dz();
    Field out(n);
    if (g.periodic) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = (node[(i + 1) % n] - node[i]) * inv;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = (node[i + 1] - node[i]) * inv;
    }
    return out;
}

Field d_cn(const Grid1D& g, const Field& cell, double e_left, double e_right) {
    require_cell_size(g, cell, "d_cn");
    const std::size_t n = g.cell_count();
    const double inv = 1.0 / g.dz();
    Field out(g.node_count());
    if (g.periodic) {
        for (std::size_t j = 0; j < n; ++j)
            out[j] = (cell[j] - cell[(j + n - 1) % n]) * inv;
    } else {
        out[0] = (cell[0] - e_left) * inv;
        for (std::size_t j = 1; j < n; ++j)
            out[j] = (cell[j] - cell[j - 1]) * inv;
        out[n] = (e_right - cell[n - 1]) * inv;
    }
    return out;
}

Field d_cn(const Grid1D& g, const Field& cell) {
    if (g.periodic) return d_cn(g, cell, 0.0, 0.0);
    require_cell_size(g, cell, "d_cn");
    return d_cn(g, cell, cell.front(), cell.back());
}

Field avg_cn(const Grid1D& g, const Field& cell) {
    require_cell_size(g, cell, "avg_cn");
    const std::size_t n = g.cell_count();
    Field out(g.node_count());
    if (g.periodic) {
        for (std::size_t j = 0; j < n; ++j)
            out[j] = 0.5 * (cell[(j + n - 1) % n] + cell[j]);
    } else {
        out[0] = cell[0];
        for (std::size_t j = 1; j < n; ++j)
            out[j] = 0.5 * (cell[j - 1] + cell[j]);
        out[n] = cell[n - 1];
    }
    return out;
}

Field avg_nc(const Grid1D& g, const Field& node) {
    require_node_size(g, node, "avg_nc");
    const std::size_t n = g.cell_count();
    Field out(n);
    if (g.periodic) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = 0.5 * (node[i] + node[(i + 1) % n]);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = 0.5 * (node[i] + node[i + 1]);
    }
    return out;
}

double inner_cell(const Grid1D& g, const Field& a, const Field& b) {
    require_cell_size(g, a, "inner_cell");
    require_cell_size(g, b, "inner_cell");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return g.dz() * s;
}

double inner_node(const Grid1D& g, const Field& a, const Field& b) {
    require_node_size(g, a, "inner_node");
    require_node_size(g, b, "inner_node");
    if (g.periodic) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
        return g.dz() * s;
    }
    const std::size_t n = g.cell_count();
    double s = 0.5 * a[0] * b[0] + 0.5 * a[n] * b[n];
    for (std::size_t j = 1; j < n; ++j) s += a[j] * b[j];
    return g.dz() * s;
}

EndpointPair restrict_node(const Grid1D& g, const Field& node) {
    require_node_size(g, node, "restrict_node");
    if (g.periodic) return {node[0], node[0]};
    return {node.front(), node.back()};
}

EndpointPair restrict_cell(const Grid1D& g, const Field& cell) {
    require_cell_size(g, cell, "restrict_cell");
    if (g.periodic) return {cell[0], cell[0]};
    return {cell.front(), cell.back()};
}

}  // namespace ephs
