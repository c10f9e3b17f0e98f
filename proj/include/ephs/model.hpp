#pragma once

// =============================================================================
// Turning a parsed model document into a runnable system: flattening the bound
// pattern, binding components, building the grid, and evaluating the
// initial-condition presets.
// =============================================================================

#include <string>
#include <vector>

#include "ephs/assembly.hpp"
#include "ephs/dsl.hpp"

namespace ephs {

struct model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BuiltModel {
    CompositeSystem system;
    std::vector<double> initial_state;
    SimConfig sim;
    Pattern flat;
};

// Flattens the named pattern (or the bound one when name is empty).
Pattern flatten_document(const ModelDocument& doc, const std::string& pattern_name = "");

Grid1D document_grid(const ModelDocument& doc);

// Requires bindings + domain sections; init entries are keyed by quantity name.
BuiltModel build_model(const ModelDocument& doc);

// Initial-condition presets: uniform(value), sine(mode, amplitude, base),
// gaussian-bump(amplitude, width, center, base), charge-from-mass(c,
// rho_neutral; cumulative integral of the mass field), values(...).
Field eval_init_preset(const Grid1D& grid, Placement placement, const InitSpec& spec,
                       const Field* mass_field);

}  // namespace ephs
