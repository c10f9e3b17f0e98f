#pragma once

// =============================================================================
// Binding components into a flat pattern and evaluating the composite system:
// state layout, causal evaluation plan, RHS, fixed-step integrators, and the
// E/S/N/H diagnostics functionals.
// =============================================================================

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ephs/components.hpp"
#include "ephs/grid1d.hpp"
#include "ephs/pattern.hpp"

namespace ephs {

struct bind_error : std::runtime_error {
    enum class Code {
        InterfaceMismatch,
        UnboundBox,
        DuplicateStateOwner,
        CausalityLoop,
        UnownedState,
        InvalidPattern,
    };
    Code code;
    bind_error(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct inadmissible_state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct nonconvergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BindingEntry {
    std::string component_id;
    std::map<std::string, double> params;
};

// One stored field: a quantity class owned by a storage component's port.
struct StateLayoutEntry {
    std::string quantity;
    Placement placement = Placement::CellField;
    std::string owner_box;
    std::string owner_port;
    std::size_t offset = 0;
    std::size_t size = 0;
};

struct Functionals {
    double energy = 0.0;
    double entropy = 0.0;
    double mass = 0.0;
    double exergy = 0.0;  // energy - theta0*entropy - mu0*mass
    std::optional<double> charge_residual;
    double boundary_power = 0.0;
};

struct RhsOptions {
    // Zero the flows emitted by irreversible components at the source; the
    // remaining sweep gives the reversible part of the dynamics.
    bool suppress_irreversible = false;
    bool suppress_reversible = false;
};

class CompositeSystem {
  public:
    // `flat` must be primitive-only; it is expanded and validated here.
    static CompositeSystem bind(const Pattern& flat,
                                const std::map<std::string, BindingEntry>& bindings,
                                const Grid1D& grid, const Environment& env);

    const Grid1D& grid() const { return grid_; }
    const Environment& env() const { return env_; }
    const Pattern& pattern() const { return pattern_; }
    const std::vector<StateLayoutEntry>& layout() const { return layout_; }
    std::size_t state_size() const { return state_size_; }

    const StateLayoutEntry* find_field(const std::string& quantity) const;
    Field extract(const std::vector<double>& state, const StateLayoutEntry& e) const;
    void insert(std::vector<double>& state, const StateLayoutEntry& e, const Field& f) const;

    std::vector<double> rhs(const std::vector<double>& state,
                            const RhsOptions& opts = {}) const;

    Functionals functionals(const std::vector<double>& state) const;

    std::vector<double> step_rk4(const std::vector<double>& state, double dt) const;
    std::vector<double> step_midpoint(const std::vector<double>& state, double dt,
                                      double tol, int max_iter) const;

    const Component* component(const std::string& box) const;
    std::vector<std::string> boxes() const;

    // Per-port effort/flow values of the last full sweep for one state; used
    // by diagnostics and the verification harness.
    struct SweepResult {
        std::map<std::string, Field> efforts;  // key "box.port"
        std::map<std::string, Field> flows;
        std::map<std::string, BoundaryValues> boundary;
        std::vector<double> derivative;
    };
    SweepResult sweep(const std::vector<double>& state, const RhsOptions& opts = {}) const;

  private:
    struct PlanNode {
        std::string box;
        std::size_t stage = 0;
    };

    Grid1D grid_;
    Environment env_;
    Pattern pattern_;  // expanded, canonical
    std::map<std::string, std::unique_ptr<Component>> components_;
    std::vector<StateLayoutEntry> layout_;
    std::size_t state_size_ = 0;

    // Junction wiring indexed per port key "box.port".
    std::map<std::string, std::size_t> junction_of_;
    std::vector<std::vector<PortRef>> junctions_;
    std::map<std::string, std::string> effort_source_;  // consumer -> producer key
    std::vector<PlanNode> plan_;

    Component::Inputs make_inputs(const std::vector<double>& state,
                                  const std::string& box,
                                  std::vector<Field>& state_storage) const;
    void check_admissible(const std::vector<double>& state) const;
};

struct SimConfig {
    double t_end = 1.0;
    double dt = 1e-3;
    int output_every = 1;
    std::string integrator = "rk4";  // rk4 | midpoint
    double midpoint_tol = 1e-12;
    int midpoint_max_iter = 200;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<Functionals> diagnostics;
};

struct RunResult {
    Trajectory trajectory;
    bool aborted = false;
    double last_good_time = 0.0;
    std::string error;
};

RunResult run(const CompositeSystem& sys, const std::vector<double>& init,
              const SimConfig& cfg);

}  // namespace ephs
