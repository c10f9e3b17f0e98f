#pragma once

// =============================================================================
// The primitive component library: storage energies and efforts, power-
// preserving (Dirac) relations, and symmetric non-negative (Onsager)
// relations, discretized on Grid1D.
//
// Each component instance is bound to one box of a flat pattern. Evaluation is
// staged: a stage consumes port efforts/flows and produces port efforts/flows
// plus boundary-port values. Storage components additionally report their
// discrete energy and exergy functionals.
// =============================================================================

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ephs/grid1d.hpp"
#include "ephs/pattern.hpp"

namespace ephs {

struct eval_error : std::runtime_error {
    enum class Code {
        NonPositiveDensity,
        NonPositiveTemperature,
        NegativeViscosity,
        NonPositivePermittivity,
        NonPositivePermeability,
        InadmissibleState,
        BadParameter,
        StructuralOnly,
    };
    Code code;
    eval_error(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Values of a boundary port at the two endpoints. `trace_is_effort` marks
// which slot restricts an input effort (used by the weak-form symmetry probe);
// the other slot is the associated flux.
struct BoundaryValues {
    EndpointPair flow{0.0, 0.0};
    EndpointPair effort{0.0, 0.0};
    bool trace_is_effort = true;
};

struct Environment {
    double theta0 = 1.0;
    double mu0 = 0.0;
};

class Component {
  public:
    virtual ~Component() = default;

    struct Causality {
        bool effort_out = false;   // component produces this port's effort
        bool flow_consumer = false;  // component consumes this port's flow
    };

    struct Stage {
        std::vector<std::string> need_efforts;
        std::vector<std::string> need_flows;
        std::vector<std::string> give_efforts;
        std::vector<std::string> give_flows;
    };

    struct Inputs {
        const Grid1D* grid = nullptr;
        Environment env;
        std::map<std::string, Field> efforts;        // by port name
        std::map<std::string, Field> flows;          // by port name
        std::map<std::string, const Field*> states;  // by port name
    };

    struct Outputs {
        std::map<std::string, Field> efforts;
        std::map<std::string, Field> flows;
        std::map<std::string, BoundaryValues> boundary;
    };

    const std::string& id() const { return id_; }
    Fill fill() const { return fill_; }
    bool structural_only() const { return structural_; }
    const Interface& iface() const { return iface_; }
    const std::map<std::string, Causality>& causality() const { return causality_; }
    const std::vector<Stage>& stages() const { return stages_; }
    const std::map<std::string, double>& params() const { return params_; }

    virtual void evaluate(std::size_t stage, const Inputs& in, Outputs& out) const = 0;

    // Storage components: discrete energy and exergy of the bound state.
    virtual double energy(const Inputs& in) const;
    virtual double exergy(const Inputs& in) const;

    // Irreversible components: the Onsager operator frozen at the operating
    // inputs, applied to arbitrary probe efforts.
    virtual void apply_onsager(const Inputs& operating,
                               const std::map<std::string, Field>& probe_efforts,
                               Outputs& out) const;

    // e' = e with the environment shifts restored (theta0 on entropy channels,
    // mu0 on mass channels); apply_onsager(e') must vanish in the bulk.
    std::map<std::string, Field> shifted_efforts(const Inputs& in) const;

  protected:
    std::string id_;
    Fill fill_ = Fill::Storage;
    bool structural_ = false;
    Interface iface_;
    std::map<std::string, Causality> causality_;
    std::vector<Stage> stages_;
    std::map<std::string, double> params_;
};

// Builds a registered component bound to `box_iface`. Throws
// pattern_error::InterfaceMismatch when the box interface does not match the
// component's canonical interface, eval_error::BadParameter for bad params.
//
// Registered ids: ke, ie.barotropic, ie.entropy, pps, sa, adv, th, vol, ee,
// me, emc, el, ekc.electrostatic, and the structural-only shr, kec, res.
std::unique_ptr<Component> make_component(const std::string& id, const Interface& box_iface,
                                          const std::map<std::string, double>& params);

// Canonical interface of a registered component. For `adv` the entropy channel
// is included iff with_entropy is true (other ids ignore the flag).
Interface component_interface(const std::string& id, bool with_entropy = true);

std::vector<std::string> registered_component_ids();

}  // namespace ephs
