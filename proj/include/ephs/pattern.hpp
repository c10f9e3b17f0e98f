#pragma once

// =============================================================================
// Interconnection patterns: interfaces, junctions, validation, multiport
// expansion, composition and flattening.
//
// A pattern is a purely syntactic object: named inner boxes (each an interface
// plus a fill class), an outer interface, and junctions connecting port
// references. All operations are pure functions returning new patterns.
// =============================================================================

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ephs {

// -----------------------------------------------------------------------------
// Port attributes
// -----------------------------------------------------------------------------

enum class Placement { NodeField, CellField, ScalarBoundaryValue };

const char* to_string(Placement p);

struct Quantity {
    std::string name;
    Placement placement = Placement::CellField;

    bool operator==(const Quantity& o) const {
        return name == o.name && placement == o.placement;
    }
    bool operator!=(const Quantity& o) const { return !(*this == o); }
};

enum class PortClass { State, Power, Boundary };

// The three power-port kinds: kinetic/magnetic, potential/electric, internal.
enum class PowerKind { K, P, I };

const char* to_string(PowerKind k);

enum class Side { Left, Right, Both };

const char* to_string(Side s);

struct PortAttribute {
    PortClass port_class = PortClass::State;
    Quantity quantity;
    PowerKind kind = PowerKind::K;   // power ports only
    Side side = Side::Both;          // boundary ports only
    std::string splitting_tag;       // boundary ports only

    bool operator==(const PortAttribute& o) const;
    bool operator!=(const PortAttribute& o) const { return !(*this == o); }
};

PortAttribute state_port(Quantity q);
PortAttribute power_port(Quantity q, PowerKind k);
PortAttribute boundary_port(Quantity q, Side side, std::string tag);

// -----------------------------------------------------------------------------
// Interfaces, boxes, junctions
// -----------------------------------------------------------------------------

struct Interface {
    // Port names may be dotted (prefix.sub) to form multiport groups.
    std::map<std::string, PortAttribute> ports;

    bool operator==(const Interface& o) const { return ports == o.ports; }
    bool has(const std::string& name) const { return ports.count(name) != 0; }
};

enum class Fill { Storage, Reversible, Irreversible, Composite };

const char* to_string(Fill f);

struct SourceSpan {
    int line = 0;
    int column = 0;
    bool valid() const { return line > 0; }
};

struct Box {
    Interface iface;
    Fill fill = Fill::Storage;
    std::string composite_ref;  // pattern name, Fill::Composite only
    SourceSpan span;

    bool operator==(const Box& o) const {
        return iface == o.iface && fill == o.fill && composite_ref == o.composite_ref;
    }
};

// A reference to a port of an inner box or of the outer interface. The port
// component may name a multiport prefix before expansion.
struct PortRef {
    std::string box;   // box name, or "outer"
    std::string port;

    bool is_outer() const { return box == "outer"; }
    std::string str() const { return box + "." + port; }

    bool operator==(const PortRef& o) const { return box == o.box && port == o.port; }
    bool operator<(const PortRef& o) const {
        return box != o.box ? box < o.box : port < o.port;
    }
};

struct Junction {
    std::vector<PortRef> ports;
    SourceSpan span;

    bool operator==(const Junction& o) const { return ports == o.ports; }
};

struct Pattern {
    Interface outer;
    std::map<std::string, Box> boxes;
    std::vector<Junction> junctions;

    bool operator==(const Pattern& o) const {
        return outer == o.outer && boxes == o.boxes && junctions == o.junctions;
    }
};

// -----------------------------------------------------------------------------
// Validation
// -----------------------------------------------------------------------------

enum class ValidationCode {
    DanglingReference,
    QuantityMismatch,
    KindMismatch,
    PortReused,
    BoundaryMix,
    BoundaryAttrMismatch,
    FillContradiction,
    MultiportMismatch,
    AmbiguousPortName,
};

const char* to_string(ValidationCode c);

struct ValidationEntry {
    ValidationCode code;
    std::string message;
    SourceSpan span;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    bool ok() const { return entries.empty(); }
};

ValidationReport validate_pattern(const Pattern& p);

// -----------------------------------------------------------------------------
// Operations
// -----------------------------------------------------------------------------

struct pattern_error : std::runtime_error {
    enum class Code {
        MultiportMismatch,
        InterfaceMismatch,
        NotComposite,
        NameCollision,
        MissingDefinition,
        CyclicDefinition,
        DanglingReference,
    };
    Code code;
    pattern_error(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Replaces every junction touching a multiport prefix by one junction per
// sub-port. Idempotent. Throws MultiportMismatch when prefixes at one junction
// expand to unequal sub-port name sets, DanglingReference for unknown refs.
Pattern expand_multiports(const Pattern& p);

// Substitutes `inner` for the composite box `box` of `host`. `renaming` maps
// inner outer-port names to host box port names (bijective, attribute-equal);
// an empty map means the identity renaming.
Pattern compose(const Pattern& host, const std::string& box, const Pattern& inner,
                const std::map<std::string, std::string>& renaming = {});

// Recursively substitutes library patterns for all composite boxes (identity
// renaming; composite boxes name their definition via composite_ref).
Pattern flatten(const Pattern& p, const std::map<std::string, Pattern>& library);

// Canonical form: junctions sorted by smallest participant, refs sorted within.
Pattern canonicalize(const Pattern& p);

// Renames boxes via the given map (and junction refs accordingly); names not
// in the map are kept. Used for isomorphism-up-to-prefix comparisons.
Pattern rename_boxes(const Pattern& p, const std::map<std::string, std::string>& names);

// -----------------------------------------------------------------------------
// Junction equations
// -----------------------------------------------------------------------------

struct JunctionEquationSet {
    struct PerJunction {
        // State equality chain: inner power ports, then all state ports.
        std::vector<PortRef> state_chain;
        // Effort equality chain: inner, then outer power/boundary ports.
        std::vector<PortRef> effort_chain;
        std::vector<PortRef> inner_flows;
        std::vector<PortRef> outer_flows;
        bool net_flow = false;
    };
    std::vector<PerJunction> junctions;
    // Unconnected power/boundary ports: their flow is identically zero
    // (isolated boundary condition / outer stub).
    std::vector<PortRef> zero_flow_ports;

    std::vector<std::string> render() const;
};

// Requires a flat, valid, multiport-expanded pattern.
JunctionEquationSet junction_equations(const Pattern& p);

// Helpers shared with the assembly layer.
const PortAttribute* find_port(const Pattern& p, const PortRef& ref);
bool pattern_is_flat(const Pattern& p);

// Built-in quantity prelude: name -> field placement.
const std::map<std::string, Placement>& builtin_quantities();

}  // namespace ephs
