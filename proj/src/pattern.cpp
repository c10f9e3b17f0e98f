#include "ephs/pattern.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace ephs {

const char* to_string(Placement p) {
    switch (p) {
        case Placement::NodeField: return "node-field";
        case Placement::CellField: return "cell-field";
        case Placement::ScalarBoundaryValue: return "scalar-boundary-value";
    }
    return "?";
}

const char* to_string(PowerKind k) {
    switch (k) {
        case PowerKind::K: return "k";
        case PowerKind::P: return "p";
        case PowerKind::I: return "i";
    }
    return "?";
}

const char* to_string(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Both: return "both";
    }
    return "?";
}

const char* to_string(Fill f) {
    switch (f) {
        case Fill::Storage: return "storage";
        case Fill::Reversible: return "reversible";
        case Fill::Irreversible: return "irreversible";
        case Fill::Composite: return "composite";
    }
    return "?";
}

const char* to_string(ValidationCode c) {
    switch (c) {
        case ValidationCode::DanglingReference: return "dangling-reference";
        case ValidationCode::QuantityMismatch: return "quantity-mismatch";
        case ValidationCode::KindMismatch: return "kind-mismatch";
        case ValidationCode::PortReused: return "port-reused";
        case ValidationCode::BoundaryMix: return "boundary-mix";
        case ValidationCode::BoundaryAttrMismatch: return "boundary-attr-mismatch";
        case ValidationCode::FillContradiction: return "fill-contradiction";
        case ValidationCode::MultiportMismatch: return "multiport-mismatch";
        case ValidationCode::AmbiguousPortName: return "ambiguous-port-name";
    }
    return "?";
}

bool PortAttribute::operator==(const PortAttribute& o) const {
    if (port_class != o.port_class || quantity != o.quantity) return false;
    if (port_class == PortClass::Power && kind != o.kind) return false;
    if (port_class == PortClass::Boundary &&
        (side != o.side || splitting_tag != o.splitting_tag))
        return false;
    return true;
}

PortAttribute state_port(Quantity q) {
    PortAttribute a;
    a.port_class = PortClass::State;
    a.quantity = std::move(q);
    return a;
}

PortAttribute power_port(Quantity q, PowerKind k) {
    PortAttribute a;
    a.port_class = PortClass::Power;
    a.quantity = std::move(q);
    a.kind = k;
    return a;
}

PortAttribute boundary_port(Quantity q, Side side, std::string tag) {
    PortAttribute a;
    a.port_class = PortClass::Boundary;
    a.quantity = std::move(q);
    a.side = side;
    a.splitting_tag = std::move(tag);
    return a;
}

// -----------------------------------------------------------------------------
// Reference resolution
// -----------------------------------------------------------------------------

namespace {

const Interface* find_interface(const Pattern& p, const std::string& box) {
    if (box == "outer") return &p.outer;
    auto it = p.boxes.find(box);
    return it == p.boxes.end() ? nullptr : &it->second.iface;
}

// Sub-port names a reference expands to: {""} for an exact port, otherwise the
// suffixes of all ports sharing the dotted prefix. Empty set = dangling.
std::set<std::string> subport_names(const Interface& iface, const std::string& port) {
    std::set<std::string> subs;
    if (iface.has(port)) {
        subs.insert("");
        return subs;
    }
    const std::string prefix = port + ".";
    for (const auto& [name, attr] : iface.ports) {
        (void)attr;
        if (name.rfind(prefix, 0) == 0) subs.insert(name.substr(prefix.size()));
    }
    return subs;
}

}  // namespace

const PortAttribute* find_port(const Pattern& p, const PortRef& ref) {
    const Interface* iface = find_interface(p, ref.box);
    if (!iface) return nullptr;
    auto it = iface->ports.find(ref.port);
    return it == iface->ports.end() ? nullptr : &it->second;
}

bool pattern_is_flat(const Pattern& p) {
    for (const auto& [name, box] : p.boxes) {
        (void)name;
        if (box.fill == Fill::Composite) return false;
    }
    return true;
}

// -----------------------------------------------------------------------------
// Multiport expansion
// -----------------------------------------------------------------------------

Pattern expand_multiports(const Pattern& p) {
    Pattern out = p;
    out.junctions.clear();
    for (const auto& junc : p.junctions) {
        std::set<std::string> common;
        bool first = true;
        for (const auto& ref : junc.ports) {
            const Interface* iface = find_interface(p, ref.box);
            if (!iface)
                throw pattern_error(pattern_error::Code::DanglingReference,
                                    "unknown box '" + ref.box + "' in junction");
            auto subs = subport_names(*iface, ref.port);
            if (subs.empty())
                throw pattern_error(pattern_error::Code::DanglingReference,
                                    "unknown port '" + ref.str() + "' in junction");
            if (first) {
                common = subs;
                first = false;
            } else if (subs != common) {
                throw pattern_error(pattern_error::Code::MultiportMismatch,
                                    "multiport junction at '" + ref.str() +
                                        "' expands to a different sub-port set");
            }
        }
        for (const auto& sub : common) {
            Junction j;
            j.span = junc.span;
            for (const auto& ref : junc.ports)
                j.ports.push_back({ref.box, sub.empty() ? ref.port : ref.port + "." + sub});
            out.junctions.push_back(std::move(j));
        }
    }
    return out;
}

// -----------------------------------------------------------------------------
// Validation
// -----------------------------------------------------------------------------

ValidationReport validate_pattern(const Pattern& p) {
    ValidationReport rep;
    auto add = [&rep](ValidationCode c, const std::string& msg, SourceSpan span = {}) {
        rep.entries.push_back({c, msg, span});
    };

    auto check_iface = [&](const std::string& owner, const Interface& iface, Fill fill,
                           bool inner) {
        for (const auto& [name, attr] : iface.ports) {
            const std::string prefix = name + ".";
            for (const auto& [other, oattr] : iface.ports) {
                (void)oattr;
                if (other.rfind(prefix, 0) == 0)
                    add(ValidationCode::AmbiguousPortName,
                        owner + ": port '" + name + "' is a prefix of '" + other + "'");
            }
            if (inner && fill == Fill::Storage && attr.port_class == PortClass::Boundary)
                add(ValidationCode::FillContradiction,
                    owner + ": storage box declares boundary port '" + name + "'");
        }
    };
    check_iface("outer", p.outer, Fill::Composite, false);
    for (const auto& [name, box] : p.boxes) check_iface(name, box.iface, box.fill, true);

    // Resolve references and expand; record dangling/mismatch without aborting.
    std::vector<std::vector<PortRef>> expanded;
    for (const auto& junc : p.junctions) {
        std::set<std::string> common;
        bool first = true, usable = true;
        for (const auto& ref : junc.ports) {
            const Interface* iface = find_interface(p, ref.box);
            if (!iface) {
                add(ValidationCode::DanglingReference,
                    "junction references unknown box '" + ref.box + "'", junc.span);
                usable = false;
                continue;
            }
            auto subs = subport_names(*iface, ref.port);
            if (subs.empty()) {
                add(ValidationCode::DanglingReference,
                    "junction references unknown port '" + ref.str() + "'", junc.span);
                usable = false;
                continue;
            }
            if (first) {
                common = subs;
                first = false;
            } else if (subs != common) {
                add(ValidationCode::MultiportMismatch,
                    "multiport junction at '" + ref.str() +
                        "' expands to a different sub-port set",
                    junc.span);
                usable = false;
            }
        }
        if (!usable) continue;
        for (const auto& sub : common) {
            std::vector<PortRef> refs;
            for (const auto& ref : junc.ports)
                refs.push_back({ref.box, sub.empty() ? ref.port : ref.port + "." + sub});
            expanded.push_back(std::move(refs));
        }
    }

    // Each inner port in at most one junction.
    std::map<std::string, int> uses;
    for (const auto& refs : expanded)
        for (const auto& ref : refs)
            if (!ref.is_outer()) ++uses[ref.str()];
    for (const auto& [port, n] : uses)
        if (n > 1)
            add(ValidationCode::PortReused,
                "port '" + port + "' appears in " + std::to_string(n) + " junctions");

    // Per-junction attribute compatibility.
    for (const auto& refs : expanded) {
        const PortAttribute* boundary_first = nullptr;
        const PortAttribute* domain_first = nullptr;
        std::string boundary_name, domain_name;
        const PortAttribute* kind_first = nullptr;
        std::string kind_name;
        bool has_boundary = false, has_domain = false;
        for (const auto& ref : refs) {
            const PortAttribute* attr = find_port(p, ref);
            if (!attr) continue;  // already reported
            if (attr->port_class == PortClass::Boundary) {
                has_boundary = true;
                if (!boundary_first) {
                    boundary_first = attr;
                    boundary_name = ref.str();
                } else if (*boundary_first != *attr) {
                    add(ValidationCode::BoundaryAttrMismatch,
                        "boundary attributes of '" + ref.str() + "' differ from '" +
                            boundary_name + "'");
                }
            } else {
                has_domain = true;
                if (!domain_first) {
                    domain_first = attr;
                    domain_name = ref.str();
                } else if (domain_first->quantity != attr->quantity) {
                    add(ValidationCode::QuantityMismatch,
                        "quantity of '" + ref.str() + "' (" + attr->quantity.name +
                            ") differs from '" + domain_name + "' (" +
                            domain_first->quantity.name + ")");
                }
                if (attr->port_class == PortClass::Power) {
                    if (!kind_first) {
                        kind_first = attr;
                        kind_name = ref.str();
                    } else if (kind_first->kind != attr->kind) {
                        add(ValidationCode::KindMismatch,
                            "power kind of '" + ref.str() + "' (" + to_string(attr->kind) +
                                ") differs from '" + kind_name + "' (" +
                                to_string(kind_first->kind) + ")");
                    }
                }
            }
        }
        if (has_boundary && has_domain)
            add(ValidationCode::BoundaryMix,
                "junction at '" + refs.front().str() +
                    "' connects boundary ports with state/power ports");
    }

    return rep;
}

// -----------------------------------------------------------------------------
// Composition
// -----------------------------------------------------------------------------

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

Pattern compose(const Pattern& host_in, const std::string& box, const Pattern& inner_in,
                const std::map<std::string, std::string>& renaming_in) {
    // Junctions drawn against multiport prefixes are expanded up front so the
    // rewiring below only sees concrete ports.
    const Pattern host = expand_multiports(host_in);
    const Pattern inner = expand_multiports(inner_in);
    auto hit = host.boxes.find(box);
    if (hit == host.boxes.end())
        throw pattern_error(pattern_error::Code::DanglingReference,
                            "compose: host has no box '" + box + "'");
    if (hit->second.fill != Fill::Composite)
        throw pattern_error(pattern_error::Code::NotComposite,
                            "compose: box '" + box + "' is not composite");
    const Interface& box_iface = hit->second.iface;

    // Normalize the renaming (identity when empty) and verify the bijection.
    std::map<std::string, std::string> renaming = renaming_in;
    if (renaming.empty())
        for (const auto& [name, attr] : inner.outer.ports) {
            (void)attr;
            renaming[name] = name;
        }
    if (renaming.size() != inner.outer.ports.size() ||
        renaming.size() != box_iface.ports.size())
        throw pattern_error(pattern_error::Code::InterfaceMismatch,
                            "compose: renaming is not a bijection between the inner "
                            "outer interface and box '" +
                                box + "'");
    std::map<std::string, std::string> reverse;  // box port -> inner outer port
    for (const auto& [from, to] : renaming) {
        auto iit = inner.outer.ports.find(from);
        auto bit = box_iface.ports.find(to);
        if (iit == inner.outer.ports.end() || bit == box_iface.ports.end())
            throw pattern_error(pattern_error::Code::InterfaceMismatch,
                                "compose: renaming entry '" + from + " -> " + to +
                                    "' names a missing port");
        if (iit->second != bit->second)
            throw pattern_error(pattern_error::Code::InterfaceMismatch,
                                "compose: attributes of inner port '" + from +
                                    "' and box port '" + to + "' differ");
        if (!reverse.emplace(to, from).second)
            throw pattern_error(pattern_error::Code::InterfaceMismatch,
                                "compose: renaming maps two ports onto '" + to + "'");
    }

    Pattern out;
    out.outer = host.outer;
    for (const auto& [name, b] : host.boxes)
        if (name != box) out.boxes.emplace(name, b);
    for (const auto& [name, b] : inner.boxes) {
        const std::string pref = box + "." + name;
        if (!out.boxes.emplace(pref, b).second)
            throw pattern_error(pattern_error::Code::NameCollision,
                                "compose: box name '" + pref + "' already exists");
    }

    // Net merging: host junctions and inner junctions, linked wherever a host
    // junction touches a box port whose renamed inner outer port has a junction.
    const std::size_t nh = host.junctions.size();
    const std::size_t ni = inner.junctions.size();
    UnionFind uf(nh + ni);

    std::map<std::string, std::vector<std::size_t>> inner_outer_port_juncs;
    for (std::size_t j = 0; j < ni; ++j)
        for (const auto& ref : inner.junctions[j].ports)
            if (ref.is_outer()) inner_outer_port_juncs[ref.port].push_back(j);

    for (std::size_t h = 0; h < nh; ++h)
        for (const auto& ref : host.junctions[h].ports) {
            if (ref.box != box) continue;
            auto rit = reverse.find(ref.port);
            if (rit == reverse.end())
                throw pattern_error(pattern_error::Code::DanglingReference,
                                    "compose: junction references unknown port '" +
                                        ref.str() + "'");
            for (std::size_t j : inner_outer_port_juncs[rit->second]) uf.unite(h, nh + j);
        }

    std::map<std::size_t, Junction> merged;
    auto sink = [&](std::size_t id) -> Junction& { return merged[uf.find(id)]; };
    for (std::size_t h = 0; h < nh; ++h) {
        Junction& dst = sink(h);
        if (!dst.span.valid()) dst.span = host.junctions[h].span;
        for (const auto& ref : host.junctions[h].ports)
            if (ref.box != box) dst.ports.push_back(ref);
    }
    for (std::size_t j = 0; j < ni; ++j) {
        Junction& dst = sink(nh + j);
        for (const auto& ref : inner.junctions[j].ports)
            if (!ref.is_outer()) dst.ports.push_back({box + "." + ref.box, ref.port});
    }

    for (auto& [root, junc] : merged) {
        (void)root;
        if (!junc.ports.empty()) out.junctions.push_back(std::move(junc));
    }
    return canonicalize(out);
}

// -----------------------------------------------------------------------------
// Flattening
// -----------------------------------------------------------------------------

namespace {

Pattern flatten_impl(const Pattern& p, const std::map<std::string, Pattern>& library,
                     std::vector<std::string>& visiting) {
    Pattern out = p;
    for (;;) {
        std::string target;
        for (const auto& [name, box] : out.boxes)
            if (box.fill == Fill::Composite) {
                target = name;
                break;
            }
        if (target.empty()) return out;

        const std::string& ref = out.boxes.at(target).composite_ref;
        auto lit = library.find(ref);
        if (lit == library.end())
            throw pattern_error(pattern_error::Code::MissingDefinition,
                                "flatten: no definition for pattern '" + ref +
                                    "' (box '" + target + "')");
        if (std::find(visiting.begin(), visiting.end(), ref) != visiting.end())
            throw pattern_error(pattern_error::Code::CyclicDefinition,
                                "flatten: pattern '" + ref + "' transitively contains itself");
        visiting.push_back(ref);
        Pattern inner_flat = flatten_impl(lit->second, library, visiting);
        visiting.pop_back();
        out = compose(out, target, inner_flat);
    }
}

}  // namespace

Pattern flatten(const Pattern& p, const std::map<std::string, Pattern>& library) {
    std::vector<std::string> visiting;
    return flatten_impl(p, library, visiting);
}

// -----------------------------------------------------------------------------
// Canonical form and renaming
// -----------------------------------------------------------------------------

Pattern canonicalize(const Pattern& p) {
    Pattern out = p;
    for (auto& junc : out.junctions) std::sort(junc.ports.begin(), junc.ports.end());
    std::sort(out.junctions.begin(), out.junctions.end(),
              [](const Junction& a, const Junction& b) {
                  if (a.ports.empty() || b.ports.empty()) return b.ports.empty() < a.ports.empty();
                  return a.ports < b.ports;
              });
    return out;
}

Pattern rename_boxes(const Pattern& p, const std::map<std::string, std::string>& names) {
    Pattern out;
    out.outer = p.outer;
    auto renamed = [&](const std::string& n) {
        auto it = names.find(n);
        return it == names.end() ? n : it->second;
    };
    for (const auto& [name, box] : p.boxes) {
        if (!out.boxes.emplace(renamed(name), box).second)
            throw pattern_error(pattern_error::Code::NameCollision,
                                "rename_boxes: name '" + renamed(name) + "' collides");
    }
    for (const auto& junc : p.junctions) {
        Junction j;
        j.span = junc.span;
        for (const auto& ref : junc.ports)
            j.ports.push_back({ref.is_outer() ? ref.box : renamed(ref.box), ref.port});
        out.junctions.push_back(std::move(j));
    }
    return canonicalize(out);
}

// -----------------------------------------------------------------------------
// Junction equations
// -----------------------------------------------------------------------------

JunctionEquationSet junction_equations(const Pattern& pattern) {
    const Pattern p = expand_multiports(pattern);
    JunctionEquationSet eqs;
    std::set<std::string> connected;

    for (const auto& junc : p.junctions) {
        JunctionEquationSet::PerJunction per;
        std::vector<PortRef> inner_power, outer_power, state_refs;
        bool boundary = false;
        for (const auto& ref : junc.ports) {
            if (!ref.is_outer()) connected.insert(ref.str());
            const PortAttribute* attr = find_port(p, ref);
            if (!attr) continue;
            switch (attr->port_class) {
                case PortClass::State: state_refs.push_back(ref); break;
                case PortClass::Boundary:
                    boundary = true;
                    [[fallthrough]];
                case PortClass::Power:
                    (ref.is_outer() ? outer_power : inner_power).push_back(ref);
                    break;
            }
        }
        std::sort(inner_power.begin(), inner_power.end());
        std::sort(outer_power.begin(), outer_power.end());
        std::sort(state_refs.begin(), state_refs.end());

        if (!boundary) {
            per.state_chain = inner_power;
            per.state_chain.insert(per.state_chain.end(), state_refs.begin(), state_refs.end());
        }
        per.effort_chain = inner_power;
        per.effort_chain.insert(per.effort_chain.end(), outer_power.begin(), outer_power.end());
        per.inner_flows = inner_power;
        per.outer_flows = outer_power;
        per.net_flow = !inner_power.empty() || !outer_power.empty();
        eqs.junctions.push_back(std::move(per));
    }

    auto collect_unconnected = [&](const std::string& box, const Interface& iface) {
        for (const auto& [name, attr] : iface.ports) {
            if (attr.port_class == PortClass::State) continue;
            PortRef ref{box, name};
            if (!connected.count(ref.str()) && box != "outer")
                eqs.zero_flow_ports.push_back(ref);
            if (box == "outer") {
                bool in_junction = false;
                for (const auto& junc : p.junctions)
                    for (const auto& r : junc.ports)
                        if (r == ref) in_junction = true;
                if (!in_junction) eqs.zero_flow_ports.push_back(ref);
            }
        }
    };
    for (const auto& [name, box] : p.boxes) collect_unconnected(name, box.iface);
    collect_unconnected("outer", p.outer);
    std::sort(eqs.zero_flow_ports.begin(), eqs.zero_flow_ports.end());

    return eqs;
}

const std::map<std::string, Placement>& builtin_quantities() {
    static const std::map<std::string, Placement> table = {
        {"mass", Placement::CellField},
        {"entropy", Placement::CellField},
        {"specific_momentum", Placement::NodeField},
        {"momentum", Placement::NodeField},
        {"electric_displacement", Placement::NodeField},
        {"magnetic_flux", Placement::CellField},
    };
    return table;
}

std::vector<std::string> JunctionEquationSet::render() const {
    std::vector<std::string> lines;
    auto chain = [](const std::vector<PortRef>& refs, const char* var) {
        std::ostringstream os;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (i) os << " = ";
            os << refs[i].str() << "." << var;
        }
        return os.str();
    };
    for (const auto& per : junctions) {
        if (per.state_chain.size() > 1) lines.push_back(chain(per.state_chain, "x"));
        if (per.effort_chain.size() > 1) lines.push_back(chain(per.effort_chain, "e"));
        if (per.net_flow) {
            std::ostringstream os;
            if (per.inner_flows.empty()) {
                os << "0";
            } else {
                for (std::size_t i = 0; i < per.inner_flows.size(); ++i) {
                    if (i) os << " + ";
                    os << per.inner_flows[i].str() << ".f";
                }
            }
            os << " = ";
            if (per.outer_flows.empty()) {
                os << "0";
            } else {
                for (std::size_t i = 0; i < per.outer_flows.size(); ++i) {
                    if (i) os << " + ";
                    os << per.outer_flows[i].str() << ".f";
                }
            }
            lines.push_back(os.str());
        }
    }
    for (const auto& ref : zero_flow_ports) lines.push_back(ref.str() + ".f = 0");
    return lines;
}

}  // namespace ephs
