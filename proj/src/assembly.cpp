#include "ephs/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace ephs {

namespace {

constexpr double kAdmissibleFloor = 1e-12;

std::string key(const std::string& box, const std::string& port) { return box + "." + port; }
std::string key(const PortRef& r) { return r.str(); }

}  // namespace

// -----------------------------------------------------------------------------
// Binding
// -----------------------------------------------------------------------------

CompositeSystem CompositeSystem::bind(const Pattern& flat_in,
                                      const std::map<std::string, BindingEntry>& bindings,
                                      const Grid1D& grid, const Environment& env) {
    CompositeSystem sys;
    sys.grid_ = grid;
    sys.env_ = env;

    Pattern flat = canonicalize(expand_multiports(flat_in));
    if (!pattern_is_flat(flat))
        throw bind_error(bind_error::Code::InvalidPattern, "bind: pattern is not flat");
    ValidationReport rep = validate_pattern(flat);
    if (!rep.ok()) {
        std::ostringstream os;
        os << "bind: pattern does not validate:";
        for (const auto& e : rep.entries) os << "\n  [" << to_string(e.code) << "] " << e.message;
        throw bind_error(bind_error::Code::InvalidPattern, os.str());
    }
    sys.pattern_ = flat;

    // Construct components.
    for (const auto& [box_name, box] : flat.boxes) {
        auto bit = bindings.find(box_name);
        if (bit == bindings.end())
            throw bind_error(bind_error::Code::UnboundBox,
                             "bind: box '" + box_name + "' has no binding");
        auto comp = make_component(bit->second.component_id, box.iface, bit->second.params);
        if (comp->fill() != box.fill)
            throw bind_error(bind_error::Code::InterfaceMismatch,
                             "bind: component '" + bit->second.component_id + "' has class " +
                                 to_string(comp->fill()) + " but box '" + box_name +
                                 "' is typed " + to_string(box.fill));
        sys.components_.emplace(box_name, std::move(comp));
    }

    // Junction table.
    for (const auto& junc : flat.junctions) {
        const std::size_t id = sys.junctions_.size();
        sys.junctions_.push_back(junc.ports);
        for (const auto& ref : junc.ports)
            if (!ref.is_outer()) sys.junction_of_[key(ref)] = id;
    }

    // State layout: one stored field per quantity class claimed by storage
    // power ports; the alphabetically first storage port owns the field.
    // Two storage ports at one junction would each claim the same state.
    for (const auto& refs : sys.junctions_) {
        std::vector<std::string> storage_ports;
        for (const auto& ref : refs) {
            if (ref.is_outer()) continue;
            const auto& comp = sys.components_.at(ref.box);
            const PortAttribute& attr = comp->iface().ports.at(ref.port);
            if (attr.port_class == PortClass::Power && comp->fill() == Fill::Storage)
                storage_ports.push_back(key(ref));
        }
        if (storage_ports.size() > 1) {
            std::ostringstream os;
            os << "bind: storage ports";
            for (const auto& p : storage_ports) os << " '" << p << "'";
            os << " claim the same junction's state";
            throw bind_error(bind_error::Code::DuplicateStateOwner, os.str());
        }
    }

    std::map<std::string, StateLayoutEntry> classes;
    for (const auto& [box_name, comp] : sys.components_) {
        if (comp->fill() != Fill::Storage) continue;
        for (const auto& [port, attr] : comp->iface().ports) {
            if (attr.port_class != PortClass::Power) continue;
            auto it = classes.find(attr.quantity.name);
            if (it == classes.end()) {
                StateLayoutEntry e;
                e.quantity = attr.quantity.name;
                e.placement = attr.quantity.placement;
                e.owner_box = box_name;
                e.owner_port = port;
                classes.emplace(attr.quantity.name, e);
            }
            // Later storage ports of the same class share the stored field;
            // the junction equations make their flows agree.
        }
    }
    std::size_t offset = 0;
    for (auto& [name, e] : classes) {
        (void)name;
        e.offset = offset;
        e.size = e.placement == Placement::NodeField ? grid.node_count() : grid.cell_count();
        offset += e.size;
        sys.layout_.push_back(e);
    }
    sys.state_size_ = offset;

    // Every state-reading port must resolve to a stored field.
    for (const auto& [box_name, comp] : sys.components_) {
        for (const auto& [port, attr] : comp->iface().ports) {
            if (attr.port_class == PortClass::Boundary) continue;
            if (attr.port_class == PortClass::State && !classes.count(attr.quantity.name))
                throw bind_error(bind_error::Code::UnownedState,
                                 "bind: state port '" + key(box_name, port) +
                                     "' reads quantity '" + attr.quantity.name +
                                     "' which no storage component owns");
        }
    }

    // Effort sources and flow consumers per junction.
    auto causality_of = [&sys](const PortRef& ref) -> const Component::Causality* {
        if (ref.is_outer()) return nullptr;
        const auto& comp = sys.components_.at(ref.box);
        auto it = comp->causality().find(ref.port);
        return it == comp->causality().end() ? nullptr : &it->second;
    };
    for (const auto& refs : sys.junctions_) {
        std::vector<PortRef> sources, consumers;
        bool has_power = false;
        for (const auto& ref : refs) {
            const Component::Causality* c = causality_of(ref);
            if (!c) continue;
            has_power = true;
            if (c->effort_out) sources.push_back(ref);
            if (c->flow_consumer) consumers.push_back(ref);
        }
        if (!has_power) continue;
        if (sources.size() > 1)
            throw bind_error(bind_error::Code::CausalityLoop,
                             "bind: junction at '" + refs.front().str() +
                                 "' has more than one effort source");
        if (consumers.size() > 1)
            throw bind_error(bind_error::Code::CausalityLoop,
                             "bind: junction at '" + refs.front().str() +
                                 "' has more than one flow consumer");
        if (!sources.empty())
            for (const auto& ref : refs) {
                const Component::Causality* c = causality_of(ref);
                if (c && !c->effort_out) sys.effort_source_[key(ref)] = key(sources.front());
            }
    }

    // Topological evaluation plan over (box, stage) nodes.
    struct NodeInfo {
        PlanNode node;
        std::set<std::size_t> deps;
    };
    std::vector<NodeInfo> nodes;
    std::map<std::string, std::size_t> effort_producer_node;  // "box.port" -> node idx
    std::map<std::string, std::size_t> flow_producer_node;
    for (const auto& [box_name, comp] : sys.components_) {
        for (std::size_t s = 0; s < comp->stages().size(); ++s) {
            const std::size_t idx = nodes.size();
            nodes.push_back({{box_name, s}, {}});
            for (const auto& p : comp->stages()[s].give_efforts)
                effort_producer_node[key(box_name, p)] = idx;
            for (const auto& p : comp->stages()[s].give_flows)
                flow_producer_node[key(box_name, p)] = idx;
        }
    }
    std::size_t idx = 0;
    for (const auto& [box_name, comp] : sys.components_) {
        for (std::size_t s = 0; s < comp->stages().size(); ++s, ++idx) {
            if (s > 0) nodes[idx].deps.insert(idx - 1);
            for (const auto& p : comp->stages()[s].need_efforts) {
                auto sit = sys.effort_source_.find(key(box_name, p));
                if (sit == sys.effort_source_.end()) continue;  // unconnected: zero effort
                auto pit = effort_producer_node.find(sit->second);
                if (pit != effort_producer_node.end()) nodes[idx].deps.insert(pit->second);
            }
            for (const auto& p : comp->stages()[s].need_flows) {
                auto jit = sys.junction_of_.find(key(box_name, p));
                if (jit == sys.junction_of_.end()) continue;  // unconnected: zero flow
                for (const auto& ref : sys.junctions_[jit->second]) {
                    if (ref.is_outer() || key(ref) == key(box_name, p)) continue;
                    auto fit = flow_producer_node.find(key(ref));
                    if (fit != flow_producer_node.end()) nodes[idx].deps.insert(fit->second);
                }
            }
        }
    }

    std::vector<std::size_t> indegree(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> fwd(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t d : nodes[i].deps) {
            fwd[d].push_back(i);
            ++indegree[i];
        }
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        const std::size_t i = ready.front();
        ready.pop_front();
        order.push_back(i);
        for (std::size_t j : fwd[i])
            if (--indegree[j] == 0) ready.push_back(j);
    }
    if (order.size() != nodes.size()) {
        std::ostringstream os;
        os << "bind: causality loop through";
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (indegree[i] > 0) os << " '" << nodes[i].node.box << "'";
        throw bind_error(bind_error::Code::CausalityLoop, os.str());
    }
    for (std::size_t i : order) sys.plan_.push_back(nodes[i].node);

    return sys;
}

// -----------------------------------------------------------------------------
// State access
// -----------------------------------------------------------------------------

const StateLayoutEntry* CompositeSystem::find_field(const std::string& quantity) const {
    for (const auto& e : layout_)
        if (e.quantity == quantity) return &e;
    return nullptr;
}

Field CompositeSystem::extract(const std::vector<double>& state,
                               const StateLayoutEntry& e) const {
    return Field(state.begin() + static_cast<std::ptrdiff_t>(e.offset),
                 state.begin() + static_cast<std::ptrdiff_t>(e.offset + e.size));
}

void CompositeSystem::insert(std::vector<double>& state, const StateLayoutEntry& e,
                             const Field& f) const {
    if (f.size() != e.size)
        throw std::invalid_argument("insert: field size mismatch for " + e.quantity);
    std::copy(f.begin(), f.end(), state.begin() + static_cast<std::ptrdiff_t>(e.offset));
}

const Component* CompositeSystem::component(const std::string& box) const {
    auto it = components_.find(box);
    return it == components_.end() ? nullptr : it->second.get();
}

std::vector<std::string> CompositeSystem::boxes() const {
    std::vector<std::string> out;
    for (const auto& [name, c] : components_) {
        (void)c;
        out.push_back(name);
    }
    return out;
}

void CompositeSystem::check_admissible(const std::vector<double>& state) const {
    if (state.size() != state_size_)
        throw std::invalid_argument("rhs: state vector size mismatch");
    for (const auto& e : layout_) {
        if (e.quantity != "mass") continue;
        for (std::size_t i = 0; i < e.size; ++i)
            if (!(state[e.offset + i] >= kAdmissibleFloor))
                throw inadmissible_state_error("mass density fell below the admissible floor");
    }
}

Component::Inputs CompositeSystem::make_inputs(const std::vector<double>& state,
                                               const std::string& box,
                                               std::vector<Field>& state_storage) const {
    Component::Inputs in;
    in.grid = &grid_;
    in.env = env_;
    const Component& comp = *components_.at(box);
    for (const auto& [port, attr] : comp.iface().ports) {
        if (attr.port_class == PortClass::Boundary) continue;
        const StateLayoutEntry* e = find_field(attr.quantity.name);
        if (!e) continue;
        state_storage.push_back(extract(state, *e));
        in.states[port] = &state_storage.back();
    }
    return in;
}

// -----------------------------------------------------------------------------
// Evaluation sweep
// -----------------------------------------------------------------------------

CompositeSystem::SweepResult CompositeSystem::sweep(const std::vector<double>& state,
                                                    const RhsOptions& opts) const {
    check_admissible(state);
    SweepResult res;

    auto field_length = [this](const PortAttribute& attr) {
        return attr.quantity.placement == Placement::NodeField ? grid_.node_count()
                                                               : grid_.cell_count();
    };

    // State fields must outlive the component evaluations of this sweep.
    std::vector<std::unique_ptr<std::vector<Field>>> keepalive;

    auto suppressed = [&](const Component& c) {
        if (c.fill() == Fill::Irreversible && opts.suppress_irreversible) return true;
        if (c.fill() == Fill::Reversible && opts.suppress_reversible) return true;
        return false;
    };

    auto flow_sum_for = [&](const std::string& port_key,
                            const PortAttribute& attr) -> Field {
        Field sum(field_length(attr), 0.0);
        auto jit = junction_of_.find(port_key);
        if (jit == junction_of_.end()) return sum;  // isolated: zero flow
        for (const auto& ref : junctions_[jit->second]) {
            if (ref.is_outer() || key(ref) == port_key) continue;
            auto fit = res.flows.find(key(ref));
            if (fit == res.flows.end()) continue;
            if (suppressed(*components_.at(ref.box))) continue;
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] -= fit->second[i];
        }
        // Outer flows are zero for an isolated run, so the net-flow equation
        // reduces to: consumer flow = -(sum of other inner flows).
        return sum;
    };

    for (const auto& node : plan_) {
        const Component& comp = *components_.at(node.box);
        auto storage = std::make_unique<std::vector<Field>>();
        Component::Inputs in = make_inputs(state, node.box, *storage);
        keepalive.push_back(std::move(storage));

        const Component::Stage& st = comp.stages()[node.stage];
        for (const auto& p : st.need_efforts) {
            const PortAttribute& attr = comp.iface().ports.at(p);
            auto sit = effort_source_.find(key(node.box, p));
            if (sit != effort_source_.end()) {
                auto eit = res.efforts.find(sit->second);
                in.efforts[p] = eit != res.efforts.end()
                                    ? eit->second
                                    : Field(field_length(attr), 0.0);
            } else {
                in.efforts[p] = Field(field_length(attr), 0.0);
            }
        }
        for (const auto& p : st.need_flows)
            in.flows[p] = flow_sum_for(key(node.box, p), comp.iface().ports.at(p));

        Component::Outputs out;
        comp.evaluate(node.stage, in, out);
        for (auto& [p, f] : out.efforts) res.efforts[key(node.box, p)] = std::move(f);
        for (auto& [p, f] : out.flows) res.flows[key(node.box, p)] = std::move(f);
        for (auto& [p, b] : out.boundary) res.boundary[key(node.box, p)] = b;
    }

    // Storage derivatives from the owning ports' net-flow equations.
    res.derivative.assign(state_size_, 0.0);
    for (const auto& e : layout_) {
        const Component& owner = *components_.at(e.owner_box);
        const PortAttribute& attr = owner.iface().ports.at(e.owner_port);
        Field f = flow_sum_for(key(e.owner_box, e.owner_port), attr);
        std::copy(f.begin(), f.end(),
                  res.derivative.begin() + static_cast<std::ptrdiff_t>(e.offset));
    }
    return res;
}

std::vector<double> CompositeSystem::rhs(const std::vector<double>& state,
                                         const RhsOptions& opts) const {
    return sweep(state, opts).derivative;
}

// -----------------------------------------------------------------------------
// Functionals
// -----------------------------------------------------------------------------

Functionals CompositeSystem::functionals(const std::vector<double>& state) const {
    Functionals f;
    std::vector<std::vector<Field>> keepers;
    for (const auto& [box, comp] : components_) {
        if (comp->fill() != Fill::Storage) continue;
        keepers.emplace_back();
        Component::Inputs in = make_inputs(state, box, keepers.back());
        f.energy += comp->energy(in);
    }
    if (const StateLayoutEntry* e = find_field("entropy")) {
        const Field sigma = extract(state, *e);
        double s = 0.0;
        for (double v : sigma) s += v;
        f.entropy = grid_.dz() * s;
    }
    if (const StateLayoutEntry* e = find_field("mass")) {
        const Field rho = extract(state, *e);
        double s = 0.0;
        for (double v : rho) s += v;
        f.mass = grid_.dz() * s;
    }
    f.exergy = f.energy - env_.theta0 * f.entropy - env_.mu0 * f.mass;

    // Charge constraint residual, reported when the model couples an electric
    // storage with the electro-kinetic coupling: max |d(d~) - c*(rho - rho_n)|.
    const Component* ekc = nullptr;
    bool has_ee = false;
    for (const auto& [box, comp] : components_) {
        (void)box;
        if (comp->id() == "ekc.electrostatic") ekc = comp.get();
        if (comp->id() == "ee") has_ee = true;
    }
    if (ekc && has_ee) {
        const StateLayoutEntry* de = find_field("electric_displacement");
        const StateLayoutEntry* re = find_field("mass");
        if (de && re) {
            const Field d = extract(state, *de);
            const Field rho = extract(state, *re);
            const double c = ekc->params().count("c") ? ekc->params().at("c") : 1.0;
            const double rho_neutral = ekc->params().count("rho_neutral")
                                           ? ekc->params().at("rho_neutral")
                                           : 0.0;
            const Field dd = d_nc(grid_, d);
            double worst = 0.0;
            for (std::size_t i = 0; i < dd.size(); ++i)
                worst = std::max(worst, std::abs(dd[i] - c * (rho[i] - rho_neutral)));
            f.charge_residual = worst;
        }
    }

    SweepResult sr = sweep(state);
    for (const auto& [port, b] : sr.boundary) {
        (void)port;
        f.boundary_power += boundary_pairing(b.effort, b.flow);
    }
    return f;
}

// -----------------------------------------------------------------------------
// Integrators
// -----------------------------------------------------------------------------

namespace {

std::vector<double> axpy(const std::vector<double>& x, double a,
                         const std::vector<double>& y) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
    return out;
}

}  // namespace

std::vector<double> CompositeSystem::step_rk4(const std::vector<double>& state,
                                              double dt) const {
    if (dt == 0.0) return state;
    const std::vector<double> k1 = rhs(state);
    const std::vector<double> k2 = rhs(axpy(state, 0.5 * dt, k1));
    const std::vector<double> k3 = rhs(axpy(state, 0.5 * dt, k2));
    const std::vector<double> k4 = rhs(axpy(state, dt, k3));
    std::vector<double> out(state.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

std::vector<double> CompositeSystem::step_midpoint(const std::vector<double>& state,
                                                   double dt, double tol,
                                                   int max_iter) const {
    if (dt == 0.0) return state;
    if (!(tol > 0.0)) throw std::invalid_argument("step_midpoint: tol must be positive");
    std::vector<double> y = axpy(state, dt, rhs(state));  // explicit Euler predictor
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> mid(state.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (state[i] + y[i]);
        const std::vector<double> f = rhs(mid);
        std::vector<double> next = axpy(state, dt, f);
        double resid = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            resid = std::max(resid, std::abs(next[i] - y[i]));
            scale = std::max(scale, std::abs(next[i]));
        }
        y = std::move(next);
        if (resid <= tol * std::max(1.0, scale)) return y;
    }
    throw nonconvergence_error("implicit midpoint did not converge in " +
                               std::to_string(max_iter) + " iterations");
}

// -----------------------------------------------------------------------------
// Fixed-step driver
// -----------------------------------------------------------------------------

RunResult run(const CompositeSystem& sys, const std::vector<double>& init,
              const SimConfig& cfg) {
    RunResult res;
    if (!(cfg.dt > 0.0) && cfg.t_end > 0.0)
        throw std::invalid_argument("run: dt must be positive");
    if (cfg.t_end < 0.0) throw std::invalid_argument("run: t_end must be non-negative");

    std::vector<double> state = init;
    double t = 0.0;
    const long total_steps =
        cfg.t_end == 0.0 ? 0 : std::lround(std::ceil(cfg.t_end / cfg.dt - 1e-9));

    auto record = [&](double time, const std::vector<double>& s) {
        res.trajectory.times.push_back(time);
        res.trajectory.states.push_back(s);
        res.trajectory.diagnostics.push_back(sys.functionals(s));
    };

    try {
        record(0.0, state);
        for (long step = 1; step <= total_steps; ++step) {
            const double dt = std::min(cfg.dt, cfg.t_end - t);
            if (cfg.integrator == "midpoint")
                state = sys.step_midpoint(state, dt, cfg.midpoint_tol, cfg.midpoint_max_iter);
            else
                state = sys.step_rk4(state, dt);
            t += dt;
            if (step % std::max(1, cfg.output_every) == 0 || step == total_steps)
                record(t, state);
            res.last_good_time = t;
        }
    } catch (const inadmissible_state_error& e) {
        res.aborted = true;
        res.error = e.what();
    } catch (const nonconvergence_error& e) {
        res.aborted = true;
        res.error = e.what();
    } catch (const eval_error& e) {
        res.aborted = true;
        res.error = e.what();
    }
    return res;
}

}  // namespace ephs
