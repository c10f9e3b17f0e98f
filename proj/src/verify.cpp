#include "ephs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ephs {

namespace {

std::size_t placement_size(const Grid1D& grid, Placement p) {
    return p == Placement::NodeField ? grid.node_count() : grid.cell_count();
}

double pairing(const Grid1D& grid, Placement p, const Field& a, const Field& b) {
    return p == Placement::NodeField ? inner_node(grid, a, b) : inner_cell(grid, a, b);
}

struct ProbeEval {
    std::map<std::string, Field> efforts;  // per power port, input or output
    std::map<std::string, Field> flows;
    std::map<std::string, BoundaryValues> boundary;
};

// Draws random inputs per the component's causality and runs all stages.
ProbeEval evaluate_probe(const Component& comp, const Grid1D& grid, const Environment& env,
                         const std::map<std::string, Field>& states, ProbeRng& rng) {
    ProbeEval pe;
    std::map<std::string, Field> random_inputs_e, random_inputs_f;
    for (const auto& [port, c] : comp.causality()) {
        const PortAttribute& attr = comp.iface().ports.at(port);
        const std::size_t n = placement_size(grid, attr.quantity.placement);
        if (!c.effort_out) random_inputs_e[port] = rng.field(n, -1.0, 1.0);
        if (c.flow_consumer) random_inputs_f[port] = rng.field(n, -1.0, 1.0);
    }

    for (std::size_t s = 0; s < comp.stages().size(); ++s) {
        Component::Inputs in;
        in.grid = &grid;
        in.env = env;
        for (const auto& [port, f] : states) in.states[port] = &f;
        const auto& st = comp.stages()[s];
        for (const auto& p : st.need_efforts) {
            auto it = pe.efforts.find(p);
            in.efforts[p] = it != pe.efforts.end() ? it->second : random_inputs_e.at(p);
        }
        for (const auto& p : st.need_flows) {
            auto it = pe.flows.find(p);
            in.flows[p] = it != pe.flows.end() ? it->second : random_inputs_f.at(p);
        }
        Component::Outputs out;
        comp.evaluate(s, in, out);
        for (auto& [p, f] : out.efforts) pe.efforts[p] = std::move(f);
        for (auto& [p, f] : out.flows) pe.flows[p] = std::move(f);
        for (auto& [p, b] : out.boundary) pe.boundary[p] = b;
    }
    for (auto& [p, f] : random_inputs_e) pe.efforts.emplace(p, std::move(f));
    for (auto& [p, f] : random_inputs_f) pe.flows.emplace(p, std::move(f));
    return pe;
}

}  // namespace

std::map<std::string, Field> random_states(const Component& comp, const Grid1D& grid,
                                           ProbeRng& rng) {
    std::map<std::string, Field> states;
    for (const auto& [port, attr] : comp.iface().ports) {
        if (attr.port_class == PortClass::Boundary) continue;
        const std::size_t n = placement_size(grid, attr.quantity.placement);
        if (attr.quantity.name == "mass" || attr.quantity.name == "entropy")
            states[port] = rng.field(n, 0.5, 1.5);
        else
            states[port] = rng.field(n, -1.0, 1.0);
    }
    return states;
}

double check_power_preservation(const Component& comp, const Grid1D& grid,
                                const Environment& env, int trials, ProbeRng& rng) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto states = random_states(comp, grid, rng);
        const ProbeEval pe = evaluate_probe(comp, grid, env, states, rng);
        double total = 0.0, scale = 0.0;
        for (const auto& [port, attr] : comp.iface().ports) {
            if (attr.port_class != PortClass::Power) continue;
            const double p =
                pairing(grid, attr.quantity.placement, pe.efforts.at(port), pe.flows.at(port));
            total += p;
            scale += std::abs(p);
        }
        for (const auto& [port, b] : pe.boundary) {
            (void)port;
            const double p = boundary_pairing(b.effort, b.flow);
            total += p;
            scale += std::abs(p);
        }
        worst = std::max(worst, std::abs(total) / std::max(scale, 1e-300));
    }
    return worst;
}

OnsagerCheckResult check_onsager(const Component& comp, const Grid1D& grid,
                                 const Environment& env, int trials, ProbeRng& rng) {
    OnsagerCheckResult res;
    res.min_quadratic = std::numeric_limits<double>::infinity();

    for (int t = 0; t < trials; ++t) {
        const auto states = random_states(comp, grid, rng);
        Component::Inputs op;
        op.grid = &grid;
        op.env = env;
        for (const auto& [port, f] : states) op.states[port] = &f;
        for (const auto& [port, attr] : comp.iface().ports) {
            if (attr.port_class != PortClass::Power) continue;
            const std::size_t n = placement_size(grid, attr.quantity.placement);
            // Entropy-channel efforts are kept small so theta stays positive.
            op.efforts[port] = attr.quantity.name == "entropy" ? rng.field(n, -0.3, 0.3)
                                                               : rng.field(n, -1.0, 1.0);
        }

        auto bilinear = [&](const std::map<std::string, Field>& e1,
                            const Component::Outputs& f2,
                            const Component::Outputs& f1) {
            double a = 0.0, scale = 0.0;
            for (const auto& [port, attr] : comp.iface().ports) {
                if (attr.port_class != PortClass::Power) continue;
                const double p =
                    pairing(grid, attr.quantity.placement, e1.at(port), f2.flows.at(port));
                a += p;
                scale += std::abs(p);
            }
            // Weak-form boundary terms: the trace slot carries the first
            // argument, the flux slot the second.
            for (const auto& [port, b2] : f2.boundary) {
                const BoundaryValues& b1 = f1.boundary.at(port);
                const double p = b2.trace_is_effort ? boundary_pairing(b1.effort, b2.flow)
                                                    : boundary_pairing(b2.effort, b1.flow);
                a += p;
                scale += std::abs(p);
            }
            return std::pair<double, double>(a, scale);
        };

        // Symmetry of the frozen operator under probe swap.
        std::map<std::string, Field> e1, e2;
        for (const auto& [port, f] : op.efforts) {
            e1[port] = rng.field(f.size(), -1.0, 1.0);
            e2[port] = rng.field(f.size(), -1.0, 1.0);
        }
        Component::Outputs o1, o2;
        comp.apply_onsager(op, e1, o1);
        comp.apply_onsager(op, e2, o2);
        const auto [a12, s12] = bilinear(e1, o2, o1);
        const auto [a21, s21] = bilinear(e2, o1, o2);
        res.symmetry_residual = std::max(
            res.symmetry_residual, std::abs(a12 - a21) / std::max(s12 + s21, 1e-300));

        // Destruction rate at the operating point.
        Component::Outputs oop;
        comp.apply_onsager(op, op.efforts, oop);
        const auto [quad, qscale] = bilinear(op.efforts, oop, oop);
        (void)qscale;
        res.min_quadratic = std::min(res.min_quadratic, quad);

        // Bulk degeneracy: the operator annihilates the unshifted efforts.
        Component::Outputs odeg;
        comp.apply_onsager(op, comp.shifted_efforts(op), odeg);
        double deg = 0.0, deg_scale = 0.0;
        for (const auto& [port, f] : odeg.flows) {
            for (double v : f) deg = std::max(deg, std::abs(v));
            for (double v : oop.flows.at(port)) deg_scale = std::max(deg_scale, std::abs(v));
        }
        res.degeneracy_residual =
            std::max(res.degeneracy_residual, deg / std::max(deg_scale, 1e-300));
    }
    return res;
}

double check_effort_gradients(const Component& comp, const Grid1D& grid,
                              const Environment& env, double h, ProbeRng& rng) {
    auto states = random_states(comp, grid, rng);
    Component::Inputs in;
    in.grid = &grid;
    in.env = env;
    for (const auto& [port, f] : states) in.states[port] = &f;
    Component::Outputs out;
    comp.evaluate(0, in, out);

    double scale = 0.0;
    for (const auto& [port, e] : out.efforts) {
        (void)port;
        for (double v : e) scale = std::max(scale, std::abs(v));
    }

    double worst = 0.0;
    for (const auto& [port, attr] : comp.iface().ports) {
        if (attr.port_class != PortClass::Power) continue;
        Field& x = states.at(port);
        const bool node = attr.quantity.placement == Placement::NodeField;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double weight = grid.dz();
            if (node && !grid.periodic && (k == 0 || k + 1 == x.size())) weight *= 0.5;
            const double saved = x[k];
            x[k] = saved + h;
            const double hp = comp.exergy(in);
            x[k] = saved - h;
            const double hm = comp.exergy(in);
            x[k] = saved;
            const double fd = (hp - hm) / (2.0 * h * weight);
            worst = std::max(worst, std::abs(fd - out.efforts.at(port)[k]));
        }
    }
    return worst / std::max(scale, 1e-300);
}

TrajectoryReport check_trajectory(const Trajectory& traj) {
    TrajectoryReport rep;
    if (traj.diagnostics.empty()) return rep;
    const Functionals& first = traj.diagnostics.front();
    const Functionals& last = traj.diagnostics.back();
    rep.delta_energy = last.energy - first.energy;
    rep.delta_mass = last.mass - first.mass;
    rep.min_entropy_step = 0.0;
    rep.max_exergy_step = 0.0;
    for (std::size_t i = 1; i < traj.diagnostics.size(); ++i) {
        rep.min_entropy_step = std::min(
            rep.min_entropy_step, traj.diagnostics[i].entropy - traj.diagnostics[i - 1].entropy);
        rep.max_exergy_step = std::max(
            rep.max_exergy_step, traj.diagnostics[i].exergy - traj.diagnostics[i - 1].exergy);
    }
    for (const auto& d : traj.diagnostics) {
        if (d.charge_residual)
            rep.max_charge_residual = std::max(rep.max_charge_residual, *d.charge_residual);
        rep.scale_energy = std::max(rep.scale_energy, std::abs(d.energy));
        rep.scale_entropy = std::max(rep.scale_entropy, std::abs(d.entropy));
        rep.scale_exergy = std::max(rep.scale_exergy, std::abs(d.exergy));
    }
    return rep;
}

bool CheckReport::all_pass() const {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

std::string CheckReport::to_csv() const {
    std::ostringstream os;
    os << "check,target,residual,tolerance,pass\n";
    os << "seed,global," << seed << ",0,true\n";
    os.precision(17);
    for (const auto& r : rows)
        os << r.check << "," << r.target << "," << r.residual << "," << r.tolerance << ","
           << (r.pass ? "true" : "false") << "\n";
    return os.str();
}

CheckReport run_all_checks(const CompositeSystem& sys, const std::vector<double>& init,
                           int trials, std::uint64_t seed) {
    CheckReport rep;
    rep.seed = seed;
    ProbeRng rng(seed);
    const Environment env = sys.env();

    const Grid1D bounded(1.0, 24, false);
    const Grid1D periodic(1.0, 24, true);

    auto add = [&rep](const std::string& check, const std::string& target, double residual,
                      double tol, bool pass) {
        rep.rows.push_back({check, target, residual, tol, pass});
    };

    for (const auto& box : sys.boxes()) {
        const Component& comp = *sys.component(box);
        if (comp.structural_only()) {
            add("structural", box, 0.0, 0.0, true);
            continue;
        }
        switch (comp.fill()) {
            case Fill::Storage: {
                const double err = check_effort_gradients(comp, periodic, env, 1e-6, rng);
                add("effort-gradient", box, err, 1e-6, err <= 1e-6);
                break;
            }
            case Fill::Reversible: {
                const double rb = check_power_preservation(comp, bounded, env, trials, rng);
                add("power-bounded", box, rb, 1e-12, rb <= 1e-12);
                const double rp = check_power_preservation(comp, periodic, env, trials, rng);
                add("power-periodic", box, rp, 1e-12, rp <= 1e-12);
                break;
            }
            case Fill::Irreversible: {
                for (const Grid1D* g : {&bounded, &periodic}) {
                    const std::string suffix = g->periodic ? "-periodic" : "-bounded";
                    const OnsagerCheckResult oc = check_onsager(comp, *g, env, trials, rng);
                    add("onsager-symmetry" + suffix, box, oc.symmetry_residual, 1e-12,
                        oc.symmetry_residual <= 1e-12);
                    add("onsager-quadratic" + suffix, box, oc.min_quadratic, 0.0,
                        oc.min_quadratic >= -1e-12);
                    add("onsager-degeneracy" + suffix, box, oc.degeneracy_residual, 1e-12,
                        oc.degeneracy_residual <= 1e-12);
                }
                break;
            }
            case Fill::Composite: break;
        }
    }

    // Short trajectory check against the model-class expectations.
    bool has_irreversible = false, has_charge = false;
    for (const auto& box : sys.boxes()) {
        const Component& comp = *sys.component(box);
        if (comp.fill() == Fill::Irreversible && !comp.structural_only())
            has_irreversible = true;
        if (comp.id() == "ekc.electrostatic") has_charge = true;
    }
    SimConfig cfg;
    cfg.t_end = 0.1;
    cfg.dt = 1e-3;
    cfg.output_every = 1;
    const RunResult rr = run(sys, init, cfg);
    if (rr.aborted) {
        add("trajectory", "run", 1.0, 0.0, false);
    } else {
        const TrajectoryReport tr = check_trajectory(rr.trajectory);
        const double escale = std::max(tr.scale_energy, 1e-300);
        add("trajectory-energy", "run", std::abs(tr.delta_energy) / escale, 1e-8,
            std::abs(tr.delta_energy) / escale <= 1e-8);
        add("trajectory-mass", "run", std::abs(tr.delta_mass), 1e-12,
            std::abs(tr.delta_mass) <= 1e-12);
        if (has_irreversible) {
            const double sscale = std::max(tr.scale_entropy, 1.0);
            add("trajectory-entropy", "run", -tr.min_entropy_step / sscale, 1e-10,
                tr.min_entropy_step >= -1e-10 * sscale);
            const double hscale = std::max(tr.scale_exergy, 1.0);
            add("trajectory-exergy", "run", tr.max_exergy_step / hscale, 1e-10,
                tr.max_exergy_step <= 1e-10 * hscale);
        }
        if (has_charge)
            add("trajectory-charge", "run", tr.max_charge_residual, 1e-10,
                tr.max_charge_residual <= 1e-10);
    }
    return rep;
}

}  // namespace ephs
