#include "ephs/components.hpp"

#include <algorithm>
#include <cmath>

#include "ephs/eos.hpp"

namespace ephs {

namespace {

// Elementwise helpers.
Field mul(const Field& a, const Field& b) {
    Field out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Field mul(double c, const Field& a) {
    Field out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
    return out;
}

Field div(const Field& a, const Field& b) {
    Field out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / b[i];
    return out;
}

Field sub(const Field& a, const Field& b) {
    Field out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Field shift(const Field& a, double c) {
    Field out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c;
    return out;
}

Quantity q(const std::string& name) {
    return Quantity{name, builtin_quantities().at(name)};
}

Quantity qb(const std::string& name) { return Quantity{name, Placement::ScalarBoundaryValue}; }

const Field& state_of(const Component::Inputs& in, const std::string& port,
                      const char* who) {
    auto it = in.states.find(port);
    if (it == in.states.end() || !it->second)
        throw eval_error(eval_error::Code::InadmissibleState,
                         std::string(who) + ": missing state for port '" + port + "'");
    return *it->second;
}

const Field& effort_of(const Component::Inputs& in, const std::string& port,
                       const char* who) {
    auto it = in.efforts.find(port);
    if (it == in.efforts.end())
        throw eval_error(eval_error::Code::InadmissibleState,
                         std::string(who) + ": missing effort input '" + port + "'");
    return it->second;
}

const Field& flow_of(const Component::Inputs& in, const std::string& port, const char* who) {
    auto it = in.flows.find(port);
    if (it == in.flows.end())
        throw eval_error(eval_error::Code::InadmissibleState,
                         std::string(who) + ": missing flow input '" + port + "'");
    return it->second;
}

void require_positive(const Field& f, eval_error::Code code, const char* what) {
    for (double v : f)
        if (!(v > 0.0)) throw eval_error(code, std::string(what) + " must stay positive");
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace

double Component::energy(const Inputs&) const { return 0.0; }
double Component::exergy(const Inputs&) const { return 0.0; }

void Component::apply_onsager(const Inputs&, const std::map<std::string, Field>&,
                              Outputs&) const {
    throw eval_error(eval_error::Code::StructuralOnly,
                     id_ + ": not an irreversible component");
}

std::map<std::string, Field> Component::shifted_efforts(const Inputs& in) const {
    std::map<std::string, Field> out;
    for (const auto& [port, attr] : iface_.ports) {
        if (attr.port_class != PortClass::Power) continue;
        auto it = in.efforts.find(port);
        if (it == in.efforts.end()) continue;
        if (attr.quantity.name == "entropy")
            out[port] = shift(it->second, in.env.theta0);
        else if (attr.quantity.name == "mass")
            out[port] = shift(it->second, in.env.mu0);
        else
            out[port] = it->second;
    }
    return out;
}

// =============================================================================
// Storage components
// =============================================================================

namespace {

// Kinetic energy: E = integral of rho * v^2 / 2.
class KeStorage final : public Component {
  public:
    KeStorage() {
        id_ = "ke";
        fill_ = Fill::Storage;
        iface_.ports["p_s"] = power_port(q("specific_momentum"), PowerKind::K);
        iface_.ports["m"] = power_port(q("mass"), PowerKind::K);
        causality_["p_s"] = {true, true};
        causality_["m"] = {true, true};
        stages_ = {{{}, {}, {"p_s", "m"}, {}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field& v = state_of(in, "p_s", "ke");
        const Field& rho = state_of(in, "m", "ke");
        require_positive(rho, eval_error::Code::NonPositiveDensity, "ke: density");
        out.efforts["p_s"] = mul(avg_cn(g, rho), v);
        out.efforts["m"] = avg_nc(g, half_speed2(v));
    }

    double energy(const Inputs& in) const override {
        const Grid1D& g = *in.grid;
        const Field& v = state_of(in, "p_s", "ke");
        const Field& rho = state_of(in, "m", "ke");
        return inner_cell(g, rho, avg_nc(g, half_speed2(v)));
    }

    double exergy(const Inputs& in) const override { return energy(in); }

  private:
    static Field half_speed2(const Field& v) {
        Field out(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) out[j] = 0.5 * v[j] * v[j];
        return out;
    }
};

// Internal energy of a barotropic fluid: H = integral of U(rho) - mu0*rho.
class IeBarotropic final : public Component {
  public:
    explicit IeBarotropic(const std::map<std::string, double>& params)
        : eos_(param_or(params, "K", 1.0), param_or(params, "gamma", 2.0)) {
        id_ = "ie.barotropic";
        fill_ = Fill::Storage;
        params_ = params;
        iface_.ports["m"] = power_port(q("mass"), PowerKind::I);
        causality_["m"] = {true, true};
        stages_ = {{{}, {}, {"m"}, {}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Field& rho = state_of(in, "m", "ie.barotropic");
        require_positive(rho, eval_error::Code::NonPositiveDensity, "ie: density");
        Field e(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) e[i] = eos_.mu(rho[i]) - in.env.mu0;
        out.efforts["m"] = std::move(e);
    }

    double energy(const Inputs& in) const override {
        const Field& rho = state_of(in, "m", "ie.barotropic");
        double s = 0.0;
        for (double r : rho) s += eos_.U(r);
        return in.grid->dz() * s;
    }

    double exergy(const Inputs& in) const override {
        const Field& rho = state_of(in, "m", "ie.barotropic");
        double s = 0.0;
        for (double r : rho) s += eos_.U(r) - in.env.mu0 * r;
        return in.grid->dz() * s;
    }

    const PolytropicEos& eos() const { return eos_; }

  private:
    PolytropicEos eos_;
};

// Internal energy with entropy: H = integral of U - theta0*sigma - mu0*rho.
class IeEntropy final : public Component {
  public:
    explicit IeEntropy(const std::map<std::string, double>& params)
        : eos_(param_or(params, "K", 1.0), param_or(params, "gamma", 1.4),
               param_or(params, "c_v", 1.0)) {
        id_ = "ie.entropy";
        fill_ = Fill::Storage;
        params_ = params;
        iface_.ports["s"] = power_port(q("entropy"), PowerKind::I);
        iface_.ports["m"] = power_port(q("mass"), PowerKind::I);
        causality_["s"] = {true, true};
        causality_["m"] = {true, true};
        stages_ = {{{}, {}, {"s", "m"}, {}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Field& sigma = state_of(in, "s", "ie.entropy");
        const Field& rho = state_of(in, "m", "ie.entropy");
        require_positive(rho, eval_error::Code::NonPositiveDensity, "ie: density");
        Field es(rho.size()), em(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double th = eos_.theta(sigma[i], rho[i]);
            if (!(th > 0.0))
                throw eval_error(eval_error::Code::InadmissibleState,
                                 "ie.entropy: temperature must stay positive");
            es[i] = th - in.env.theta0;
            em[i] = eos_.mu(sigma[i], rho[i]) - in.env.mu0;
        }
        out.efforts["s"] = std::move(es);
        out.efforts["m"] = std::move(em);
    }

    double energy(const Inputs& in) const override {
        const Field& sigma = state_of(in, "s", "ie.entropy");
        const Field& rho = state_of(in, "m", "ie.entropy");
        double s = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) s += eos_.U(sigma[i], rho[i]);
        return in.grid->dz() * s;
    }

    double exergy(const Inputs& in) const override {
        const Field& sigma = state_of(in, "s", "ie.entropy");
        const Field& rho = state_of(in, "m", "ie.entropy");
        double s = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i)
            s += eos_.U(sigma[i], rho[i]) - in.env.theta0 * sigma[i] - in.env.mu0 * rho[i];
        return in.grid->dz() * s;
    }

    const IdealGasEntropyEos& eos() const { return eos_; }

  private:
    IdealGasEntropyEos eos_;
};

// Electric energy: E = <d, d> / (2 eps), effort e = d / eps.
class EeStorage final : public Component {
  public:
    explicit EeStorage(const std::map<std::string, double>& params) {
        id_ = "ee";
        fill_ = Fill::Storage;
        params_ = params;
        eps_ = param_or(params, "eps0", 1.0) * param_or(params, "eps_r", 1.0);
        if (!(eps_ > 0.0))
            throw eval_error(eval_error::Code::NonPositivePermittivity,
                             "ee: permittivity must be positive");
        iface_.ports["d"] = power_port(q("electric_displacement"), PowerKind::P);
        causality_["d"] = {true, true};
        stages_ = {{{}, {}, {"d"}, {}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        out.efforts["d"] = mul(1.0 / eps_, state_of(in, "d", "ee"));
    }

    double energy(const Inputs& in) const override {
        const Field& d = state_of(in, "d", "ee");
        return 0.5 * inner_node(*in.grid, d, d) / eps_;
    }

    double exergy(const Inputs& in) const override { return energy(in); }

  private:
    double eps_ = 1.0;
};

// Magnetic energy: E = <b, b> / (2 mu), effort h = b / mu.
class MeStorage final : public Component {
  public:
    explicit MeStorage(const std::map<std::string, double>& params) {
        id_ = "me";
        fill_ = Fill::Storage;
        params_ = params;
        mu_ = param_or(params, "mu0_mag", 1.0) * param_or(params, "mu_r", 1.0);
        if (!(mu_ > 0.0))
            throw eval_error(eval_error::Code::NonPositivePermeability,
                             "me: permeability must be positive");
        iface_.ports["b"] = power_port(q("magnetic_flux"), PowerKind::K);
        causality_["b"] = {true, true};
        stages_ = {{{}, {}, {"b"}, {}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        out.efforts["b"] = mul(1.0 / mu_, state_of(in, "b", "me"));
    }

    double energy(const Inputs& in) const override {
        const Field& b = state_of(in, "b", "me");
        return 0.5 * inner_cell(*in.grid, b, b) / mu_;
    }

    double exergy(const Inputs& in) const override { return energy(in); }

  private:
    double mu_ = 1.0;
};

// =============================================================================
// Reversible components
// =============================================================================

// Transformation between specific momentum and momentum density:
//   p_s.f = -p.f / rho,  p.e = p_s.e / rho  (rho interpolated to nodes).
class Pps final : public Component {
  public:
    Pps() {
        id_ = "pps";
        fill_ = Fill::Reversible;
        iface_.ports["p_s"] = power_port(q("specific_momentum"), PowerKind::K);
        iface_.ports["p"] = power_port(q("momentum"), PowerKind::K);
        iface_.ports["m"] = state_port(q("mass"));
        causality_["p_s"] = {false, false};
        causality_["p"] = {true, true};
        stages_ = {{{"p_s"}, {}, {"p"}, {}}, {{}, {"p"}, {}, {"p_s"}}};
    }

    void evaluate(std::size_t stage, const Inputs& in, Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field& rho = state_of(in, "m", "pps");
        require_positive(rho, eval_error::Code::NonPositiveDensity, "pps: density");
        const Field rho_n = avg_cn(g, rho);
        if (stage == 0) {
            out.efforts["p"] = div(effort_of(in, "p_s", "pps"), rho_n);
        } else {
            out.flows["p_s"] = mul(-1.0, div(flow_of(in, "p", "pps"), rho_n));
        }
    }
};

// Self-advection of kinetic energy:
//   m.f = d(p_s.e),  p_s.f = d(m.e),  b_k = (-p_s.e, m.e) restricted.
class Sa final : public Component {
  public:
    Sa() {
        id_ = "sa";
        fill_ = Fill::Reversible;
        iface_.ports["p_s"] = power_port(q("specific_momentum"), PowerKind::K);
        iface_.ports["m"] = power_port(q("mass"), PowerKind::K);
        iface_.ports["b_k"] = boundary_port(qb("mass"), Side::Both, "sa_k");
        causality_["p_s"] = {false, false};
        causality_["m"] = {false, false};
        stages_ = {{{"p_s", "m"}, {}, {}, {"p_s", "m"}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field& gs = effort_of(in, "p_s", "sa");
        const Field& ec = effort_of(in, "m", "sa");
        out.flows["m"] = d_nc(g, gs);
        out.flows["p_s"] = d_cn(g, ec);
        if (!g.periodic) {
            BoundaryValues b;
            const EndpointPair t = restrict_node(g, gs);
            b.flow = {-t.first, -t.second};
            b.effort = restrict_cell(g, ec);
            out.boundary["b_k"] = b;
        }
    }
};

// Advection of internal energy (mass channel, optional entropy channel):
//   m.f = d(rho_n * p.e),  s.f = d(sigma_n * p.e),
//   p.f = rho_n * d(m.e) + sigma_n * d(s.e).
class Adv final : public Component {
  public:
    explicit Adv(bool with_entropy) : with_entropy_(with_entropy) {
        id_ = "adv";
        fill_ = Fill::Reversible;
        iface_.ports["p"] = power_port(q("momentum"), PowerKind::K);
        iface_.ports["m"] = power_port(q("mass"), PowerKind::I);
        iface_.ports["b_m"] = boundary_port(qb("mass"), Side::Both, "adv_m");
        causality_["p"] = {false, false};
        causality_["m"] = {false, false};
        Stage st{{"p", "m"}, {}, {}, {"p", "m"}};
        if (with_entropy) {
            iface_.ports["s"] = power_port(q("entropy"), PowerKind::I);
            iface_.ports["b_s"] = boundary_port(qb("entropy"), Side::Both, "adv_s");
            causality_["s"] = {false, false};
            st.need_efforts.push_back("s");
            st.give_flows.push_back("s");
        }
        stages_ = {st};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field& vel = effort_of(in, "p", "adv");
        const Field& em = effort_of(in, "m", "adv");
        const Field& rho = state_of(in, "m", "adv");
        require_positive(rho, eval_error::Code::NonPositiveDensity, "adv: density");
        const Field rho_n = avg_cn(g, rho);
        const Field mass_flux = mul(rho_n, vel);

        out.flows["m"] = d_nc(g, mass_flux);
        Field pf = mul(rho_n, d_cn(g, em));
        if (with_entropy_) {
            const Field& es = effort_of(in, "s", "adv");
            const Field& sigma = state_of(in, "s", "adv");
            const Field sigma_n = avg_cn(g, sigma);
            const Field entropy_flux = mul(sigma_n, vel);
            out.flows["s"] = d_nc(g, entropy_flux);
            const Field ps = mul(sigma_n, d_cn(g, es));
            for (std::size_t j = 0; j < pf.size(); ++j) pf[j] += ps[j];
            if (!g.periodic) {
                BoundaryValues bs;
                const EndpointPair t = restrict_node(g, entropy_flux);
                bs.flow = {-t.first, -t.second};
                bs.effort = restrict_cell(g, es);
                out.boundary["b_s"] = bs;
            }
        }
        out.flows["p"] = std::move(pf);
        if (!g.periodic) {
            BoundaryValues bm;
            const EndpointPair t = restrict_node(g, mass_flux);
            bm.flow = {-t.first, -t.second};
            bm.effort = restrict_cell(g, em);
            out.boundary["b_m"] = bm;
        }
    }

  private:
    bool with_entropy_;
};

// Electro-magnetic coupling. In the 1D node/cell realization the formally
// skew pair takes the same sign in both rows (the sign demanded by
// skew-symmetry cancels against the one from summation by parts):
//   d.f = d(b.e),  b.f = d(d.e),  b_em = (-d.e, b.e) restricted.
class Emc final : public Component {
  public:
    Emc() {
        id_ = "emc";
        fill_ = Fill::Reversible;
        iface_.ports["d"] = power_port(q("electric_displacement"), PowerKind::P);
        iface_.ports["b"] = power_port(q("magnetic_flux"), PowerKind::K);
        iface_.ports["b_em"] = boundary_port(qb("electric_displacement"), Side::Both, "emc");
        causality_["d"] = {false, false};
        causality_["b"] = {false, false};
        stages_ = {{{"d", "b"}, {}, {}, {"d", "b"}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field& e = effort_of(in, "d", "emc");
        const Field& h = effort_of(in, "b", "emc");
        out.flows["d"] = d_cn(g, h);
        out.flows["b"] = d_nc(g, e);
        if (!g.periodic) {
            BoundaryValues b;
            const EndpointPair t = restrict_node(g, e);
            b.flow = {-t.first, -t.second};
            b.effort = restrict_cell(g, h);
            out.boundary["b_em"] = b;
        }
    }
};

// Electro-kinetic coupling, electrostatic reduction (magnetic term dropped):
//   em.d.f = c * rho_n * f.p.e,  f.p.f = -c * rho_n * em.d.e.
class EkcElectrostatic final : public Component {
  public:
    explicit EkcElectrostatic(const std::map<std::string, double>& params) {
        id_ = "ekc.electrostatic";
        fill_ = Fill::Reversible;
        params_ = params;
        c_ = param_or(params, "c", 1.0);
        iface_.ports["f.p"] = power_port(q("momentum"), PowerKind::K);
        iface_.ports["em.d"] = power_port(q("electric_displacement"), PowerKind::P);
        iface_.ports["f.m"] = state_port(q("mass"));
        causality_["f.p"] = {false, false};
        causality_["em.d"] = {false, false};
        stages_ = {{{"f.p", "em.d"}, {}, {}, {"f.p", "em.d"}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field& vel = effort_of(in, "f.p", "ekc");
        const Field& e = effort_of(in, "em.d", "ekc");
        const Field& rho = state_of(in, "f.m", "ekc");
        require_positive(rho, eval_error::Code::NonPositiveDensity, "ekc: density");
        const Field crho = mul(c_, avg_cn(g, rho));
        out.flows["em.d"] = mul(crho, vel);
        out.flows["f.p"] = mul(-1.0, mul(crho, e));
    }

  private:
    double c_ = 1.0;
};

// =============================================================================
// Irreversible components
// =============================================================================

// Thermal conduction. The thermodynamic force d(e / theta) is taken cell ->
// node so the bulk degeneracy d(theta/theta) = d(1) = 0 holds exactly; the
// conductivity coefficient kappa_t * theta^2 / theta0 lives on nodes.
class Th final : public Component {
  public:
    explicit Th(const std::map<std::string, double>& params) {
        id_ = "th";
        fill_ = Fill::Irreversible;
        params_ = params;
        kappa_ = param_or(params, "kappa_t", 1.0);
        kappa_slope_ = param_or(params, "kappa_t_per_theta", 0.0);
        if (kappa_ < 0.0)
            throw eval_error(eval_error::Code::BadParameter, "th: kappa_t must be >= 0");
        iface_.ports["f.s"] = power_port(q("entropy"), PowerKind::I);
        iface_.ports["b_t"] = boundary_port(qb("entropy"), Side::Both, "th");
        causality_["f.s"] = {false, false};
        stages_ = {{{"f.s"}, {}, {}, {"f.s"}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        apply_onsager(in, in.efforts, out);
    }

    void apply_onsager(const Inputs& in, const std::map<std::string, Field>& probe,
                       Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field theta_c = shift(effort_of(in, "f.s", "th"), in.env.theta0);
        require_positive(theta_c, eval_error::Code::NonPositiveTemperature, "th: temperature");
        const Field theta_n = avg_cn(g, theta_c);

        auto pit = probe.find("f.s");
        if (pit == probe.end())
            throw eval_error(eval_error::Code::InadmissibleState, "th: missing probe effort");
        const Field force = d_cn(g, div(pit->second, theta_c));
        Field flux(force.size());
        for (std::size_t j = 0; j < flux.size(); ++j) {
            const double kap = kappa_ + kappa_slope_ * theta_n[j];
            flux[j] = kap * theta_n[j] * theta_n[j] / in.env.theta0 * force[j];
        }
        const Field dflux = d_nc(g, flux);
        Field fsf(dflux.size());
        for (std::size_t i = 0; i < fsf.size(); ++i) fsf[i] = -dflux[i] / theta_c[i];
        out.flows["f.s"] = std::move(fsf);

        if (!g.periodic) {
            BoundaryValues b;
            b.trace_is_effort = true;
            b.flow = {flux.front() / theta_c.front(), flux.back() / theta_c.back()};
            b.effort = restrict_cell(g, pit->second);
            out.boundary["b_t"] = b;
        }
    }

  private:
    double kappa_ = 1.0;
    double kappa_slope_ = 0.0;
};

// Volume viscosity. Block structure per the Onsager form with operating
// divergence div = d(v); groupings keep the bulk degeneracy bitwise exact.
class Vol final : public Component {
  public:
    explicit Vol(const std::map<std::string, double>& params) {
        id_ = "vol";
        fill_ = Fill::Irreversible;
        params_ = params;
        mu_v_ = param_or(params, "mu_v", 1.0);
        if (mu_v_ < 0.0)
            throw eval_error(eval_error::Code::NegativeViscosity, "vol: mu_v must be >= 0");
        iface_.ports["f.p"] = power_port(q("momentum"), PowerKind::K);
        iface_.ports["f.s"] = power_port(q("entropy"), PowerKind::I);
        iface_.ports["b_vv"] = boundary_port(qb("momentum"), Side::Both, "vol");
        causality_["f.p"] = {false, false};
        causality_["f.s"] = {false, false};
        stages_ = {{{"f.p", "f.s"}, {}, {}, {"f.p", "f.s"}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        apply_onsager(in, in.efforts, out);
    }

    void apply_onsager(const Inputs& in, const std::map<std::string, Field>& probe,
                       Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field theta_c = shift(effort_of(in, "f.s", "vol"), in.env.theta0);
        require_positive(theta_c, eval_error::Code::NonPositiveTemperature, "vol: temperature");
        const Field div_op = mul(mu_v_, d_nc(g, effort_of(in, "f.p", "vol")));

        auto uit = probe.find("f.p");
        auto wit = probe.find("f.s");
        if (uit == probe.end() || wit == probe.end())
            throw eval_error(eval_error::Code::InadmissibleState, "vol: missing probe effort");
        const Field& u = uit->second;
        const Field& w = wit->second;

        const Field x1 = mul(mu_v_, d_nc(g, u));         // mu_v * d(u), cell
        const Field a_int = mul(x1, theta_c);            // A integrand
        const Field b_int = mul(div_op, w);              // B integrand
        const Field a_term = d_cn(g, a_int);
        const Field b_term = d_cn(g, b_int);
        Field fpf(a_term.size());
        for (std::size_t j = 0; j < fpf.size(); ++j)
            fpf[j] = (b_term[j] - a_term[j]) / in.env.theta0;
        out.flows["f.p"] = std::move(fpf);

        const Field raw_div = d_nc(g, effort_of(in, "f.p", "vol"));
        Field fsf(raw_div.size());
        for (std::size_t i = 0; i < fsf.size(); ++i) {
            const double c_term = x1[i] * raw_div[i];
            const double d_term = (div_op[i] * raw_div[i]) * (w[i] / theta_c[i]);
            fsf[i] = (d_term - c_term) / in.env.theta0;
        }
        out.flows["f.s"] = std::move(fsf);

        if (!g.periodic) {
            BoundaryValues b;
            b.trace_is_effort = false;  // b_vv.f restricts the velocity effort
            const EndpointPair t = restrict_node(g, u);
            b.flow = {-t.first, -t.second};
            const EndpointPair ea = restrict_cell(g, a_int);
            const EndpointPair eb = restrict_cell(g, b_int);
            b.effort = {-(ea.first - eb.first) / in.env.theta0,
                        -(ea.second - eb.second) / in.env.theta0};
            out.boundary["b_vv"] = b;
        }
    }

  private:
    double mu_v_ = 1.0;
};

// Electric conduction (Ohm's law with Joule heating). Algebraic Onsager block;
// interpolations are arranged so the off-diagonal entries are exact adjoints.
class El final : public Component {
  public:
    explicit El(const std::map<std::string, double>& params) {
        id_ = "el";
        fill_ = Fill::Irreversible;
        params_ = params;
        kappa_e_ = param_or(params, "kappa_e", 1.0);
        if (kappa_e_ < 0.0)
            throw eval_error(eval_error::Code::BadParameter, "el: kappa_e must be >= 0");
        iface_.ports["em.d"] = power_port(q("electric_displacement"), PowerKind::P);
        iface_.ports["f.s"] = power_port(q("entropy"), PowerKind::I);
        causality_["em.d"] = {false, false};
        causality_["f.s"] = {false, false};
        stages_ = {{{"em.d", "f.s"}, {}, {}, {"em.d", "f.s"}}};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        apply_onsager(in, in.efforts, out);
    }

    void apply_onsager(const Inputs& in, const std::map<std::string, Field>& probe,
                       Outputs& out) const override {
        const Grid1D& g = *in.grid;
        const Field theta_c = shift(effort_of(in, "f.s", "el"), in.env.theta0);
        require_positive(theta_c, eval_error::Code::NonPositiveTemperature, "el: temperature");
        const Field theta_n = avg_cn(g, theta_c);
        const Field& e_op = effort_of(in, "em.d", "el");
        const Field e2_c = avg_nc(g, mul(e_op, e_op));

        auto uit = probe.find("em.d");
        auto wit = probe.find("f.s");
        if (uit == probe.end() || wit == probe.end())
            throw eval_error(eval_error::Code::InadmissibleState, "el: missing probe effort");
        const Field& u = uit->second;
        const Field& w = wit->second;
        const Field w_n = avg_cn(g, w);

        const double s = kappa_e_ / in.env.theta0;
        Field current(u.size());
        for (std::size_t j = 0; j < u.size(); ++j)
            current[j] = s * (theta_n[j] * u[j] - w_n[j] * e_op[j]);
        out.flows["em.d"] = std::move(current);

        const Field ue_c = avg_nc(g, mul(u, e_op));
        Field fsf(w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            fsf[i] = s * (e2_c[i] * (w[i] / theta_c[i]) - ue_c[i]);
        out.flows["f.s"] = std::move(fsf);
    }

  private:
    double kappa_e_ = 1.0;
};

// =============================================================================
// Structural-only components (interface + causality, no numeric relation)
// =============================================================================

class Structural final : public Component {
  public:
    Structural(std::string id, Interface iface) {
        id_ = std::move(id);
        fill_ = (id_ == "kec") ? Fill::Reversible : Fill::Irreversible;
        structural_ = true;
        iface_ = std::move(iface);
        Stage st;
        for (const auto& [name, attr] : iface_.ports) {
            if (attr.port_class != PortClass::Power) continue;
            causality_[name] = {false, false};
            st.need_efforts.push_back(name);
            st.give_flows.push_back(name);
        }
        stages_ = {st};
    }

    void evaluate(std::size_t, const Inputs& in, Outputs& out) const override {
        // Structural components contribute nothing to the dynamics.
        for (const auto& [name, attr] : iface_.ports) {
            if (attr.port_class != PortClass::Power) continue;
            const std::size_t len = attr.quantity.placement == Placement::NodeField
                                        ? in.grid->node_count()
                                        : in.grid->cell_count();
            out.flows[name] = Field(len, 0.0);
        }
    }
};

Interface shr_interface() {
    Interface i;
    i.ports["f.p"] = power_port(q("momentum"), PowerKind::K);
    i.ports["f.s"] = power_port(q("entropy"), PowerKind::I);
    i.ports["b_sv"] = boundary_port(qb("momentum"), Side::Both, "shr");
    return i;
}

Interface kec_interface() {
    Interface i;
    i.ports["f.p"] = power_port(q("momentum"), PowerKind::K);
    i.ports["em.d"] = power_port(q("electric_displacement"), PowerKind::P);
    i.ports["em.b"] = state_port(q("magnetic_flux"));
    return i;
}

Interface res_interface() {
    Interface i;
    i.ports["em.b"] = power_port(q("magnetic_flux"), PowerKind::K);
    i.ports["f.s"] = power_port(q("entropy"), PowerKind::I);
    i.ports["b_r"] = boundary_port(qb("magnetic_flux"), Side::Both, "res");
    return i;
}

}  // namespace

// =============================================================================
// Registry
// =============================================================================

Interface component_interface(const std::string& id, bool with_entropy) {
    if (id == "ke") return KeStorage().iface();
    if (id == "ie.barotropic") return IeBarotropic({}).iface();
    if (id == "ie.entropy") return IeEntropy({}).iface();
    if (id == "ee") return EeStorage({}).iface();
    if (id == "me") return MeStorage({}).iface();
    if (id == "pps") return Pps().iface();
    if (id == "sa") return Sa().iface();
    if (id == "adv") return Adv(with_entropy).iface();
    if (id == "emc") return Emc().iface();
    if (id == "ekc.electrostatic") return EkcElectrostatic({}).iface();
    if (id == "th") return Th({}).iface();
    if (id == "vol") return Vol({}).iface();
    if (id == "el") return El({}).iface();
    if (id == "shr") return shr_interface();
    if (id == "kec") return kec_interface();
    if (id == "res") return res_interface();
    throw eval_error(eval_error::Code::BadParameter, "unknown component id '" + id + "'");
}

std::vector<std::string> registered_component_ids() {
    return {"ke", "ie.barotropic", "ie.entropy", "pps", "sa",  "adv", "th",  "vol",
            "ee", "me",            "emc",        "el",  "ekc.electrostatic", "shr",
            "kec", "res"};
}

std::unique_ptr<Component> make_component(const std::string& id, const Interface& box_iface,
                                          const std::map<std::string, double>& params) {
    std::unique_ptr<Component> comp;
    if (id == "ke") {
        comp = std::make_unique<KeStorage>();
    } else if (id == "ie.barotropic") {
        comp = std::make_unique<IeBarotropic>(params);
    } else if (id == "ie.entropy") {
        comp = std::make_unique<IeEntropy>(params);
    } else if (id == "ee") {
        comp = std::make_unique<EeStorage>(params);
    } else if (id == "me") {
        comp = std::make_unique<MeStorage>(params);
    } else if (id == "pps") {
        comp = std::make_unique<Pps>();
    } else if (id == "sa") {
        comp = std::make_unique<Sa>();
    } else if (id == "adv") {
        comp = std::make_unique<Adv>(box_iface.has("s"));
    } else if (id == "emc") {
        comp = std::make_unique<Emc>();
    } else if (id == "ekc.electrostatic") {
        comp = std::make_unique<EkcElectrostatic>(params);
    } else if (id == "th") {
        comp = std::make_unique<Th>(params);
    } else if (id == "vol") {
        comp = std::make_unique<Vol>(params);
    } else if (id == "el") {
        comp = std::make_unique<El>(params);
    } else if (id == "shr") {
        comp = std::make_unique<Structural>("shr", shr_interface());
    } else if (id == "kec") {
        comp = std::make_unique<Structural>("kec", kec_interface());
    } else if (id == "res") {
        comp = std::make_unique<Structural>("res", res_interface());
    } else {
        throw eval_error(eval_error::Code::BadParameter, "unknown component id '" + id + "'");
    }

    if (!(comp->iface() == box_iface))
        throw pattern_error(pattern_error::Code::InterfaceMismatch,
                            "component '" + id + "' does not match the box interface");
    return comp;
}

}  // namespace ephs
