#include "ephs/model.hpp"

#include <cmath>

namespace ephs {

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Pattern flatten_document(const ModelDocument& doc, const std::string& pattern_name) {
    std::string name = pattern_name;
    if (name.empty()) {
        if (doc.has_bindings)
            name = doc.bindings.pattern_name;
        else if (doc.patterns.size() == 1)
            name = doc.patterns.front().first;
        else
            throw model_error("flatten: no pattern selected");
    }
    const Pattern* p = doc.find_pattern(name);
    if (!p)
        throw pattern_error(pattern_error::Code::MissingDefinition,
                            "flatten: document has no pattern '" + name + "'");
    return flatten(*p, doc.pattern_library());
}

Grid1D document_grid(const ModelDocument& doc) {
    if (!doc.has_domain) throw model_error("model has no domain section");
    if (doc.domain.cells < 2) throw model_error("domain: cells must be at least 2");
    return Grid1D(doc.domain.length, static_cast<std::size_t>(doc.domain.cells),
                  doc.domain.periodic);
}

Field eval_init_preset(const Grid1D& grid, Placement placement, const InitSpec& spec,
                       const Field* mass_field) {
    const std::size_t len =
        placement == Placement::NodeField ? grid.node_count() : grid.cell_count();
    auto coord = [&](std::size_t i) {
        return placement == Placement::NodeField ? grid.node_coord(i) : grid.cell_coord(i);
    };

    if (spec.preset.empty()) {
        if (spec.values.size() != len)
            throw model_error("init: inline array has " + std::to_string(spec.values.size()) +
                              " values, field needs " + std::to_string(len));
        return Field(spec.values.begin(), spec.values.end());
    }

    Field f(len, 0.0);
    if (spec.preset == "uniform") {
        const double v = param_or(spec.params, "value", 0.0);
        std::fill(f.begin(), f.end(), v);
    } else if (spec.preset == "sine") {
        const double mode = param_or(spec.params, "mode", 1.0);
        const double amp = param_or(spec.params, "amplitude", 1.0);
        const double base = param_or(spec.params, "base", 0.0);
        for (std::size_t i = 0; i < len; ++i)
            f[i] = base + amp * std::sin(kTwoPi * mode * coord(i) / grid.length);
    } else if (spec.preset == "gaussian-bump") {
        const double amp = param_or(spec.params, "amplitude", 1.0);
        const double width = param_or(spec.params, "width", 0.1 * grid.length);
        const double center = param_or(spec.params, "center", 0.5 * grid.length);
        const double base = param_or(spec.params, "base", 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            const double z = coord(i) - center;
            f[i] = base + amp * std::exp(-z * z / (2.0 * width * width));
        }
    } else if (spec.preset == "charge-from-mass") {
        // d such that d_nc(d) = c * (rho - rho_neutral) discretely; used to
        // satisfy the electrostatic charge constraint at t = 0.
        if (placement != Placement::NodeField)
            throw model_error("init: charge-from-mass requires a node field");
        if (!mass_field) throw model_error("init: charge-from-mass needs a mass field");
        const double c = param_or(spec.params, "c", 1.0);
        const double rho_neutral = param_or(spec.params, "rho_neutral", 0.0);
        const double offset = param_or(spec.params, "offset", 0.0);
        f[0] = offset;
        for (std::size_t i = 0; i + 1 < len; ++i)
            f[i + 1] = f[i] + grid.dz() * c * ((*mass_field)[i] - rho_neutral);
    } else {
        throw model_error("init: unknown preset '" + spec.preset + "'");
    }
    return f;
}

BuiltModel build_model(const ModelDocument& doc) {
    if (!doc.has_bindings) throw model_error("model has no bindings section");
    const Grid1D grid = document_grid(doc);
    const Pattern flat = flatten_document(doc);

    std::map<std::string, BindingEntry> bindings = doc.bindings.entries;
    CompositeSystem sys = CompositeSystem::bind(flat, bindings, grid, doc.env);

    std::vector<double> state(sys.state_size(), 0.0);
    // Mass first so charge-from-mass can reference it.
    Field mass;
    const StateLayoutEntry* mass_entry = sys.find_field("mass");
    if (mass_entry) {
        auto it = doc.init.find("mass");
        if (it != doc.init.end()) {
            mass = eval_init_preset(grid, mass_entry->placement, it->second, nullptr);
            sys.insert(state, *mass_entry, mass);
        }
    }
    for (const auto& e : sys.layout()) {
        if (e.quantity == "mass") continue;
        auto it = doc.init.find(e.quantity);
        if (it == doc.init.end()) continue;  // defaults to zero
        const Field f =
            eval_init_preset(grid, e.placement, it->second, mass.empty() ? nullptr : &mass);
        sys.insert(state, e, f);
    }

    BuiltModel built{std::move(sys), std::move(state), doc.sim, flat};
    return built;
}

}  // namespace ephs
