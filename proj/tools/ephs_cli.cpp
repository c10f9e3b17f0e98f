// Command-line front end: flatten and inspect models, run the structural
// verification suite, and execute simulations with CSV outputs.
//
// Exit codes: 0 ok, 1 I/O error, 2 validation error, 3 parse error,
// 4 check failure, 5 runtime abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ephs/dsl.hpp"
#include "ephs/model.hpp"
#include "ephs/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitParse = 3;
constexpr int kExitCheck = 4;
constexpr int kExitRuntime = 5;

int load_document(const std::string& path, ephs::ModelDocument& doc) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open '" << path << "'\n";
        return kExitIo;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const ephs::ParseResult res = ephs::parse(buf.str());
    if (!res.ok) {
        for (const auto& d : res.diagnostics)
            std::cerr << path << ":" << d.str() << "\n";
        return kExitParse;
    }
    doc = res.doc;
    return kExitOk;
}

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

int cmd_flatten(const std::string& path, const std::string& pattern_name) {
    ephs::ModelDocument doc;
    if (int rc = load_document(path, doc)) return rc;
    try {
        const ephs::Pattern flat = ephs::flatten_document(doc, pattern_name);
        const ephs::ValidationReport rep = ephs::validate_pattern(flat);
        if (!rep.ok()) {
            for (const auto& e : rep.entries)
                std::cerr << "[" << to_string(e.code) << "] " << e.message << "\n";
            return kExitValidation;
        }
        std::cout << ephs::serialize_pattern("flat", flat);
        return kExitOk;
    } catch (const ephs::pattern_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ephs::model_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

int cmd_check(const std::string& path, int trials, std::uint64_t seed) {
    ephs::ModelDocument doc;
    if (int rc = load_document(path, doc)) return rc;
    try {
        ephs::BuiltModel model = ephs::build_model(doc);
        const ephs::CheckReport rep =
            ephs::run_all_checks(model.system, model.initial_state, trials, seed);
        std::cout << rep.to_csv();
        return rep.all_pass() ? kExitOk : kExitCheck;
    } catch (const ephs::pattern_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ephs::bind_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ephs::model_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

void write_diagnostics(const std::filesystem::path& dir, const ephs::Trajectory& traj) {
    std::ofstream out(dir / "diagnostics.csv", std::ios::binary);
    out << "t,E,S,N,H,Q_residual,boundary_power\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const ephs::Functionals& f = traj.diagnostics[i];
        out << csv_number(traj.times[i]) << "," << csv_number(f.energy) << ","
            << csv_number(f.entropy) << "," << csv_number(f.mass) << ","
            << csv_number(f.exergy) << ","
            << (f.charge_residual ? csv_number(*f.charge_residual) : std::string()) << ","
            << csv_number(f.boundary_power) << "\n";
    }
}

void write_fields(const std::filesystem::path& dir, const ephs::CompositeSystem& sys,
                  const ephs::Trajectory& traj) {
    const ephs::Grid1D& grid = sys.grid();
    for (std::size_t snap = 0; snap < traj.states.size(); ++snap) {
        char name[32];
        std::snprintf(name, sizeof(name), "fields_%04zu.csv", snap);
        std::ofstream out(dir / name, std::ios::binary);
        out << "z";
        for (const auto& e : sys.layout()) out << "," << e.quantity;
        out << "\n";
        // Cell-centered rows; node fields are averaged onto the centers.
        std::vector<ephs::Field> cols;
        for (const auto& e : sys.layout()) {
            ephs::Field f = sys.extract(traj.states[snap], e);
            if (e.placement == ephs::Placement::NodeField) f = avg_nc(grid, f);
            cols.push_back(std::move(f));
        }
        for (std::size_t i = 0; i < grid.cell_count(); ++i) {
            out << csv_number(grid.cell_coord(i));
            for (const auto& col : cols) out << "," << csv_number(col[i]);
            out << "\n";
        }
    }
}

int cmd_run(const std::string& path, double t_end_override, double dt_override,
            const std::string& integrator_override, const std::string& out_dir) {
    ephs::ModelDocument doc;
    if (int rc = load_document(path, doc)) return rc;
    try {
        ephs::BuiltModel model = ephs::build_model(doc);
        ephs::SimConfig cfg = model.sim;
        if (t_end_override >= 0.0) cfg.t_end = t_end_override;
        if (dt_override > 0.0) cfg.dt = dt_override;
        if (!integrator_override.empty()) cfg.integrator = integrator_override;

        const ephs::RunResult res = ephs::run(model.system, model.initial_state, cfg);

        std::filesystem::path dir(out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            std::cerr << "error: cannot create output directory '" << out_dir << "'\n";
            return kExitIo;
        }
        write_diagnostics(dir, res.trajectory);
        write_fields(dir, model.system, res.trajectory);

        if (res.aborted) {
            std::cerr << "runtime abort: " << res.error
                      << " (last good time t=" << res.last_good_time << ")\n";
            return kExitRuntime;
        }
        std::cout << "wrote " << res.trajectory.times.size() << " samples to " << out_dir
                  << "\n";
        return kExitOk;
    } catch (const ephs::pattern_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ephs::bind_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ephs::model_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ephs: exergetic port-Hamiltonian models on a 1D staggered grid"};
    app.require_subcommand(1);

    std::string model_path, pattern_name, out_dir = "out", integrator;
    int trials = 100;
    std::uint64_t seed = 0;
    double t_end = -1.0, dt = 0.0;

    CLI::App* flatten = app.add_subcommand("flatten", "print the flattened pattern");
    flatten->add_option("model", model_path, "model file (.ephs)")->required();
    flatten->add_option("--pattern", pattern_name, "pattern to flatten");

    CLI::App* check = app.add_subcommand("check", "run the structural verification suite");
    check->add_option("model", model_path, "model file (.ephs)")->required();
    check->add_option("--trials", trials, "random probes per check");
    check->add_option("--seed", seed, "probe seed");

    CLI::App* runcmd = app.add_subcommand("run", "simulate and write CSV outputs");
    runcmd->add_option("model", model_path, "model file (.ephs)")->required();
    runcmd->add_option("--t-end", t_end, "override simulated time");
    runcmd->add_option("--dt", dt, "override time step");
    runcmd->add_option("--integrator", integrator, "rk4 or midpoint")
        ->check(CLI::IsMember({"rk4", "midpoint"}));
    runcmd->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (flatten->parsed()) return cmd_flatten(model_path, pattern_name);
    if (check->parsed()) return cmd_check(model_path, trials, seed);
    if (runcmd->parsed()) return cmd_run(model_path, t_end, dt, integrator, out_dir);
    return kExitOk;
}
