#pragma once

// =============================================================================
// Structural-law verification: power preservation of reversible relations,
// Onsager symmetry / non-negativity / bulk degeneracy of irreversible
// relations, storage effort-gradient consistency, and trajectory-level
// conservation and monotonicity reports.
//
// All probes are driven by a recorded seed; reports embed it.
// =============================================================================

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ephs/assembly.hpp"
#include "ephs/components.hpp"

namespace ephs {

// Deterministic uniform double generator (identical streams across platforms).
class ProbeRng {
  public:
    explicit ProbeRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    Field field(std::size_t n, double lo, double hi) {
        Field f(n);
        for (auto& v : f) v = uniform(lo, hi);
        return f;
    }

  private:
    double next_unit() {
        // splitmix64 step; top 53 bits to double in [0, 1)
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
    std::uint64_t state_;
};

// Synthesizes admissible states for a standalone component probe (positive
// mass/entropy densities, order-one values elsewhere).
std::map<std::string, Field> random_states(const Component& comp, const Grid1D& grid,
                                           ProbeRng& rng);

// Max normalized power residual over `trials` random effort/flow probes:
// sum of port pairings plus oriented boundary pairings, over the sum of their
// magnitudes.
double check_power_preservation(const Component& comp, const Grid1D& grid,
                                const Environment& env, int trials, ProbeRng& rng);

struct OnsagerCheckResult {
    double symmetry_residual = 0.0;   // normalized bilinear swap mismatch
    double min_quadratic = 0.0;       // smallest destruction rate seen
    double degeneracy_residual = 0.0; // normalized |M(e) e'|
};

OnsagerCheckResult check_onsager(const Component& comp, const Grid1D& grid,
                                 const Environment& env, int trials, ProbeRng& rng);

// Max relative mismatch between reported efforts and central finite
// differences of the discrete exergy under the grid inner products.
double check_effort_gradients(const Component& comp, const Grid1D& grid,
                              const Environment& env, double h, ProbeRng& rng);

struct TrajectoryReport {
    double delta_energy = 0.0;
    double delta_mass = 0.0;
    double min_entropy_step = 0.0;  // most negative per-sample entropy change
    double max_exergy_step = 0.0;   // most positive per-sample exergy change
    double max_charge_residual = 0.0;
    double scale_energy = 0.0;
    double scale_entropy = 0.0;
    double scale_exergy = 0.0;
};

TrajectoryReport check_trajectory(const Trajectory& traj);

struct CheckRow {
    std::string check;
    std::string target;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct CheckReport {
    std::uint64_t seed = 0;
    std::vector<CheckRow> rows;

    bool all_pass() const;
    std::string to_csv() const;  // header + one row per check
};

// Component checks on synthetic bounded and periodic grids plus a short
// trajectory check of the given system and initial state.
CheckReport run_all_checks(const CompositeSystem& sys, const std::vector<double>& init,
                           int trials, std::uint64_t seed);

}  // namespace ephs
