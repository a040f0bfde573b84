#pragma once
/*
 * Run orchestration: configuration, validation, the run pipeline
 * (noise -> stopping time -> level-0 tuple -> iteration), persistence,
 * and plot-ready exports.
 *
 * A run works on a short uniform window of snapshots inside the horizon
 * [0, stopping time]: the refinement step needs all its snapshots inside
 * one transport slab (length eps), which at desk scale is far shorter
 * than the horizon.  Level-0 diagnostics (energy, spectra, local-energy
 * summary) are additionally sampled on a coarse lattice spanning the
 * whole horizon, since the level-0 tuple is defined pointwise in time
 * from the mollified path.
 *
 * Every artifact is a pure function of (config, seed): writes go through
 * write-then-rename so a failed guard never leaves a partial file, and
 * all text numbers carry 17 significant digits.
 */

#include <cstdint>
#include <string>
#include <vector>

#include "wildflow/cascade.hpp"
#include "wildflow/residuals.hpp"
#include "wildflow/state.hpp"

namespace wf {

struct RunConfig {
    // cascade inputs
    double a = 4.0, b = 1.25, alpha = 0.1, delta_h = 0.01;
    double L = 1.0, T = 0.5, kappa = 0.5;
    int q_max = 1;
    // discretization
    int grid_n = 32;
    double dt = 2e-5;
    int window = 5;        // snapshots per level window (>= 5)
    double t_start = 0.0;  // window start inside [0, stopping time]
    // noise
    double s_Q = 10.0;
    int k_max = 0;  // 0 = deterministic (zero path)
    std::uint64_t seed = 1;
    double noise_dt = 1e-3;
    int noise_grid = 8;
    // energy profile
    std::string energy_form = "constant";  // constant | linear | table
    double energy_e0 = 0.0, energy_e1 = 0.0;
    std::string energy_table;  // "t:E,t:E,..." strictly increasing t
    // output
    std::string out_dir = "out";
    bool resume = false;
    int series_samples = 9;  // horizon-spanning level-0 sample count
};

// Flat key-value text: one "key value" pair per line, '#' comments.
// Unknown keys are an error (they are config typos).  Returns defaults
// overlaid with the file.
RunConfig load_config(const std::string& path);
// Apply one key/value override (CLI precedence over file).  Throws on
// unknown key or unparsable value.
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);
// Every violated guard, empty when the config is runnable.  Never throws.
std::vector<std::string> validate(const RunConfig& cfg);

EnergyProfile energy_profile(const RunConfig& cfg);

// Measured/target ratios of the inductive estimates at one level
// (targets use C_v = Mbar = 1; diagnostics, not certificates).
struct EstimateRatios {
    int q = 0;
    double v_n1 = 0.0;    // ||v||_1 vs lambda_q delta_q^(1/2)
    double p_n1 = 0.0;    // ||p||_1 vs lambda_q delta_q
    double r_n0 = 0.0;    // ||R||_0 vs lambda_q^(-gamma) delta_{q+1}
    double phi_n0 = 0.0;  // ||phi||_0 vs lambda_q^(-3 gamma/2) delta_{q+1}^(3/2)
    double dist_v = 0.0;  // increment norm vs delta_{q+1}^(1/2) lambda_q^(-gamma/2)
    double dist_p = 0.0;  // increment norm vs delta_{q+1}
};
EstimateRatios estimate_ratios(const ErState& cur, const ErState* prev,
                               const Cascade& c);

// Local-energy summary of one state over its snapshots: the energy
// identity defect (sup / space-time L1 with the normalized measure) and
// the reconstructed dissipation rate
//     D(t) = mean[ (1/2) D_t Tr R + div(R v) + R : grad z^T + div phi ],
// which the identity balances against E'(t).
struct LeiSummary {
    double res_sup = 0.0, res_l1 = 0.0;
    std::vector<double> t, diss;  // per snapshot
    double diss_dev = 0.0;        // max |D(t) - E'(t)|
    bool sign_ok = true;          // D > 0 wherever E' > 0
};
LeiSummary lei_check(const ErState& st);

// Shell spectrum of a field: value[s] = (1/2) sum of |c_k|^2 over modes
// with round(|k|) == s; the values sum to (1/2)||f||_L2^2 exactly.
std::vector<double> shell_spectrum(const Field& f);

// Appends one row per snapshot of st to the two CSV bodies (no headers):
//   series:  q,t,energy,mom_l2,mom_sup,energy_l2,energy_sup,div_v_l2
//   spectra: q,t,shell,value   (spectrum of u = v + z)
// with energy = (1/2)||v + z||_L2^2.  Needs >= 3 snapshots.
void export_series(const ErState& st, std::string& series_csv,
                   std::string& spectra_csv);

// Atomic text write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

// The four CLI verbs.  `run` executes the pipeline and writes the
// artifact tree (0 success, 2 validation failure, 1 guard failure);
// `check` recomputes residual norms from saved snapshots and compares
// with series.csv; `audit` prints the scale-inequality table; `spectra`
// recomputes shell spectra from saved snapshots and prints CSV.
int run(const RunConfig& cfg);
int check_artifacts(const std::string& out_dir, std::string* report = nullptr);
std::string audit_table(const RunConfig& cfg);
std::string spectra_from_artifacts(const std::string& out_dir);

}  // namespace wf
