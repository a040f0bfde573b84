#pragma once
/*
 * Divergence-free, zero-mean Q-Wiener paths on the torus.
 *
 * Q is diagonal in the Fourier polarization basis: every wavevector k with
 * 0 < |k|_inf <= k_max carries two polarizations orthogonal to k with
 * standard deviation sigma_k = |k|^{-s_Q}.  Increments are exact Gaussians
 * per time step (the path is the true driving noise at grid times, not an
 * Euler approximation).  Negative times extend constantly, z(-s) := z(0).
 *
 * The one-sided time mollification
 *     z_i(t) = int r_i(t - s) z(s) ds,   supp r in [0,1],
 * only reads samples at times <= t, which is what makes every consumer
 * causal (adaptedness in the discrete setting).
 */

#include <cstdint>
#include <vector>

#include "wildflow/field.hpp"

namespace wf {

struct NoiseSpec {
    double s_Q = 10.0;     // sigma_k = |k|^{-s_Q}
    int k_max = 2;         // retain 0 < |k|_inf <= k_max
    std::uint64_t seed = 1;
    double dt = 1e-3;      // path sampling step
    double two_T = 1.0;    // horizon
    int grid_n = 16;
};

struct NoisePath {
    GridSpec grid;
    double dt = 0.0;
    std::vector<double> times;  // uniform on [0, 2T]
    std::vector<Field> z;

    // linear interpolation; constant before the first and after the last
    // sample (the t < 0 extension is the paper's convention)
    Field at(double t) const;
    int index_floor(double t) const;
};

NoisePath sample_path(const NoiseSpec& spec);

// q = 1/2 sum_k |Q^{1/2} e_k|^2 over the retained basis: one representative
// per +/-k pair contributes 2 sigma_k^2.
double noise_q_constant(const NoiseSpec& spec);
// Tr(Q) over the full lattice (both members of each pair, two polarizations).
double noise_trace_Q(const NoiseSpec& spec);

// z_i(t) at an arbitrary time; quadrature over the kernel support on a
// fixed node set tied to the path grid (weights renormalized to unit mass).
Field mollify_at(const NoisePath& path, double i_q, double t);
// same, sampled at all path times; i_q <= dt returns the path unchanged
NoisePath mollify_path(const NoisePath& path, double i_q);

// Running discrete C^{1/2-delta}([0,t_j], C^{N1}) estimate per path time:
// sup of the spatial norm so far plus the worst difference quotient among
// pairs within `window` steps.  The spatial norm uses a reduced derivative
// set (all low orders, representative high orders) on a grid just resolving
// the band content; a deterministic lower bound of the true norm.
std::vector<double> running_holder_norm(const NoisePath& path, double delta_h,
                                        int N1, int window = 64);

double stopping_time(const NoisePath& path, double L, double delta_h, int N1,
                     double T, int window = 64);

}  // namespace wf
