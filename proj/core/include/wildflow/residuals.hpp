#pragma once
/*
 * Residual functionals of the relaxed system.  For a state tuple
 * (v, p, R, phi, z) and u = v + z the two checked identities are
 *
 *   momentum:  d_t v + div(u (x) u) + grad p - div R = 0,
 *
 *   energy:    d_t |v|^2/2 + v . grad p + v . div(u (x) u)
 *              = -E' + (1/2)(d_t + u . grad) Tr R + div(R v)
 *                + R : grad z^T + div phi.
 *
 * Spatial operators are spectral; time derivatives are centered
 * differences on the state's own grid, with second-order one-sided
 * stencils at the first and last snapshot.  Both residuals are therefore
 * expected to vanish at rate O(dt^2) plus a dt-independent spatial floor
 * for exactly constructed tuples.
 */

#include <cstddef>
#include <vector>

#include "wildflow/state.hpp"

namespace wf {

// d_t f at snapshot j from a uniformly sampled series (centered inside,
// one-sided second order at the ends).
Field time_derivative_sample(const std::vector<Field>& f,
                             const std::vector<double>& times,
                             std::size_t j);

// Left-hand side of the momentum identity at snapshot j (vector field).
Field momentum_residual(const ErState& st, std::size_t j);

// Energy identity defect (left minus right) at snapshot j (scalar field).
Field energy_residual(const ErState& st, std::size_t j);

struct ResidualSample {
    double t = 0.0;
    double mom_l2 = 0.0, mom_sup = 0.0;
    double energy_l2 = 0.0, energy_sup = 0.0;
    double div_v_l2 = 0.0;
};

// One sample per snapshot; needs at least 3 snapshots.
std::vector<ResidualSample> residual_report(const ErState& st);

}  // namespace wf
