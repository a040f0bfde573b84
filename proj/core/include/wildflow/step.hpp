#pragma once
/*
 * One full refinement step of the convex-integration scheme: from the
 * level-q tuple (v, p, R, phi, z) to the level-(q+1) tuple.
 *
 * The perturbation w = v_{q+1} - v_q is a sum of pipe-flow pieces
 * indexed by (time slab m, space cell n, direction slot), each of the
 * form
 *     theta chi(xi) a(x) (grad xi)^{-1} f psi_f(lambda xi - s),
 * with xi the backward flow map of the slab, a the amplitude solving a
 * pointwise decomposition problem, and psi_f the pipe cross-section.
 * The divergence-free field w is obtained as the exact spectral curl of
 * the sampled vector potential
 *     A = sum theta chi a grad(xi)^T B_f(lambda xi - s) / lambda,
 * whose curl reproduces the oscillatory part times det(grad xi) plus
 * gradient cross terms; w_o is the directly sampled oscillatory sum and
 * w_c := w - w_o collects every corrector (amplitude gradients,
 * det(grad xi) - 1, interpolation).
 *
 * The amplitudes enforce two pointwise algebraic cancellations that the
 * step reports as measured gaps:
 *     sum over stress pieces of the squared-amplitude tensor = rho Id - R_l,
 *     sum over current pieces of the cubed-amplitude vector  = -phi_l,
 * where R_l, phi_l are the Lagrangian time mollifications of the level-q
 * stress and current.  The new stress splits as R_A + R_T + R_S plus the
 * spatially constant (2/3) f(t) Id, and the new current as
 * phi_A + phi_D1 + phi_D2 + phi_S1 + phi_S2, with f(t) the cumulative
 * time integral of the space means of the three antidivergence
 * integrands, so that the relaxed momentum and local energy identities
 * carry over to the new tuple up to discretization.
 */

#include <array>
#include <string>
#include <vector>

#include "wildflow/cascade.hpp"
#include "wildflow/geometry.hpp"
#include "wildflow/noise.hpp"
#include "wildflow/pipes.hpp"
#include "wildflow/state.hpp"

namespace wf {

struct StepGeometry {
    DirectionFamilies fam;
    std::vector<GammaSolver> gamma;  // one per class, order 0..26
    // pipe[cls][slot]: slots 0..5 stress ('R'), 6..9 current ('C')
    std::vector<std::array<PipeProfile, 10>> pipe;
    ShiftPlan plan;

    double inf_n0 = 0.0;     // min over classes of the stress-family N0
    double Mbar = 0.0;       // max over classes of the frame affine offset
    double n0_target = 1.0;  // certified ball radius of the frame lemma
    int max_pipe_mode = 0;   // largest |k|_inf over all pipe syntheses
};

// Builds families, Gamma solvers, all 270 pipes (cross-section synthesis
// grid n2d, 3D modes capped at kmax3d) and the separating shift plan.
StepGeometry build_step_geometry(int n2d, int kmax3d, double eta_scale = 1.0);

/*
 * Pointwise amplitude of a current piece (slot 6..9):
 *     a = |fbar|^{-2/3} 2^{1/3} Lambda_f^{1/3}(-G phil / (Mbar^3 rho1))
 *         Mbar rho1^{1/3},
 * G = grad xi row-major, fbar = G^{-1} f.  Throws when the Lambda
 * argument leaves the certified ball, naming the class and slot.
 */
double phi_amplitude(const StepGeometry& g, int cls, int slot,
                     const double G[9], const double Ginv[9],
                     const double phil[3], double rho1);

/*
 * Pointwise amplitudes of the six stress pieces of a class:
 *     a_i = Gamma_i(G G^T - G (Rl + M) G^T / rho) rho^{1/2},
 * Rl, M in sym storage (xx,yy,zz,xy,xz,yz).  M is the squared-amplitude
 * tensor of every concurrently active current piece at the point; adding
 * it inside the argument is what cancels the current pieces' c0
 * contribution.  Throws when a coefficient is nonpositive.
 */
std::array<double, 6> r_amplitudes(const StepGeometry& g, int cls,
                                   const double G[9], const double Rl[6],
                                   const double M[6], double rho);

struct StepReport {
    int q = 0;
    // guards and flow health
    double ul_c1 = 0.0, eps_ul_c1 = 0.0;
    double grad_dev_max = 0.0, det_min = 1.0, fbar_min = 0.0;
    // cancellation gaps, sup over space and time
    double c0_gap = 0.0;  // sup |c0 + R_l - rho Id|
    double d0_gap = 0.0;  // sup |d0 + phi_l|
    double rho = 0.0, rho1 = 0.0, phil_sup = 0.0;
    // solenoidality and trace identity
    double div_w_rel = 0.0;   // max_t ||div w||_L2 / ||w||_L2
    double trace_err = 0.0;   // sup |Tr R_{q+1} - independent trace formula|
    // sizes
    double w_sup = 0.0, wc_sup = 0.0, a_min = 0.0, a_max = 0.0;
    double dv_c0 = 0.0, dv_c1_scaled = 0.0;  // ||v'-v||_0, ||v'-v||_1/lambda'
    std::vector<double> f;  // the trace correction f(t) per snapshot

    std::string manifest() const;
};

/*
 * The full step.  The state's snapshots must be uniform in time with at
 * least 5 samples; path supplies the driving noise for the next
 * mollification level.  Throws on guard failure: resolution
 * (lambda_{q+1} max_pipe_mode vs grid Nyquist), amplitude domain, flow
 * map degeneracy, or insufficient temporal sampling.
 */
ErState iterate_step(const ErState& st, const NoisePath& path,
                     const Cascade& c, const StepGeometry& geo,
                     StepReport* rep = nullptr);

}  // namespace wf
