#pragma once
/*
 * Pipe (tube) flow profiles on rational lines of the torus.
 *
 * A profile for direction f is a function of the transverse displacement
 * only.  We work on the 2D quotient: pick a basis g1, g2 of the integer
 * mode lattice {k : k.f = 0} with g1 x g2 = +/- f_primitive; then
 * (u,v) = (g1.y, g2.y) are 2pi-periodic coordinates and every mode of a
 * function of (u,v) maps to a 3D mode with k.f = 0 exactly, so the
 * embedded field is constant along f by construction.
 *
 * The cross-section is a closed-form sum of radial bumps:
 *   kind 'R': dipole pair g(|d-c|) - g(|d+c|), odd under d -> -d, so the
 *             means of psi and psi^3 vanish identically; psi is rescaled
 *             so the continuum mean of psi^2 is exactly 1.
 *   kind 'C': central bump minus a disjoint concentric ring whose
 *             amplitude is fixed by the exact masses so the mean vanishes;
 *             psi rescaled so the continuum mean of psi^3 is exactly 1.
 * Moments and Fourier coefficients are computed analytically (1D radial
 * quadrature against J0), not from grid samples: the tubes separating all
 * concurrent families are far thinner than any affordable grid cell.
 *
 * The stored grids are band-limited syntheses (modes |k|_inf <= n2d/3):
 * psi for inspection, and the vector potential profile
 *   B(y) = sum_k psi_k i(k x f)/|k|^2 e^{iky},
 * which satisfies, along a flow map xi (using k.f = 0 and curl of a
 * gradient vanishing),
 *   curl( a grad(xi)^T B(lambda xi - s)/lambda )
 *     = a det(grad xi) (grad xi)^{-1} f psi(lambda xi - s)
 *       + grad(a) x (grad xi)^T B(lambda xi - s)/lambda,
 * which is how the perturbation is assembled as an exact spectral curl.
 */

#include <complex>
#include <vector>

#include "wildflow/geometry.hpp"

namespace wf {

struct PipeProfile {
    IVec f;            // family direction (may be non-primitive)
    IVec f_prim;       // primitive line direction
    char kind = 'R';   // 'R' (stress) or 'C' (current)
    double eta = 0;    // tube diameter parameter; analytic support <= eta/10
    double spacing = 0;   // nearest transverse lattice distance
    double r_support = 0; // actual analytic support radius
    double acell = 0;     // area of the transverse fundamental cell

    IVec g1{}, g2{};   // orthogonal mode lattice basis, g1 x g2 = +/- f_prim
    int n2d = 0;       // synthesis grid size; modes kept up to n2d/3
    int max_mode = 0;  // largest |k|_inf among the synthesized 3D modes
    std::vector<double> psi;  // band-limited synthesis, index iu*n2d + iv
    std::vector<double> pot;  // 3*n2d*n2d potential profile components

    double mean2 = 0, mean3 = 0;  // continuum means after scaling
    double scale = 1;             // normalization applied to the raw profile

    // analytic cross-section (post-scale amplitudes)
    double amp_main = 0, amp_ring = 0;
    double rb = 0, r1 = 0, rc = 0, rw = 0;
    double cx[3] = {0, 0, 0};  // dipole center offset (kind 'R')
    double Auv[3][2] = {{0, 0}, {0, 0}, {0, 0}};  // (u,v) -> transverse rep
    // transverse lattice vectors searched when reducing a displacement to
    // its nearest representative (closed under negation)
    std::vector<std::array<double, 3>> shifts2d;
};

// Nearest transverse lattice distance for direction f (inter-pipe spacing).
double pipe_spacing(const IVec& f);

// kmax3d >= 0 additionally drops synthesis modes with |k|_inf > kmax3d
// (sub-resolution runs keep only what their grid can carry; the analytic
// normalization is untouched).
PipeProfile build_pipe(const IVec& f, char kind, double eta, int n2d,
                       int kmax3d = -1);

// Tube-diameter parameter eta whose built profile has the given analytic
// support radius.
double eta_for_support(char kind, double r_support);

// Analytic tube-supported evaluation at a 3D point (exactly zero outside
// the tubes); y components in radians.
double pipe_eval(const PipeProfile& p, const double y[3]);
// Bilinear evaluation of the band-limited synthesis grid.
double pipe_eval_grid(const PipeProfile& p, const double y[3]);
// Bilinear evaluation of the potential profile.
void pipe_potential(const PipeProfile& p, const double y[3], double out[3]);

// sup |f . grad psi| of the synthesized profile (every represented mode is
// orthogonal to f, so this measures representation integrity).
double pipe_dir_deriv_sup(const PipeProfile& p);

// Exact Fourier coefficient of psi^power (power 1, 2 or 3) at lattice mode
// k = alpha g1 + beta g2, from the closed-form cross-section.
std::complex<double> pipe_coefficient(const PipeProfile& p, const IVec& k,
                                      int power);

struct PipeMode {
    IVec k;
    std::complex<double> b, c, d;  // coefficients of psi, psi^2, psi^3
};
struct PipeTables {
    double c0 = 0, d0 = 0;  // means of psi^2, psi^3
    std::vector<PipeMode> modes;  // half lattice; conjugates implied
};
// Throws if the relative spectral mass of psi outside |k|_inf <= k_cut
// exceeds 1e-6 in L2 (the cutoff cannot represent the profile).
PipeTables pipe_fourier(const PipeProfile& p, int k_cut);

// Direction of slot 0..9 in a class: 0..5 stress family, 6..9 current frame.
IVec slot_direction(const DirectionFamilies& fam, int cls, int slot);

// Analytic support radii per (class, slot): base eta = spacing/10 *
// eta_scale with tube radius eta/10, then scaled down globally so that a
// separating shift assignment exists (each pair of skew line families can
// be pushed at most pi gcd(f x f')/|f x f'| apart, and the per-family sums
// of excluded offset fractions must stay below a fixed budget).
std::array<std::array<double, 10>, 27> pipe_radii(const DirectionFamilies& fam,
                                                  double eta_scale);

struct ShiftPlan {
    // per time-slab parity, class and slot: offset of the pipe line lattice
    std::array<std::array<std::array<std::array<double, 3>, 10>, 27>, 2> p{};

    std::array<double, 3> shift(int m, int cls, int slot) const {
        return p[((m % 2) + 2) % 2][cls][slot];
    }
};

// Minimal distance between the periodic line families a + t f and b + u g
// (f, g primitive integer directions; exact closed form for skew pairs,
// lattice enumeration for parallel ones).
double line_family_distance(const IVec& f, const double a[3], const IVec& g,
                            const double b[3]);

// Deterministic greedy search placing all 540 (direction, parity) line
// families with pairwise separation margin * (r_i + r_j), fattest tubes
// first.  Throws on exhaustion (pipe density too high for eta).
ShiftPlan choose_shifts(const DirectionFamilies& fam,
                        const std::array<std::array<double, 10>, 27>& radius);

}  // namespace wf
