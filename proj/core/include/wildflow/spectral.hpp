#pragma once
/*
 * Fourier-side calculus on torus fields: exact spectral derivatives,
 * Littlewood-Paley projections P_{<=2^j} / P_{>2^j} built from a fixed
 * radial profile m (1 on B(0,1), supported in B(0,2)), the two
 * antidivergence operators
 *     div RR v = v - mean(v)   (RR symmetric and traceless),
 *     div Rb g = g - mean(g)   (Rb = -grad (-Lap)^{-1}),
 * and grid Holder-norm estimators.
 *
 * Products of fields are taken pointwise on the grid.  multiply_dealiased
 * additionally truncates the result at |k|_inf > n/3 (2/3 rule) and is used
 * by the generic advection operator; the identity-checking paths keep raw
 * grid products and control aliasing by band-limiting their inputs instead.
 */

#include "wildflow/fft.hpp"

namespace wf {

enum class LpKind { leq, gt, shell };

// d/dx_axis, exact on band-limited fields (Nyquist column zeroed).
Field derivative(const Field& f, int axis);
Spectrum derivative_spec(const Spectrum& s, int axis);

Field grad_scalar(const Field& f);            // scalar -> vector
Field div_vector(const Field& v);             // vector -> scalar
Field div_sym_tensor(const Field& R);         // sym3x3 -> vector
Field curl(const Field& v);                   // vector -> vector
Field laplacian(const Field& f);              // any rank

// (div (a x b))_i = sum_j d_j (a_i b_j) with the raw grid product.
Field div_outer(const Field& a, const Field& b);
// sum_ij R_ij d_i v_j for symmetric R (unambiguous by symmetry).
Field contract_sym_gradT(const Field& R, const Field& v);
// u . grad f per component, raw grid product.
Field advect_raw(const Field& u, const Field& f);
// u . grad f with the 2/3-rule dealiased product.
Field advect(const Field& u, const Field& f);

Field multiply_dealiased(const Field& a, const Field& b);

Field lp_project(const Field& f, int j, LpKind kind);
// S = sup{ j : 2^j <= 1/l }, the dyadic index of the cutoff P_{<= l^{-1}}.
int lp_cutoff_exponent(double l);
Field project_low(const Field& f, double l);  // P_{<= l^{-1}}

// Zero all modes with |k|_inf > kmax (kmax in integer wavenumbers).
Field band_truncate(const Field& f, int kmax);
void band_truncate_inplace(Spectrum& s, int kmax);
// Largest |k|_inf carrying relative coefficient magnitude above tol.
int band_content(const Field& f, double rel_tol = 1e-13);

void set_mean(Field& f, int c, double m);
double sup_abs(const Field& f);

Field antidiv_tensor(const Field& v);  // vector -> sym3x3, traceless
Field antidiv_scalar(const Field& g);  // scalar -> vector, mean zero

// Grid estimate of the Holder norm: sum over derivative orders j <= N of the
// worst multi-index sup, plus (for frac > 0) the worst nearest-neighbor
// difference quotient of order-N derivatives.  For orders whose full
// multi-index set is large, a fixed representative subset is used; the
// result is a deterministic lower bound of the true norm.  N < 0 returns 0.
double holder_norm(const Field& f, int N, double frac);

// D^r f for a single multi-index (spectral, exact on band-limited fields).
Field multi_derivative_field(const Field& f, int r1, int r2, int r3);
Field multi_derivative_spec(const Spectrum& s, int comp, int r1, int r2,
                            int r3);

// Spectral resampling to a coarser/finer even grid; exact when the field's
// band content fits inside the new Nyquist box.
Field resample(const Field& f, int n_new);

}  // namespace wf
