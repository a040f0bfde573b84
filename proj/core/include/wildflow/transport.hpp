#pragma once
/*
 * Lagrangian transport along a regularized velocity u_l.
 *
 * The central object is the flow map xi anchored at the slab time
 * t0 = eps (m - 1/8):
 *     (d_t + u_l . grad) xi = 0,   xi(t0, x) = x,
 * i.e. xi(t,x) is the t0-position of the characteristic through (t,x).
 * It is computed per grid point by integrating the characteristic ODE
 *     dy/ds = u_l(s, y)
 * backward from t to t0 with fixed-step RK4, interpolating u_l trilinearly
 * in space and linearly in time.  What is stored is the periodic
 * displacement x - xi(t,x); this avoids branch cuts of torus-valued maps
 * and makes grad xi = Id - grad(displacement) available by exact spectral
 * differentiation.
 *
 * On top of the flow map sit the advective derivative
 *     D_{t,l} f = d_t f + u_l . grad f
 * (centered difference in t, spectral gradient) and the Lagrangian time
 * mollification used to regularize the stress and current errors:
 *     F_l(t,x) = int (P_{<= 1/l} F)(t+s, mu(t; t+s, x)) eta_ltemp(s) ds,
 * where mu(t; r, x) is the position at time r of the characteristic
 * through (t,x) and eta_ltemp is the unit-mass bump supported exactly in
 * [-ltemp, 0].  The one-sided support means only past and current samples
 * of F are ever read (adaptedness in the discrete setting).
 */

#include <array>
#include <vector>

#include "wildflow/field.hpp"

namespace wf {

// A 3x3 matrix field stored as three vector fields (the rows).
struct Mat3Field {
    std::array<Field, 3> row;  // row[i][j] = M_ij

    double at(int i, int j, std::size_t p) const { return row[i].comp(j)[p]; }
};

// Uniformly time-sampled field; the building block for u_l, R_q, phi_q
// histories handed to the transport operators.
struct FieldSeries {
    std::vector<double> times;  // uniform, strictly increasing
    std::vector<Field> f;

    double dt() const;
    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }
    // linear interpolation in time, constant beyond the sampled range
    Field at(double t) const;
    // index of the sample at time t (within 1e-9 * dt), -1 if t is not
    // a sample time
    int sample_index(double t) const;
    // trilinear in space, linear in time; vector rank only
    void eval_vec(double t, const double y[3], double out[3]) const;
};

// Trilinear periodic interpolation of every component at a point
// (coordinates in radians, any real values).
void trilinear_eval(const Field& f, const double y[3], double* out);

struct FlowMap {
    double t0 = 0.0;  // anchor, eps (m - 1/8)
    GridSpec grid;
    std::vector<double> times;
    std::vector<Field> disp;  // x - xi(t_j, x), periodic vector fields

    double ul_c1 = 0.0;           // measured sup_t ||u_l(t)||_{C^1}
    bool window_warning = false;  // eps ||u_l||_1 >= 1/2

    int index_of(double t) const;  // throws if t is not a stored time
    // grad xi = Id - grad(disp), exact spectral derivatives (cached)
    const Mat3Field& grad_xi(int j) const;
    // pointwise closed-form inverse; throws if |det| <= 0.1 anywhere
    const Mat3Field& grad_xi_inv(int j) const;
    const Field& det_grad_xi(int j) const;  // scalar field (cached)
    double grad_deviation(int j) const;     // sup |grad xi - Id|
    void release(int j) const;              // drop the cached derivatives

  private:
    mutable std::vector<char> have_;
    mutable std::vector<Mat3Field> grad_, inv_;
    mutable std::vector<Field> det_;
    void ensure(int j) const;
    friend FlowMap solve_flow(const FieldSeries&, int, double, double, double);
};

// Backward-characteristics flow map for the slab of index m.  The window
// [t_begin, t_end] must sit inside [t0, t0 + 5 eps / 4] (the closed slab
// (eps (m - 1/8), eps (m + 9/8))); xi is stored at
// every u_l sample time inside the window.  The RK4 step is the u_l
// sampling step (shortened to divide t - t0 evenly); if a single step can
// move a characteristic farther than half a grid cell the solve refuses
// and reports a sufficient step size.
FlowMap solve_flow(const FieldSeries& u_l, int m, double eps, double t_begin,
                   double t_end);

// Position at time r of the u_l characteristic through (t, y0); RK4 with
// steps no longer than the u_l sampling step.  r == t returns y0 exactly.
void flow_position(const FieldSeries& u_l, double t, double r,
                   const double y0[3], double out[3]);

// D_{t,l} f at the middle snapshot: (f_next - f_prev) / (2 dt) plus the
// spectral u_l . grad of f_cur (raw grid product; callers keep the inputs
// band-limited).  Exact in t for fields linear in t.
Field advective_derivative(const Field& f_prev, const Field& f_cur,
                           const Field& f_next, const Field& u_l, double dt);

enum class MollWeight { kernel, kernel_deriv };

// F_l(t, .) by quadrature of the mollification integral over the sample
// times of F inside [t - ltemp, t]; t itself must be a sample time, so no
// value of F later than t is ever touched.  Kernel weights are
// renormalized to unit mass (a time-constant F with u_l = 0 returns
// exactly P_{<= 1/l} F).  With MollWeight::kernel_deriv the same sweep
// accumulates -int (P_{<= 1/l}F)(t+s, mu) eta'(s) ds, the right-hand side
// of the advective-derivative identity for F_l, using the matching
// normalization.  Throws if ltemp spans fewer than 4 samples of F; when
// t - ltemp reaches before the first sample the kernel is truncated at
// the data front and renormalized (the constant-extension convention for
// early times).
Field lagrangian_mollify(const FieldSeries& F, const FieldSeries& u_l,
                         double l, double ltemp, double t,
                         MollWeight w = MollWeight::kernel);

}  // namespace wf
