#include "wildflow/transport.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "wildflow/bump.hpp"
#include "wildflow/spectral.hpp"

namespace wf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// index wrap for periodic grids; i may be any int produced by floor
inline int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

}  // namespace

double FieldSeries::dt() const {
    if (times.size() < 2)
        throw std::runtime_error("FieldSeries: need at least two samples");
    return (times.back() - times.front()) / double(times.size() - 1);
}

int FieldSeries::sample_index(double t) const {
    const double h = times.size() > 1 ? dt() : 1.0;
    for (std::size_t j = 0; j < times.size(); ++j)
        if (std::fabs(times[j] - t) <= 1e-9 * h) return int(j);
    return -1;
}

Field FieldSeries::at(double t) const {
    if (f.empty()) throw std::runtime_error("FieldSeries: empty");
    if (t <= times.front()) return f.front();
    if (t >= times.back()) return f.back();
    std::size_t j = 0;
    while (j + 2 < times.size() && times[j + 1] <= t) ++j;
    const double w = (t - times[j]) / (times[j + 1] - times[j]);
    Field out = (1.0 - w) * f[j];
    out.axpy(w, f[j + 1]);
    return out;
}

void trilinear_eval(const Field& f, const double y[3], double* out) {
    const int n = f.grid.n;
    const double s = n / kTwoPi;
    int i0[3], i1[3];
    double fr[3];
    for (int a = 0; a < 3; ++a) {
        const double u = y[a] * s;
        const double fl = std::floor(u);
        fr[a] = u - fl;
        i0[a] = wrap(int(fl), n);
        i1[a] = i0[a] + 1 == n ? 0 : i0[a] + 1;
    }
    const std::size_t nn = std::size_t(n);
    const std::size_t p000 = (std::size_t(i0[0]) * n + i0[1]) * n + i0[2];
    const std::size_t p001 = (std::size_t(i0[0]) * n + i0[1]) * n + i1[2];
    const std::size_t p010 = (std::size_t(i0[0]) * n + i1[1]) * n + i0[2];
    const std::size_t p011 = (std::size_t(i0[0]) * n + i1[1]) * n + i1[2];
    const std::size_t p100 = (std::size_t(i1[0]) * n + i0[1]) * n + i0[2];
    const std::size_t p101 = (std::size_t(i1[0]) * n + i0[1]) * n + i1[2];
    const std::size_t p110 = (std::size_t(i1[0]) * n + i1[1]) * n + i0[2];
    const std::size_t p111 = (std::size_t(i1[0]) * n + i1[1]) * n + i1[2];
    (void)nn;
    const double w000 = (1 - fr[0]) * (1 - fr[1]) * (1 - fr[2]);
    const double w001 = (1 - fr[0]) * (1 - fr[1]) * fr[2];
    const double w010 = (1 - fr[0]) * fr[1] * (1 - fr[2]);
    const double w011 = (1 - fr[0]) * fr[1] * fr[2];
    const double w100 = fr[0] * (1 - fr[1]) * (1 - fr[2]);
    const double w101 = fr[0] * (1 - fr[1]) * fr[2];
    const double w110 = fr[0] * fr[1] * (1 - fr[2]);
    const double w111 = fr[0] * fr[1] * fr[2];
    const int nc = components(f.rank);
    for (int c = 0; c < nc; ++c) {
        const double* v = f.comp(c);
        out[c] = w000 * v[p000] + w001 * v[p001] + w010 * v[p010] +
                 w011 * v[p011] + w100 * v[p100] + w101 * v[p101] +
                 w110 * v[p110] + w111 * v[p111];
    }
}

void FieldSeries::eval_vec(double t, const double y[3], double out[3]) const {
    if (f.empty()) throw std::runtime_error("FieldSeries: empty");
    if (f.front().rank != Rank::vector3)
        throw std::runtime_error("FieldSeries::eval_vec: not a vector field");
    if (t <= times.front() || times.size() == 1) {
        trilinear_eval(f.front(), y, out);
        return;
    }
    if (t >= times.back()) {
        trilinear_eval(f.back(), y, out);
        return;
    }
    std::size_t j = 0;
    while (j + 2 < times.size() && times[j + 1] <= t) ++j;
    const double w = (t - times[j]) / (times[j + 1] - times[j]);
    double a[3], b[3];
    trilinear_eval(f[j], y, a);
    trilinear_eval(f[j + 1], y, b);
    for (int c = 0; c < 3; ++c) out[c] = (1.0 - w) * a[c] + w * b[c];
}

namespace {

// u_l linearly interpolated to one instant, as a single field (so the
// inner trilinear loop touches one array set per RK4 stage).
Field slice_at(const FieldSeries& ul, double t) { return ul.at(t); }

// Advance every position in pos (xyz triples) from time ta to tb along
// dy/ds = u_l(s, y), RK4 with |step| <= hmax.  Positions are unwrapped
// reals; only the interpolation wraps.
void rk4_sweep(const FieldSeries& ul, double ta, double tb, double hmax,
               std::vector<double>& pos) {
    if (ta == tb) return;
    const int nsteps =
        std::max(1, int(std::ceil(std::fabs(tb - ta) / hmax - 1e-12)));
    const double h = (tb - ta) / nsteps;
    const std::size_t npt = pos.size() / 3;
    for (int st = 0; st < nsteps; ++st) {
        const double s0 = ta + st * h;
        const Field u0 = slice_at(ul, s0);
        const Field um = slice_at(ul, s0 + 0.5 * h);
        const Field u1 = slice_at(ul, s0 + h);
        for (std::size_t p = 0; p < npt; ++p) {
            double* y = pos.data() + 3 * p;
            double k1[3], k2[3], k3[3], k4[3], yt[3];
            trilinear_eval(u0, y, k1);
            for (int c = 0; c < 3; ++c) yt[c] = y[c] + 0.5 * h * k1[c];
            trilinear_eval(um, yt, k2);
            for (int c = 0; c < 3; ++c) yt[c] = y[c] + 0.5 * h * k2[c];
            trilinear_eval(um, yt, k3);
            for (int c = 0; c < 3; ++c) yt[c] = y[c] + h * k3[c];
            trilinear_eval(u1, yt, k4);
            for (int c = 0; c < 3; ++c)
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
}

std::vector<double> grid_positions(const GridSpec& g) {
    const int n = g.n;
    const double dx = kTwoPi / n;
    std::vector<double> pos(3 * g.points());
    std::size_t p = 0;
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy)
            for (int iz = 0; iz < n; ++iz) {
                pos[3 * p + 0] = ix * dx;
                pos[3 * p + 1] = iy * dx;
                pos[3 * p + 2] = iz * dx;
                ++p;
            }
    return pos;
}

}  // namespace

int FlowMap::index_of(double t) const {
    for (std::size_t j = 0; j < times.size(); ++j)
        if (std::fabs(times[j] - t) <= 1e-10) return int(j);
    throw std::runtime_error("FlowMap: time not stored");
}

void FlowMap::ensure(int j) const {
    if (j < 0 || j >= int(times.size()))
        throw std::runtime_error("FlowMap: index out of range");
    if (have_.size() != times.size()) {
        have_.assign(times.size(), 0);
        grad_.resize(times.size());
        inv_.resize(times.size());
        det_.resize(times.size());
    }
    if (have_[j]) return;
    // grad xi = Id - grad d, each column by spectral differentiation
    std::array<Field, 3> dcol;  // dcol[a] = d_a disp (all components)
    for (int a = 0; a < 3; ++a) dcol[a] = derivative(disp[j], a);
    Mat3Field G, Inv;
    for (int i = 0; i < 3; ++i) {
        G.row[i] = Field(grid, Rank::vector3);
        Inv.row[i] = Field(grid, Rank::vector3);
        for (int a = 0; a < 3; ++a) {
            double* dst = G.row[i].comp(a);
            const double* src = dcol[a].comp(i);
            const double diag = (i == a) ? 1.0 : 0.0;
            for (std::size_t p = 0; p < grid.points(); ++p)
                dst[p] = diag - src[p];
        }
    }
    Field det(grid, Rank::scalar);
    for (std::size_t p = 0; p < grid.points(); ++p) {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 3; ++a) m[i][a] = G.row[i].comp(a)[p];
        const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        const double d = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
        det.comp(0)[p] = d;
        if (std::fabs(d) <= 0.1)
            throw std::runtime_error(
                "FlowMap: grad xi determinant below 0.1, flow map degenerate");
        const double id = 1.0 / d;
        Inv.row[0].comp(0)[p] = c00 * id;
        Inv.row[1].comp(0)[p] = c01 * id;
        Inv.row[2].comp(0)[p] = c02 * id;
        Inv.row[0].comp(1)[p] =
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id;
        Inv.row[1].comp(1)[p] =
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id;
        Inv.row[2].comp(1)[p] =
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id;
        Inv.row[0].comp(2)[p] =
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id;
        Inv.row[1].comp(2)[p] =
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id;
        Inv.row[2].comp(2)[p] =
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id;
    }
    grad_[j] = std::move(G);
    inv_[j] = std::move(Inv);
    det_[j] = std::move(det);
    have_[j] = 1;
}

const Mat3Field& FlowMap::grad_xi(int j) const {
    ensure(j);
    return grad_[j];
}

const Mat3Field& FlowMap::grad_xi_inv(int j) const {
    ensure(j);
    return inv_[j];
}

const Field& FlowMap::det_grad_xi(int j) const {
    ensure(j);
    return det_[j];
}

double FlowMap::grad_deviation(int j) const {
    ensure(j);
    double dev = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 3; ++a) {
            const double* v = grad_[j].row[i].comp(a);
            const double diag = (i == a) ? 1.0 : 0.0;
            for (std::size_t p = 0; p < grid.points(); ++p)
                dev = std::max(dev, std::fabs(v[p] - diag));
        }
    return dev;
}

void FlowMap::release(int j) const {
    if (j < 0 || std::size_t(j) >= have_.size() || !have_[j]) return;
    have_[j] = 0;
    grad_[j] = Mat3Field{};
    inv_[j] = Mat3Field{};
    det_[j] = Field{};
}

FlowMap solve_flow(const FieldSeries& u_l, int m, double eps, double t_begin,
                   double t_end) {
    if (u_l.f.empty() || u_l.f.front().rank != Rank::vector3)
        throw std::runtime_error("solve_flow: u_l must be a vector series");
    const double t0 = eps * (m - 0.125);
    if (t_begin < t0 - 1e-12 || t_end > t0 + 1.25 * eps + 1e-12 ||
        t_end < t_begin - 1e-12)
        throw std::runtime_error(
            "solve_flow: window outside the slab [t0, t0 + 5 eps / 4]");
    FlowMap fm;
    fm.t0 = t0;
    fm.grid = u_l.f.front().grid;
    const double h0 = u_l.times.size() > 1 ? u_l.dt() : eps;
    // CFL: one RK4 step must not move a characteristic past half a cell
    double umax = 0.0, c1 = 0.0;
    for (std::size_t j = 0; j < u_l.times.size(); ++j) {
        if (u_l.times[j] < t_begin - h0 || u_l.times[j] > t_end + h0) continue;
        umax = std::max(umax, field_max_abs(u_l.f[j]));
        c1 = std::max(c1, holder_norm(u_l.f[j], 1, 0.0));
    }
    fm.ul_c1 = c1;
    const double dx = fm.grid.dx();
    if (umax * h0 > 0.5 * dx) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "solve_flow: CFL violation, step %.3e moves up to %.3e "
                      "(half cell %.3e); use dt <= %.3e",
                      h0, umax * h0, 0.5 * dx, 0.45 * dx / umax);
        throw std::runtime_error(buf);
    }
    if (eps * c1 >= 0.5) {
        fm.window_warning = true;
        std::fprintf(stderr,
                     "solve_flow: warning, eps * ||u_l||_1 = %.3e >= 1/2; "
                     "flow map may leave the near-identity regime\n",
                     eps * c1);
    }
    for (std::size_t j = 0; j < u_l.times.size(); ++j) {
        const double t = u_l.times[j];
        if (t < t_begin - 1e-12 || t > t_end + 1e-12) continue;
        std::vector<double> pos = grid_positions(fm.grid);
        rk4_sweep(u_l, t, t0, h0, pos);
        Field d(fm.grid, Rank::vector3);
        const std::vector<double> ref = grid_positions(fm.grid);
        for (int c = 0; c < 3; ++c) {
            double* dst = d.comp(c);
            for (std::size_t p = 0; p < fm.grid.points(); ++p)
                dst[p] = ref[3 * p + c] - pos[3 * p + c];
        }
        fm.times.push_back(t);
        fm.disp.push_back(std::move(d));
    }
    if (fm.times.empty()) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "solve_flow: no u_l samples in window [%.9g, %.9g] "
                      "(slab m = %d, eps = %.3e)",
                      t_begin, t_end, m, eps);
        throw std::runtime_error(buf);
    }
    return fm;
}

void flow_position(const FieldSeries& u_l, double t, double r,
                   const double y0[3], double out[3]) {
    for (int c = 0; c < 3; ++c) out[c] = y0[c];
    if (r == t) return;
    const double h0 = u_l.times.size() > 1 ? u_l.dt() : std::fabs(r - t);
    std::vector<double> pos(out, out + 3);
    rk4_sweep(u_l, t, r, h0, pos);
    for (int c = 0; c < 3; ++c) out[c] = pos[c];
}

Field advective_derivative(const Field& f_prev, const Field& f_cur,
                           const Field& f_next, const Field& u_l, double dt) {
    f_prev.check_same_layout(f_cur, "advective_derivative");
    f_next.check_same_layout(f_cur, "advective_derivative");
    if (dt <= 0.0)
        throw std::runtime_error("advective_derivative: dt must be positive");
    Field out = f_next;
    out -= f_prev;
    out *= 1.0 / (2.0 * dt);
    out += advect_raw(u_l, f_cur);
    return out;
}

Field lagrangian_mollify(const FieldSeries& F, const FieldSeries& u_l,
                         double l, double ltemp, double t, MollWeight w) {
    if (F.f.empty()) throw std::runtime_error("lagrangian_mollify: empty F");
    const double dtF = F.dt();
    if (ltemp < 4.0 * dtF - 1e-12)
        throw std::runtime_error(
            "lagrangian_mollify: insufficient snapshots, ltemp spans fewer "
            "than 4 samples");
    const int jt = F.sample_index(t);
    if (jt < 0)
        throw std::runtime_error(
            "lagrangian_mollify: t must be a sample time of F");
    // quadrature nodes: the F sample times inside [t - ltemp, t].  When
    // t - ltemp falls before the first sample the kernel is truncated at
    // the data front and renormalized; for a transport field that is
    // constant over the missing range this agrees with the constant
    // extension of F to earlier times.
    int jlo = jt;
    while (jlo > 0 && F.times[jlo - 1] >= t - ltemp - 1e-12) --jlo;
    std::vector<double> wk(jt - jlo + 1), wd(jt - jlo + 1);
    double mass = 0.0;
    for (int j = jlo; j <= jt; ++j) {
        const double s = F.times[j] - t;
        const double u = s / ltemp + 1.0;
        wk[j - jlo] = bump01(u) / ltemp;
        wd[j - jlo] = bump01_deriv(u) / (ltemp * ltemp);
        mass += wk[j - jlo] * dtF;
    }
    if (mass <= 0.0) {
        // truncation so severe that every surviving node sits at a zero
        // of the bump (t at or next to the first sample): collapse the
        // kernel to a point mass at the earliest node
        if (w != MollWeight::kernel)
            throw std::runtime_error("lagrangian_mollify: kernel mass vanished");
        wk.assign(wk.size(), 0.0);
        wk[0] = 1.0 / dtF;
        mass = 1.0;
    }
    const GridSpec grid = F.f.front().grid;
    const Rank rank = F.f.front().rank;
    const int nc = components(rank);
    Field out(grid, rank);
    std::vector<double> pos = grid_positions(grid);
    const double h0 = u_l.times.size() > 1 ? u_l.dt() : dtF;
    std::vector<double> vals(nc);
    for (int j = jt; j >= jlo; --j) {
        if (j < jt) rk4_sweep(u_l, F.times[j + 1], F.times[j], h0, pos);
        const double weight = (w == MollWeight::kernel)
                                  ? wk[j - jlo] * dtF / mass
                                  : -wd[j - jlo] * dtF / mass;
        if (weight == 0.0) continue;
        const Field G = project_low(F.f[j], l);
        for (std::size_t p = 0; p < grid.points(); ++p) {
            trilinear_eval(G, pos.data() + 3 * p, vals.data());
            for (int c = 0; c < nc; ++c) out.comp(c)[p] += weight * vals[c];
        }
    }
    return out;
}

}  // namespace wf
