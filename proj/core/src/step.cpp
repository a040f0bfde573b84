#include "wildflow/step.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "wildflow/partitions.hpp"
#include "wildflow/residuals.hpp"
#include "wildflow/spectral.hpp"
#include "wildflow/transport.hpp"

namespace wf {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

// row-major 3x3 times vector
inline void mat_vec(const double G[9], const double v[3], double out[3]) {
    for (int i = 0; i < 3; ++i)
        out[i] = G[3 * i] * v[0] + G[3 * i + 1] * v[1] + G[3 * i + 2] * v[2];
}

inline void mat_T_vec(const double G[9], const double v[3], double out[3]) {
    for (int i = 0; i < 3; ++i)
        out[i] = G[i] * v[0] + G[i + 3] * v[1] + G[i + 6] * v[2];
}

// K = G G^T - G X G^T / rho, X symmetric (sym6), K returned as sym6
inline void gamma_argument(const double G[9], const double X[6], double rho,
                           double K[6]) {
    // full 3x3 of X
    const double Xf[9] = {X[0], X[3], X[4], X[3], X[1], X[5], X[4], X[5], X[2]};
    double Y[9];  // (Id - X / rho) acting between G and G^T
    for (int i = 0; i < 9; ++i) Y[i] = -Xf[i] / rho;
    Y[0] += 1.0;
    Y[4] += 1.0;
    Y[8] += 1.0;
    double GY[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            GY[3 * i + j] = G[3 * i] * Y[j] + G[3 * i + 1] * Y[j + 3] +
                            G[3 * i + 2] * Y[j + 6];
    auto row_dot = [&](int i, int j) {
        return GY[3 * i] * G[3 * j] + GY[3 * i + 1] * G[3 * j + 1] +
               GY[3 * i + 2] * G[3 * j + 2];
    };
    K[0] = row_dot(0, 0);
    K[1] = row_dot(1, 1);
    K[2] = row_dot(2, 2);
    K[3] = 0.5 * (row_dot(0, 1) + row_dot(1, 0));
    K[4] = 0.5 * (row_dot(0, 2) + row_dot(2, 0));
    K[5] = 0.5 * (row_dot(1, 2) + row_dot(2, 1));
}

// the (at most 2) windows theta0(y - n) != 0 along one partition axis,
// with values; n wrapped into [0, ncells)
struct AxisWin {
    int n[2];
    double v[2];
    int cnt = 0;
};

inline AxisWin axis_windows(double y, int ncells) {
    AxisWin w;
    const int hi = int(std::floor(y + 0.125));
    for (int n = hi - 1; n <= hi; ++n) {
        const double v = theta_window(y - n);
        if (v <= 0.0) continue;
        int nr = n % ncells;
        if (nr < 0) nr += ncells;
        w.n[w.cnt] = nr;
        w.v[w.cnt] = v;
        ++w.cnt;
    }
    return w;
}

// internal: the 4 current amplitudes and transported directions of one
// class at one point
struct PhiAmps {
    double a[4];
    double fbar[4][3];
    double nf2[4];
};

PhiAmps phi_amps4(const StepGeometry& g, int cls, const double G[9],
                  const double Ginv[9], const double phil[3], double rho1) {
    const double scale = g.Mbar * g.Mbar * g.Mbar * rho1;
    double u[3];
    mat_vec(G, phil, u);
    std::array<double, 3> ua{-u[0] / scale, -u[1] / scale, -u[2] / scale};
    const double nu = std::sqrt(ua[0] * ua[0] + ua[1] * ua[1] + ua[2] * ua[2]);
    if (nu > g.n0_target) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "current amplitude: argument norm %.3e outside the "
                      "certified ball %.3g (class %d)",
                      nu, g.n0_target, cls);
        throw std::runtime_error(buf);
    }
    const auto lam = lambda_coeffs(ua, g.fam.Phi[cls], g.n0_target);
    PhiAmps out;
    const double pref = g.Mbar * std::cbrt(rho1);
    for (int i = 0; i < 4; ++i) {
        const IVec& f = g.fam.Phi[cls].k[i];
        const double fv[3] = {double(f[0]), double(f[1]), double(f[2])};
        mat_vec(Ginv, fv, out.fbar[i]);
        out.nf2[i] = out.fbar[i][0] * out.fbar[i][0] +
                     out.fbar[i][1] * out.fbar[i][1] +
                     out.fbar[i][2] * out.fbar[i][2];
        out.a[i] =
            std::pow(out.nf2[i], -1.0 / 3.0) * std::cbrt(2.0 * lam[i]) * pref;
    }
    return out;
}

}  // namespace

StepGeometry build_step_geometry(int n2d, int kmax3d, double eta_scale) {
    StepGeometry g;
    g.fam = build_families();
    g.inf_n0 = min_family_n0(g.fam);
    for (int cls = 0; cls < 27; ++cls) g.gamma.emplace_back(g.fam.R[cls]);
    for (int cls = 0; cls < 27; ++cls)
        g.Mbar =
            std::max(g.Mbar, lambda_offset(g.fam.Phi[cls], g.n0_target));
    const auto radius = pipe_radii(g.fam, eta_scale);
    g.pipe.resize(27);
    for (int cls = 0; cls < 27; ++cls)
        for (int slot = 0; slot < 10; ++slot) {
            const IVec f = slot_direction(g.fam, cls, slot);
            const char kind = slot < 6 ? 'R' : 'C';
            const double eta = eta_for_support(kind, radius[cls][slot]);
            g.pipe[cls][slot] = build_pipe(f, kind, eta, n2d, kmax3d);
            g.max_pipe_mode =
                std::max(g.max_pipe_mode, g.pipe[cls][slot].max_mode);
        }
    g.plan = choose_shifts(g.fam, radius);
    return g;
}

double phi_amplitude(const StepGeometry& g, int cls, int slot,
                     const double G[9], const double Ginv[9],
                     const double phil[3], double rho1) {
    if (slot < 6 || slot > 9)
        throw std::runtime_error("phi_amplitude: slot must be 6..9");
    return phi_amps4(g, cls, G, Ginv, phil, rho1).a[slot - 6];
}

std::array<double, 6> r_amplitudes(const StepGeometry& g, int cls,
                                   const double G[9], const double Rl[6],
                                   const double M[6], double rho) {
    double X[6];
    for (int i = 0; i < 6; ++i) X[i] = Rl[i] + M[i];
    double K[6];
    gamma_argument(G, X, rho, K);
    std::array<double, 6> Karr{K[0], K[1], K[2], K[3], K[4], K[5]};
    if (!g.gamma[cls].coeffs_positive(Karr)) {
        double dev = 0.0;
        for (int i = 0; i < 6; ++i)
            dev = std::max(dev,
                           std::fabs(K[i] - (i < 3 ? 1.0 : 0.0)));
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "stress amplitude: decomposition argument outside the "
                      "domain, |K - Id| = %.3e vs N0 = %.3e (class %d); a "
                      "larger rho prefactor may be needed",
                      dev, g.fam.R[cls].n0, cls);
        throw std::runtime_error(buf);
    }
    auto gam = g.gamma[cls].gammas(Karr);
    const double sr = std::sqrt(rho);
    std::array<double, 6> a;
    for (int i = 0; i < 6; ++i) a[i] = gam[i] * sr;
    return a;
}

std::string StepReport::manifest() const {
    std::ostringstream os;
    os.precision(10);
    os << "step.q_from = " << q << "\n"
       << "guard.ul_c1 = " << ul_c1 << "\n"
       << "guard.eps_ul_c1 = " << eps_ul_c1 << "\n"
       << "guard.grad_dev_max = " << grad_dev_max << "\n"
       << "guard.det_min = " << det_min << "\n"
       << "guard.fbar_min = " << fbar_min << "\n"
       << "cancel.c0_gap = " << c0_gap << "\n"
       << "cancel.d0_gap = " << d0_gap << "\n"
       << "cancel.rho = " << rho << "\n"
       << "cancel.rho1 = " << rho1 << "\n"
       << "cancel.phil_sup = " << phil_sup << "\n"
       << "check.div_w_rel = " << div_w_rel << "\n"
       << "check.trace_err = " << trace_err << "\n"
       << "size.w_sup = " << w_sup << "\n"
       << "size.wc_sup = " << wc_sup << "\n"
       << "size.a_min = " << a_min << "\n"
       << "size.a_max = " << a_max << "\n"
       << "size.dv_c0 = " << dv_c0 << "\n"
       << "size.dv_c1_scaled = " << dv_c1_scaled << "\n";
    os << "f =";
    for (double x : f) os << " " << x;
    os << "\n";
    return os.str();
}

ErState iterate_step(const ErState& st, const NoisePath& path,
                     const Cascade& c, const StepGeometry& geo,
                     StepReport* rep) {
    const int q = st.q;
    const std::size_t J = st.times.size();
    if (J < 5)
        throw std::runtime_error("iterate_step: need at least 5 snapshots");
    if (std::size_t(q + 1) >= c.lambda.size())
        throw std::runtime_error("iterate_step: cascade arrays too short");
    const double dt = st.times[1] - st.times[0];
    for (std::size_t j = 1; j < J; ++j)
        if (std::fabs(st.times[j] - st.times[j - 1] - dt) > 1e-9 * dt)
            throw std::runtime_error("iterate_step: nonuniform time grid");

    const double eps = c.eps[q], mu_raw = c.mu[q];
    const double l = c.l[q], lt = c.ltemp[q];
    const double rho = c.rho[q], rho1 = c.rho1[q];
    const long lambda1 = long(c.lambda[q + 1]);
    const int n = st.grid.n;
    const std::size_t np = st.grid.points();

    if (double(lambda1) * geo.max_pipe_mode > (n / 2) / 1.5) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "iterate_step: resolution guard, lambda_{q+1} = %ld "
                      "times pipe band %d exceeds n/3 = %d",
                      lambda1, geo.max_pipe_mode, n / 3);
        throw std::runtime_error(buf);
    }
    if (lt < 4.0 * dt) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "iterate_step: temporal sampling too coarse, ltemp = "
                      "%.3e spans fewer than 4 steps of dt = %.3e",
                      lt, dt);
        throw std::runtime_error(buf);
    }

    const int Nc = snap_cells(mu_raw);
    StepReport local_rep;
    StepReport& R = rep ? *rep : local_rep;
    R = StepReport{};
    R.q = q;
    R.rho = rho;
    R.rho1 = rho1;
    R.fbar_min = 1e300;
    R.a_min = 1e300;

    /*
     * Regularized fields: spatial low pass at l, then the Lagrangian time
     * mollification of stress and current.  Near the first snapshot the
     * mollification kernel is truncated at the data front (the constant
     * extension convention for earlier times).
     */
    FieldSeries ul;
    ul.times = st.times;
    std::vector<Field> vl(J), zl(J), pl(J);
    for (std::size_t j = 0; j < J; ++j) {
        vl[j] = project_low(st.v[j], l);
        zl[j] = project_low(st.z[j], l);
        pl[j] = project_low(st.p[j], l);
        ul.f.push_back(vl[j] + zl[j]);
    }

    FieldSeries Rq_s, phiq_s;
    Rq_s.times = phiq_s.times = st.times;
    Rq_s.f = st.R;
    phiq_s.f = st.phi;

    std::vector<Field> Rl(J), phil(J), znew(J);
    for (std::size_t j = 0; j < J; ++j) {
        // The composition with the flow broadens the spectral support of
        // the mollified fields; a final low pass returns them to the band
        // they represent.  Without it their high-mode tail, multiplied by
        // order-one noise fields, lands on the Nyquist plane where the
        // antidivergence current cannot reach it.
        Rl[j] = project_low(lagrangian_mollify(Rq_s, ul, l, lt, st.times[j]),
                            l);
        phil[j] = project_low(
            lagrangian_mollify(phiq_s, ul, l, lt, st.times[j]), l);
        R.phil_sup = std::max(R.phil_sup, sup_abs(phil[j]));
        Field zm = mollify_at(path, c.i_moll[q + 1], st.times[j]);
        znew[j] = (zm.grid.n == n) ? std::move(zm) : resample(zm, n);
    }

    /*
     * Backward flow maps, one per active time slab.  A slab m covers
     * (eps(m - 1/8), eps(m + 9/8)); every snapshot lies in at most two.
     */
    std::map<int, FlowMap> flows;
    for (std::size_t j = 0; j < J; ++j) {
        int mm[2];
        const int cnt = active_windows_axis(st.times[j] / eps, 0, mm);
        for (int s = 0; s < cnt; ++s) {
            const int m = mm[s];
            if (flows.count(m)) continue;
            const double t0 = eps * (m - 0.125);
            const double wa = std::max(t0, st.times.front());
            const double wb = std::min(t0 + 1.25 * eps, st.times.back());
            flows.emplace(m, solve_flow(ul, m, eps, wa, wb));
            R.ul_c1 = std::max(R.ul_c1, flows.at(m).ul_c1);
        }
    }
    R.eps_ul_c1 = eps * R.ul_c1;

    /*
     * Assembly sweep: for every snapshot, accumulate at each grid point
     * the oscillatory perturbation w_o, the vector potential A, the zero
     * modes c0, d0, and the current-piece tensor M feeding the stress
     * amplitudes.  M at a point is the same for every cell active there
     * (all concurrently supported current pieces sit within partition
     * distance one), so it is accumulated once per point.
     */
    std::vector<Field> w(J), wo(J), c0f(J), Sf(J);
    double wtot_l2 = 0.0, divw_l2 = 0.0;

    for (std::size_t j = 0; j < J; ++j) {
        const double t = st.times[j];
        int mm[2];
        const int nslab = active_windows_axis(t / eps, 0, mm);

        struct SlabData {
            int m = 0;
            double theta = 0.0;
            const Field* disp = nullptr;
            const Mat3Field* G = nullptr;
            const Mat3Field* Gi = nullptr;
            const Field* det = nullptr;
            int ji = -1;
        };
        std::vector<SlabData> sl;
        for (int s = 0; s < nslab; ++s) {
            SlabData d;
            d.m = mm[s];
            d.theta = theta_window(t / eps - d.m);
            if (d.theta <= 0.0) continue;
            const FlowMap& fm = flows.at(d.m);
            d.ji = fm.index_of(t);
            d.disp = &fm.disp[d.ji];
            d.G = &fm.grad_xi(d.ji);
            d.Gi = &fm.grad_xi_inv(d.ji);
            d.det = &fm.det_grad_xi(d.ji);
            R.grad_dev_max =
                std::max(R.grad_dev_max, fm.grad_deviation(d.ji));
            sl.push_back(d);
        }

        Field A(st.grid, Rank::vector3);
        Field wof(st.grid, Rank::vector3);
        Field c0j(st.grid, Rank::sym3x3);
        const Field& Rlj = Rl[j];
        const Field& phj = phil[j];
        double c0_gap = 0.0, d0_gap = 0.0;

        const double dxg = st.grid.dx();
        for (int ix = 0; ix < n; ++ix)
            for (int iy = 0; iy < n; ++iy)
                for (int iz = 0; iz < n; ++iz) {
                    const std::size_t p = wof.point_index(ix, iy, iz);
                    const double x[3] = {ix * dxg, iy * dxg, iz * dxg};
                    double phl[3], Rlp[6];
                    for (int i = 0; i < 3; ++i) phl[i] = phj.comp(i)[p];
                    for (int i = 0; i < 6; ++i) Rlp[i] = Rlj.comp(i)[p];

                    // per active slab: flowed point and flow gradient
                    double xi[2][3], Gp[2][9], Gip[2][9];
                    for (std::size_t s = 0; s < sl.size(); ++s) {
                        for (int i = 0; i < 3; ++i)
                            xi[s][i] = x[i] - sl[s].disp->comp(i)[p];
                        for (int i = 0; i < 3; ++i)
                            for (int a = 0; a < 3; ++a) {
                                Gp[s][3 * i + a] = sl[s].G->at(i, a, p);
                                Gip[s][3 * i + a] = sl[s].Gi->at(i, a, p);
                            }
                        R.det_min =
                            std::min(R.det_min, sl[s].det->a[p]);
                    }

                    double Msym[6] = {0, 0, 0, 0, 0, 0};
                    double wop[3] = {0, 0, 0}, Ap[3] = {0, 0, 0};
                    double d0p[3] = {0, 0, 0};
                    double c0p[6] = {0, 0, 0, 0, 0, 0};

                    // current pieces first: their squared amplitudes feed
                    // the stress amplitudes through M
                    for (std::size_t s = 0; s < sl.size(); ++s) {
                        const double th2 = sl[s].theta * sl[s].theta;
                        AxisWin ax[3];
                        for (int a = 0; a < 3; ++a)
                            ax[a] = axis_windows(
                                xi[s][a] * Nc / two_pi, Nc);
                        for (int i0 = 0; i0 < ax[0].cnt; ++i0)
                            for (int i1 = 0; i1 < ax[1].cnt; ++i1)
                                for (int i2 = 0; i2 < ax[2].cnt; ++i2) {
                                    const double chi = ax[0].v[i0] *
                                                       ax[1].v[i1] *
                                                       ax[2].v[i2];
                                    const int cls =
                                        DirectionFamilies::class_index(
                                            ax[0].n[i0], ax[1].n[i1],
                                            ax[2].n[i2]);
                                    const PhiAmps pa = phi_amps4(
                                        geo, cls, Gp[s], Gip[s], phl, rho1);
                                    const double W = th2 * chi * chi;
                                    const double W2 = W * W, W3 = W2 * W;
                                    for (int i = 0; i < 4; ++i) {
                                        const int slot = 6 + i;
                                        const PipeProfile& pp =
                                            geo.pipe[cls][slot];
                                        const auto sh = geo.plan.shift(
                                            sl[s].m, cls, slot);
                                        double yl[3], B[3];
                                        for (int a = 0; a < 3; ++a)
                                            yl[a] = lambda1 * xi[s][a] -
                                                    sh[a];
                                        const double psi =
                                            pipe_eval_grid(pp, yl);
                                        pipe_potential(pp, yl, B);
                                        const double a1 = pa.a[i];
                                        const double a2 = a1 * a1;
                                        const double a3 = a2 * a1;
                                        double GtB[3];
                                        mat_T_vec(Gp[s], B, GtB);
                                        const double cw = W * a1;
                                        for (int a = 0; a < 3; ++a) {
                                            wop[a] += cw * psi *
                                                      pa.fbar[i][a];
                                            Ap[a] += cw * GtB[a] /
                                                     double(lambda1);
                                            d0p[a] += W3 * a3 *
                                                      (pa.nf2[i] / 2.0) *
                                                      pa.fbar[i][a] *
                                                      pp.mean3;
                                        }
                                        const double m2c =
                                            W2 * a2 * pp.mean2;
                                        const double* fb = pa.fbar[i];
                                        Msym[0] += m2c * fb[0] * fb[0];
                                        Msym[1] += m2c * fb[1] * fb[1];
                                        Msym[2] += m2c * fb[2] * fb[2];
                                        Msym[3] += m2c * fb[0] * fb[1];
                                        Msym[4] += m2c * fb[0] * fb[2];
                                        Msym[5] += m2c * fb[1] * fb[2];
                                        R.a_min = std::min(R.a_min, a1);
                                        R.a_max = std::max(R.a_max, a1);
                                        R.fbar_min = std::min(
                                            R.fbar_min,
                                            std::sqrt(pa.nf2[i]));
                                    }
                                }
                    }
                    for (int i = 0; i < 6; ++i) c0p[i] = Msym[i];

                    // stress pieces: amplitudes cancel R_l + M exactly
                    for (std::size_t s = 0; s < sl.size(); ++s) {
                        const double th = sl[s].theta;
                        const double th3 = th * th * th;
                        AxisWin ax[3];
                        for (int a = 0; a < 3; ++a)
                            ax[a] = axis_windows(
                                xi[s][a] * Nc / two_pi, Nc);
                        for (int i0 = 0; i0 < ax[0].cnt; ++i0)
                            for (int i1 = 0; i1 < ax[1].cnt; ++i1)
                                for (int i2 = 0; i2 < ax[2].cnt; ++i2) {
                                    const double chi = ax[0].v[i0] *
                                                       ax[1].v[i1] *
                                                       ax[2].v[i2];
                                    const int cls =
                                        DirectionFamilies::class_index(
                                            ax[0].n[i0], ax[1].n[i1],
                                            ax[2].n[i2]);
                                    const auto amp = r_amplitudes(
                                        geo, cls, Gp[s], Rlp, Msym, rho);
                                    const double W =
                                        th3 * chi * chi * chi;
                                    const double W2 = W * W, W3 = W2 * W;
                                    for (int slot = 0; slot < 6; ++slot) {
                                        const PipeProfile& pp =
                                            geo.pipe[cls][slot];
                                        const IVec& f =
                                            geo.fam.R[cls].k[slot];
                                        const double fv[3] = {
                                            double(f[0]), double(f[1]),
                                            double(f[2])};
                                        double fb[3];
                                        mat_vec(Gip[s], fv, fb);
                                        const double nf2 =
                                            fb[0] * fb[0] + fb[1] * fb[1] +
                                            fb[2] * fb[2];
                                        const auto sh = geo.plan.shift(
                                            sl[s].m, cls, slot);
                                        double yl[3], B[3];
                                        for (int a = 0; a < 3; ++a)
                                            yl[a] = lambda1 * xi[s][a] -
                                                    sh[a];
                                        const double psi =
                                            pipe_eval_grid(pp, yl);
                                        pipe_potential(pp, yl, B);
                                        const double a1 = amp[slot];
                                        const double a2 = a1 * a1;
                                        const double a3 = a2 * a1;
                                        double GtB[3];
                                        mat_T_vec(Gp[s], B, GtB);
                                        const double cw = W * a1;
                                        for (int a = 0; a < 3; ++a) {
                                            wop[a] += cw * psi * fb[a];
                                            Ap[a] += cw * GtB[a] /
                                                     double(lambda1);
                                            d0p[a] += W3 * a3 *
                                                      (nf2 / 2.0) * fb[a] *
                                                      pp.mean3;
                                        }
                                        const double m2c =
                                            W2 * a2 * pp.mean2;
                                        c0p[0] += m2c * fb[0] * fb[0];
                                        c0p[1] += m2c * fb[1] * fb[1];
                                        c0p[2] += m2c * fb[2] * fb[2];
                                        c0p[3] += m2c * fb[0] * fb[1];
                                        c0p[4] += m2c * fb[0] * fb[2];
                                        c0p[5] += m2c * fb[1] * fb[2];
                                        R.a_min = std::min(R.a_min, a1);
                                        R.a_max = std::max(R.a_max, a1);
                                        R.fbar_min = std::min(
                                            R.fbar_min, std::sqrt(nf2));
                                    }
                                }
                    }

                    for (int i = 0; i < 3; ++i) {
                        wof.comp(i)[p] = wop[i];
                        A.comp(i)[p] = Ap[i];
                        d0_gap = std::max(d0_gap,
                                          std::fabs(d0p[i] + phl[i]));
                    }
                    for (int i = 0; i < 6; ++i) {
                        c0j.comp(i)[p] = c0p[i];
                        const double target = (i < 3 ? rho : 0.0);
                        c0_gap = std::max(
                            c0_gap,
                            std::fabs(c0p[i] + Rlp[i] - target));
                    }
                }

        for (const SlabData& d : sl) flows.at(d.m).release(d.ji);

        R.c0_gap = std::max(R.c0_gap, c0_gap);
        R.d0_gap = std::max(R.d0_gap, d0_gap);

        w[j] = curl(A);
        wo[j] = std::move(wof);
        c0f[j] = std::move(c0j);
        Sf[j] = dot(wo[j], wo[j]) - trace_of(c0f[j]);
        R.w_sup = std::max(R.w_sup, sup_abs(w[j]));
        wtot_l2 = std::max(wtot_l2, l2_norm(w[j]));
        divw_l2 = std::max(divw_l2, l2_norm(div_vector(w[j])));
    }
    R.div_w_rel = wtot_l2 > 0.0 ? divw_l2 / wtot_l2 : 0.0;

    /*
     * Stress decomposition and the scalar trace correction f.  The
     * antidivergence stress R_A reuses the residual module's time
     * stencil for d_t w so the momentum defect of the new tuple
     * telescopes to the old one plus aliasing commutators.
     */
    std::vector<Field> RA(J), Rpre(J);
    for (std::size_t j = 0; j < J; ++j) {
        const Field& ulj = ul.f[j];
        Field src = time_derivative_sample(w, st.times, j);
        src += div_outer(w[j], ulj);
        src += div_outer(ulj, w[j]);
        src += div_outer(wo[j], wo[j]);
        src -= div_sym_tensor(c0f[j]);
        RA[j] = antidiv_tensor(src);

        Field wc = w[j] - wo[j];
        R.wc_sup = std::max(R.wc_sup, sup_abs(wc));
        Field RT = outer_self(wc);
        RT += sym_outer(wc, wo[j]);
        RT += sym_outer(w[j], st.v[j] - vl[j]);
        RT += st.R[j];
        RT -= Rl[j];

        const Field zbar = znew[j] - st.z[j];
        const Field uq = st.v[j] + st.z[j];
        Field RS = ring_outer(w[j], znew[j] - zl[j]);
        RS += ring_outer(uq, zbar);
        RS += ring_outer_self(zbar);

        Rpre[j] = RA[j] + RT + RS;
    }

    /*
     * Current update.  The new current must close, exactly on the grid,
     * the remainder of the local energy identity of the new tuple after
     * the old identity and the two momentum equations are substituted:
     *
     *   div(phi_{q+1} - phi_q) + d_t f
     *     = v_{q+1} . div R_pre - v_q . div R_q
     *       - d_t sigma - u_{q+1} . grad sigma
     *       - (1/2) (w + zbar) . grad Tr R_q
     *       - div(R_pre v_{q+1} - R_q v_q)
     *       - R_pre : grad z_{q+1}^T + R_q : grad z_q^T,
     *
     * with sigma := Tr(R_pre - R_q)/2 and zbar := z_{q+1} - z_q.  (The
     * trace part (2/3) f Id of the final stress drops out of every slot:
     * f is spatially constant and all the vectors it multiplies are
     * divergence free.)  The stochastic and deterministic transport
     * currents below carry the explicit divergence-form share of that
     * requirement; the two contraction integrands tied to the
     * antidivergence stress are antidivergenced on their own; whatever is
     * left of the requirement becomes the integrand of the antidivergence
     * current.  Space means integrate (composite trapezoid from the first
     * snapshot) into f.
     */
    std::vector<Field> expl(J), vphiD2(J), vphiS2(J), sig(J), pbar(J);
    std::vector<Field> pnew(J), phinew(J), Rnew(J), vnew(J);
    std::vector<double> fint(J, 0.0), gmean(J, 0.0);

    for (std::size_t j = 0; j < J; ++j) {
        const Field& ulj = ul.f[j];
        const Field zbar = znew[j] - st.z[j];
        const Field zdl = znew[j] - zl[j];  // z_{q+1} - z_l
        const Field uq = st.v[j] + st.z[j];
        const Field vdl = st.v[j] - vl[j];

        sig[j] = 0.5 * (trace_of(Rpre[j]) - trace_of(st.R[j]));

        Field pb = dot(w[j], zdl);
        pb.axpy(1.0, dot(uq, zbar));
        pb *= 2.0 / 3.0;
        pb.axpy(1.0 / 3.0, dot(zbar, zbar));
        pb *= -1.0;
        pbar[j] = std::move(pb);

        // varphi_D2
        vphiD2[j] = -1.0 * contract_sym_gradT(RA[j], ulj);

        // varphi_S2
        Field h = -1.0 * contract_sym_gradT(RA[j], st.z[j] - zl[j]);
        h -= contract_sym_gradT(ring_outer(uq, zbar) + outer_self(zbar),
                                st.z[j]);
        h += dot(st.v[j], div_outer(uq, zbar) + div_outer(zbar, znew[j]));
        h -= contract_sym_gradT(Rpre[j], zbar);
        vphiS2[j] = std::move(h);

        // explicit transport currents (f-free parts); stochastic block
        // first, deterministic block second
        Field e = pointwise_mul(-0.5 * trace_of(Rpre[j]), w[j] + zbar);
        {
            Field ke = 0.5 * dot(st.v[j], st.v[j]);
            ke.axpy(0.5, dot(w[j], w[j]));
            ke.axpy(1.0, dot(st.v[j], w[j]));
            e += pointwise_mul(ke, zbar);
        }
        {
            Field T = outer_self(zbar);
            T += sym_outer(uq, zbar);
            e += tensor_apply(T, vl[j]);
        }
        e += pointwise_mul(pbar[j], w[j] + vdl);
        e += pointwise_mul(0.5 * Sf[j], vdl);
        e += st.phi[j];
        e -= phil[j];
        e += pointwise_mul(0.5 * dot(w[j], w[j]), w[j]);
        e -= pointwise_mul(0.5 * dot(wo[j], wo[j]), wo[j]);
        e -= tensor_apply(Rpre[j], w[j] + vdl);
        e += pointwise_mul(0.5 * dot(vdl, vdl), w[j]);
        e += tensor_apply(st.R[j], vdl);
        e += pointwise_mul(dot(w[j], vdl), w[j]);
        e.axpy(-rho, vdl);
        expl[j] = std::move(e);
    }

    for (std::size_t j = 0; j < J; ++j) {
        const Field zbar = znew[j] - st.z[j];
        const Field v1 = st.v[j] + w[j];

        // the identity remainder, integrand of the antidivergence current
        Field g = dot(v1, div_sym_tensor(Rpre[j]));
        g -= dot(st.v[j], div_sym_tensor(st.R[j]));
        g -= time_derivative_sample(sig, st.times, j);
        g -= advect_raw(v1 + znew[j], sig[j]);
        g.axpy(-0.5, advect_raw(w[j] + zbar, trace_of(st.R[j])));
        g -= div_vector(tensor_apply(Rpre[j], v1) -
                        tensor_apply(st.R[j], st.v[j]));
        g -= contract_sym_gradT(Rpre[j], znew[j]);
        g += contract_sym_gradT(st.R[j], st.z[j]);
        // expl carries phi_q - phi_l forward, but the requirement above is
        // the telescoped difference: div phi_q belongs on its right side.
        g -= div_vector(expl[j] - st.phi[j]);
        g -= vphiD2[j];
        g -= vphiS2[j];

        double s = 0.0;
        for (std::size_t p2 = 0; p2 < np; ++p2)
            s += g.a[p2] + vphiD2[j].a[p2] + vphiS2[j].a[p2];
        gmean[j] = s / double(np);

        phinew[j] = std::move(expl[j]);
        phinew[j] += antidiv_scalar(g);
        phinew[j] += antidiv_scalar(vphiD2[j]);
        phinew[j] += antidiv_scalar(vphiS2[j]);
        vphiD2[j] = Field();
        vphiS2[j] = Field();
    }
    for (std::size_t j = 1; j < J; ++j)
        fint[j] = fint[j - 1] + 0.5 * dt * (gmean[j - 1] + gmean[j]);
    R.f = fint;

    /*
     * Finalize: new stress, currents, pressure, velocity; verify the
     * independent trace formula on the way.
     */
    for (std::size_t j = 0; j < J; ++j) {
        const Field zbar = znew[j] - st.z[j];
        const Field vdl = st.v[j] - vl[j];
        const Field wc = w[j] - wo[j];
        const double fj = fint[j];

        Rnew[j] = Rpre[j];
        add_id_times(Rnew[j], 2.0 * fj / 3.0);

        // trace identity, independently assembled
        {
            Field tr = trace_of(Rnew[j]);
            Field ref = trace_of(st.R[j] - Rl[j]);
            ref += dot(wc, wc);
            ref += 2.0 * dot(wc, wo[j]);
            ref += 2.0 * dot(vdl, w[j]);
            for (double& x : ref.a) x += 2.0 * fj;
            tr -= ref;
            R.trace_err = std::max(R.trace_err, sup_abs(tr));
        }

        // f-dependent shares of the explicit currents: the trace current
        // carries -(Tr(R_{q+1} - (3/2) f Id)/2)(w + zbar) and the stress
        // currents -(R_{q+1} - (3/2) f Id)(w + vdl); relative to the
        // f-free parts already assembled that adds
        // (5/4) f (w + zbar) + (5/6) f (w + vdl), all divergence free.
        phinew[j].axpy(1.25 * fj, w[j] + zbar);
        phinew[j].axpy(5.0 * fj / 6.0, w[j] + vdl);

        pnew[j] = st.p[j] + pbar[j];
        double zz = 0.0;
        {
            const Field z2 = dot(znew[j], znew[j]);
            for (double x : z2.a) zz += x;
            zz /= double(np);
        }
        double pm = 0.0;
        for (double x : pnew[j].a) pm += x;
        pm /= double(np);
        for (double& x : pnew[j].a) x += zz / 3.0 - pm;

        vnew[j] = st.v[j] + w[j];
    }

    // distance diagnostics against the inductive targets
    for (std::size_t j = 0; j < J; ++j) {
        R.dv_c0 = std::max(R.dv_c0, sup_abs(w[j]));
        R.dv_c1_scaled = std::max(
            R.dv_c1_scaled, holder_norm(w[j], 1, 0.0) / double(lambda1));
    }

    ErState out;
    out.q = q + 1;
    out.grid = st.grid;
    out.times = st.times;
    out.E = st.E;
    out.v = std::move(vnew);
    out.p = std::move(pnew);
    out.R = std::move(Rnew);
    out.phi = std::move(phinew);
    out.z = std::move(znew);
    return out;
}

}  // namespace wf
