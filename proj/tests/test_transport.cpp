/*
 * Flow-map and Lagrangian-mollification oracles: identity / constant /
 * shear characteristics against closed forms and a step-halving ODE
 * oracle, volume preservation, CFL and window guards, advective
 * derivative exactness, causality, and the dual formula for the advective
 * derivative of the mollified field.
 */
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "wildflow/spectral.hpp"
#include "wildflow/transport.hpp"

using namespace wf;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Field make_vec(GridSpec g,
               const std::function<void(double, double, double, double*)>& fn) {
    Field f(g, Rank::vector3);
    const double dx = kTwoPi / g.n;
    for (int ix = 0; ix < g.n; ++ix)
        for (int iy = 0; iy < g.n; ++iy)
            for (int iz = 0; iz < g.n; ++iz) {
                double v[3];
                fn(ix * dx, iy * dx, iz * dx, v);
                for (int c = 0; c < 3; ++c) f.at(c, ix, iy, iz) = v[c];
            }
    return f;
}

Field make_scalar(GridSpec g,
                  const std::function<double(double, double, double)>& fn) {
    Field f(g, Rank::scalar);
    const double dx = kTwoPi / g.n;
    for (int ix = 0; ix < g.n; ++ix)
        for (int iy = 0; iy < g.n; ++iy)
            for (int iz = 0; iz < g.n; ++iz)
                f.at(0, ix, iy, iz) = fn(ix * dx, iy * dx, iz * dx);
    return f;
}

FieldSeries constant_series(const Field& f, double t_begin, double dt,
                            int count) {
    FieldSeries s;
    for (int j = 0; j < count; ++j) {
        s.times.push_back(t_begin + j * dt);
        s.f.push_back(f);
    }
    return s;
}

// step-halving RK4 on dy/ds = u(y) with exact evaluations, refined until
// two consecutive levels agree to 1e-12
void ode_oracle(const std::function<void(const double*, double*)>& u, double ta,
                double tb, const double y0[3], double out[3]) {
    double prev[3] = {1e300, 1e300, 1e300};
    for (int nsteps = 8;; nsteps *= 2) {
        double y[3] = {y0[0], y0[1], y0[2]};
        const double h = (tb - ta) / nsteps;
        for (int st = 0; st < nsteps; ++st) {
            double k1[3], k2[3], k3[3], k4[3], yt[3];
            u(y, k1);
            for (int c = 0; c < 3; ++c) yt[c] = y[c] + 0.5 * h * k1[c];
            u(yt, k2);
            for (int c = 0; c < 3; ++c) yt[c] = y[c] + 0.5 * h * k2[c];
            u(yt, k3);
            for (int c = 0; c < 3; ++c) yt[c] = y[c] + h * k3[c];
            u(yt, k4);
            for (int c = 0; c < 3; ++c)
                y[c] += h / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
        }
        double dev = 0;
        for (int c = 0; c < 3; ++c) dev = std::max(dev, std::fabs(y[c] - prev[c]));
        for (int c = 0; c < 3; ++c) prev[c] = y[c];
        if (dev < 1e-12 || nsteps > 1 << 16) {
            for (int c = 0; c < 3; ++c) out[c] = y[c];
            return;
        }
    }
}

}  // namespace

TEST_CASE("zero velocity gives the identity flow exactly") {
    GridSpec g(16);
    Field zero(g, Rank::vector3);
    const double eps = 0.1;
    const int m = 3;
    const double t0 = eps * (m - 0.125);
    FieldSeries ul = constant_series(zero, t0, 0.02, 6);
    FlowMap fm = solve_flow(ul, m, eps, t0, t0 + 0.1);
    REQUIRE(fm.times.size() == 6);
    for (int j = 0; j < 6; ++j) {
        CHECK(field_max_abs(fm.disp[j]) == 0.0);
        CHECK(fm.grad_deviation(j) <= 1e-14);
        Field det = fm.det_grad_xi(j);
        double dev = 0;
        for (std::size_t p = 0; p < g.points(); ++p)
            dev = std::max(dev, std::fabs(det.comp(0)[p] - 1.0));
        CHECK(dev <= 1e-14);
    }
}

TEST_CASE("constant velocity translates, xi = x - c (t - t0)") {
    GridSpec g(16);
    const double c[3] = {0.31, -0.17, 0.23};
    Field uc = make_vec(g, [&](double, double, double, double* v) {
        v[0] = c[0];
        v[1] = c[1];
        v[2] = c[2];
    });
    const double eps = 0.12;
    const int m = -2;
    const double t0 = eps * (m - 0.125);
    FieldSeries ul = constant_series(uc, t0, 0.015, 9);
    FlowMap fm = solve_flow(ul, m, eps, t0, ul.t_end());
    for (std::size_t j = 0; j < fm.times.size(); ++j) {
        const double tau = fm.times[j] - t0;
        double dev = 0;
        for (int cc = 0; cc < 3; ++cc) {
            const double* d = fm.disp[j].comp(cc);
            for (std::size_t p = 0; p < g.points(); ++p)
                dev = std::max(dev, std::fabs(d[p] - c[cc] * tau));
        }
        CHECK(dev <= 1e-10);
        CHECK(fm.grad_deviation(j) <= 1e-9);
    }
    // anchor is exact
    CHECK(field_max_abs(fm.disp[0]) == 0.0);
}

TEST_CASE("shear flow matches the ODE oracle") {
    GridSpec g(24);
    const double v0 = 0.4;
    Field ush = make_vec(g, [&](double, double y, double, double* v) {
        v[0] = v0 * std::sin(y);
        v[1] = 0;
        v[2] = 0;
    });
    const double eps = 0.1;
    const int m = 1;
    const double t0 = eps * (m - 0.125);
    FieldSeries ul = constant_series(ush, t0, 0.0125, 10);
    FlowMap fm = solve_flow(ul, m, eps, t0, ul.t_end());
    auto rhs = [&](const double* y, double* o) {
        o[0] = v0 * std::sin(y[1]);
        o[1] = 0;
        o[2] = 0;
    };
    const int j = int(fm.times.size()) - 1;
    const double t = fm.times[j];
    const double dx = kTwoPi / g.n;
    double worst = 0;
    for (int ix = 0; ix < g.n; ix += 5)
        for (int iy = 0; iy < g.n; iy += 3)
            for (int iz = 0; iz < g.n; iz += 7) {
                const double x[3] = {ix * dx, iy * dx, iz * dx};
                double ref[3];
                ode_oracle(rhs, t, t0, x, ref);
                for (int cc = 0; cc < 3; ++cc) {
                    const double xi =
                        x[cc] - fm.disp[j].at(cc, ix, iy, iz);
                    worst = std::max(worst, std::fabs(xi - ref[cc]));
                }
            }
    CHECK(worst <= 1e-6);
    // shear flow is volume preserving with a triangular gradient
    Field det = fm.det_grad_xi(j);
    double dev = 0;
    for (std::size_t p = 0; p < g.points(); ++p)
        dev = std::max(dev, std::fabs(det.comp(0)[p] - 1.0));
    CHECK(dev <= 1e-10);
}

TEST_CASE("divergence-free flow keeps det grad xi near 1; inverse is exact") {
    GridSpec g(32);
    const double v0 = 0.1;
    Field uabc = make_vec(g, [&](double x, double y, double z, double* v) {
        v[0] = v0 * std::sin(y);
        v[1] = v0 * std::sin(z);
        v[2] = v0 * std::sin(x);
    });
    const double eps = 0.08;
    const int m = 0;
    const double t0 = eps * (m - 0.125);
    FieldSeries ul = constant_series(uabc, t0, 0.01, 9);
    FlowMap fm = solve_flow(ul, m, eps, t0, ul.t_end());
    const int j = int(fm.times.size()) - 1;
    Field det = fm.det_grad_xi(j);
    double dev = 0;
    for (std::size_t p = 0; p < g.points(); ++p)
        dev = std::max(dev, std::fabs(det.comp(0)[p] - 1.0));
    CHECK(dev <= 1e-4);
    // grad xi times its cached inverse is the identity pointwise
    const Mat3Field& G = fm.grad_xi(j);
    const Mat3Field& I = fm.grad_xi_inv(j);
    double prod_dev = 0;
    for (std::size_t p = 0; p < g.points(); p += 17)
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += G.at(r, k, p) * I.at(k, cc, p);
                prod_dev = std::max(prod_dev, std::fabs(s - (r == cc ? 1.0 : 0.0)));
            }
    CHECK(prod_dev <= 1e-12);
    // near-identity deviation is controlled by the measured C^1 norm
    const double tau = fm.times[j] - t0;
    CHECK(fm.grad_deviation(j) <= 3.0 * tau * fm.ul_c1 + 1e-12);
    CHECK(fm.ul_c1 > 0.0);
}

TEST_CASE("CFL and window guards refuse bad input") {
    GridSpec g(16);
    Field fast = make_vec(g, [](double, double, double, double* v) {
        v[0] = 3.0;
        v[1] = 0;
        v[2] = 0;
    });
    const double eps = 0.5;
    const double t0 = eps * (0 - 0.125);
    FieldSeries ul = constant_series(fast, t0, 0.1, 5);
    CHECK_THROWS_WITH_AS(solve_flow(ul, 0, eps, t0, t0 + 0.4),
                         doctest::Contains("CFL"), std::runtime_error);
    Field slow(g, Rank::vector3);
    FieldSeries ul2 = constant_series(slow, t0, 0.1, 5);
    CHECK_THROWS_WITH_AS(solve_flow(ul2, 0, eps, t0 - 0.2, t0 + 0.2),
                         doctest::Contains("window"), std::runtime_error);
}

TEST_CASE("advective derivative: constant, linear-in-t, transported") {
    GridSpec g(16);
    Field gfun = make_scalar(g, [](double x, double y, double) {
        return std::sin(x) + 0.3 * std::cos(2 * y);
    });
    Field zero(g, Rank::vector3);
    const double dt = 1e-3;
    // time-constant field, u_l = 0
    Field r0 = advective_derivative(gfun, gfun, gfun, zero, dt);
    CHECK(field_max_abs(r0) <= 1e-12);
    // f = t g(x): exact for the centered difference
    Field fm1 = 0.7 * gfun, f0 = 0.7005 * gfun;  // placeholder, rebuilt below
    {
        const double t = 0.4;
        Field fprev = (t - dt) * gfun, fcur = t * gfun, fnext = (t + dt) * gfun;
        Field r1 = advective_derivative(fprev, fcur, fnext, zero, dt);
        r1 -= gfun;
        CHECK(field_max_abs(r1) <= 1e-12);
    }
    // transported profile g(x - c t) with u_l = c
    const double c[3] = {0.3, 0.2, 0.1};
    Field uc = make_vec(g, [&](double, double, double, double* v) {
        v[0] = c[0];
        v[1] = c[1];
        v[2] = c[2];
    });
    auto prof = [&](double t) {
        return make_scalar(g, [&](double x, double y, double z) {
            return std::sin(x - c[0] * t) +
                   0.5 * std::cos(y - c[1] * t + 2 * (z - c[2] * t));
        });
    };
    Field r2 = advective_derivative(prof(-dt), prof(0.0), prof(dt), uc, dt);
    CHECK(field_max_abs(r2) <= 1e-6);
    (void)fm1;
    (void)f0;
}

TEST_CASE("flow position: fixed point and constant-velocity closed form") {
    GridSpec g(16);
    const double c[3] = {0.2, -0.4, 0.1};
    Field uc = make_vec(g, [&](double, double, double, double* v) {
        v[0] = c[0];
        v[1] = c[1];
        v[2] = c[2];
    });
    FieldSeries ul = constant_series(uc, 0.0, 0.05, 9);
    const double y0[3] = {1.0, 2.0, 3.0};
    double out[3];
    flow_position(ul, 0.2, 0.2, y0, out);
    for (int cc = 0; cc < 3; ++cc) CHECK(out[cc] == y0[cc]);
    flow_position(ul, 0.1, 0.35, y0, out);
    for (int cc = 0; cc < 3; ++cc)
        CHECK(std::fabs(out[cc] - (y0[cc] + c[cc] * 0.25)) <= 1e-12);
    flow_position(ul, 0.3, 0.05, y0, out);
    for (int cc = 0; cc < 3; ++cc)
        CHECK(std::fabs(out[cc] - (y0[cc] - c[cc] * 0.25)) <= 1e-12);
}

TEST_CASE("static mollification reduces to the low-pass projection") {
    GridSpec g(16);
    Field F0 = make_scalar(g, [](double x, double y, double z) {
        return std::sin(3 * x) + std::cos(5 * y - z) + 0.2 * std::sin(7 * z);
    });
    FieldSeries F = constant_series(F0, 0.0, 0.02, 11);
    Field zero(g, Rank::vector3);
    FieldSeries ul = constant_series(zero, 0.0, 0.02, 11);
    const double l = 0.25;  // P_{<= 4}
    Field got = lagrangian_mollify(F, ul, l, 0.12, F.times[9]);
    Field want = project_low(F0, l);
    Field d = got - want;
    CHECK(field_max_abs(d) <= 1e-13);
}

TEST_CASE("mollification is causal: future samples never read") {
    GridSpec g(16);
    FieldSeries F, ul;
    for (int j = 0; j < 12; ++j) {
        const double t = 0.03 * j;
        F.times.push_back(t);
        F.f.push_back(make_scalar(g, [&](double x, double y, double) {
            return std::sin(x + t) + std::cos(2 * y - 3 * t);
        }));
        ul.times.push_back(t);
        ul.f.push_back(make_vec(g, [&](double, double y, double, double* v) {
            v[0] = 0.2 * std::sin(y);
            v[1] = 0;
            v[2] = 0.1;
        }));
    }
    const double l = 0.3, ltemp = 0.15;
    const double t = F.times[8];
    Field a = lagrangian_mollify(F, ul, l, ltemp, t);
    // corrupt every sample after t
    for (int j = 9; j < 12; ++j)
        for (double& v : F.f[j].a) v = 1e6 * (v + 1.0);
    Field b = lagrangian_mollify(F, ul, l, ltemp, t);
    Field d = a - b;
    CHECK(field_max_abs(d) == 0.0);
}

TEST_CASE("insufficient sampling of the kernel is refused") {
    GridSpec g(16);
    Field F0 = make_scalar(g, [](double x, double, double) { return std::sin(x); });
    FieldSeries F = constant_series(F0, 0.0, 0.05, 6);
    Field zero(g, Rank::vector3);
    FieldSeries ul = constant_series(zero, 0.0, 0.05, 6);
    CHECK_THROWS_WITH_AS(lagrangian_mollify(F, ul, 0.3, 0.12, F.times[5]),
                         doctest::Contains("insufficient"), std::runtime_error);
}

TEST_CASE("kernel truncated at the data front keeps unit mass") {
    // near the start of the series the kernel support reaches before the
    // first sample; the truncated, renormalized quadrature must still
    // reproduce P_{<= 1/l} F exactly for a static series (including the
    // degenerate single-node case at the very first sample)
    GridSpec g(16);
    Field F0 = make_scalar(g, [](double x, double y, double) {
        return std::sin(x) + 0.5 * std::cos(2 * y);
    });
    FieldSeries F = constant_series(F0, 0.0, 0.05, 6);
    Field zero(g, Rank::vector3);
    FieldSeries ul = constant_series(zero, 0.0, 0.05, 6);
    Field want = project_low(F0, 0.3);
    for (int jt : {0, 1, 2, 5}) {
        Field got = lagrangian_mollify(F, ul, 0.3, 0.3, F.times[jt]);
        Field d = got - want;
        CHECK(field_max_abs(d) <= 1e-13);
    }
}

namespace {

// |D_{t,l}F_l - (-int G eta')| for F = sin(t) sin(x+y) + cos(2t) cos(2z)
// under the shear u_l = (v0 sin y, 0, 0); returns (error, scale)
std::pair<double, double> dual_gap(int n, double v0, double dt) {
    GridSpec g(n);
    FieldSeries F, ul;
    const int cnt = int(0.4 / dt) + 1, jt = int(0.3 / dt + 0.5);
    for (int j = 0; j < cnt; ++j) {
        const double t = dt * j;
        F.times.push_back(t);
        F.f.push_back(make_scalar(g, [&](double x, double y, double z) {
            return std::sin(t) * std::sin(x + y) +
                   std::cos(2 * t) * std::cos(2 * z);
        }));
        ul.times.push_back(t);
        ul.f.push_back(make_vec(g, [&](double, double y, double, double* v) {
            v[0] = v0 * std::sin(y);
            v[1] = 0;
            v[2] = 0;
        }));
    }
    const double l = 0.3, ltemp = 0.2;
    const double t = F.times[jt];
    Field fl_prev = lagrangian_mollify(F, ul, l, ltemp, t - dt);
    Field fl_cur = lagrangian_mollify(F, ul, l, ltemp, t);
    Field fl_next = lagrangian_mollify(F, ul, l, ltemp, t + dt);
    Field lhs = advective_derivative(fl_prev, fl_cur, fl_next, ul.f[jt], dt);
    Field rhs =
        lagrangian_mollify(F, ul, l, ltemp, t, MollWeight::kernel_deriv);
    Field d = lhs - rhs;
    (void)fl_cur;
    return {field_max_abs(d),
            std::max(field_max_abs(lhs), field_max_abs(rhs))};
}

}  // namespace

TEST_CASE("dual formula for the advective derivative of F_l") {
    // static flow: characteristics stay on grid points, so the two sides
    // differ only by the centered-difference O(dt^2) and the kernel
    // quadrature; second order visible under dt halving
    auto [e1, s1] = dual_gap(16, 0.0, 0.0025);
    CHECK(s1 > 0.1);
    CHECK(e1 <= 2e-5 * s1);
    auto [e2, s2] = dual_gap(16, 0.0, 0.00125);
    CHECK(e2 <= 0.5 * e1);
    (void)s2;
    // moving flow adds the trilinear-interpolation consistency error of
    // the characteristic sweeps, O(v0 dx^2); check the measured level and
    // that it shrinks under grid refinement
    auto [ec, sc] = dual_gap(24, 0.3, 0.005);
    auto [ef, sf] = dual_gap(48, 0.3, 0.005);
    CHECK(ef <= 2.5e-3 * sf);
    CHECK(ef <= 0.6 * ec);
    (void)sc;
}
