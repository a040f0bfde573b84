/*
 * Iteration-step oracles: partition-of-unity tiling, level-0 tuple
 * identities, closed-form amplitude values, the exact cancellation gaps
 * and residual floors of a full step (zero-noise and noisy), pressure
 * mean convention, determinism, and noise-path surgery causality.
 */
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "wildflow/cascade.hpp"
#include "wildflow/noise.hpp"
#include "wildflow/partitions.hpp"
#include "wildflow/residuals.hpp"
#include "wildflow/spectral.hpp"
#include "wildflow/state.hpp"
#include "wildflow/step.hpp"

using namespace wf;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Shared geometry/cascade for the step tests (building the 270 pipes
// once keeps the suite fast).
const StepGeometry& geo() {
    static StepGeometry g = build_step_geometry(36, 2);
    return g;
}

const Cascade& casc() {
    static Cascade c = build_cascade(4, 1.25, 0.1, 0.01, 1.0, 0.5, 0.5, 2,
                                     geo().inf_n0, 1.0, geo().Mbar, 1.0);
    return c;
}

// Level-0 window on [ts, ts + (J-1) dt] from a mollified noise path,
// resampled to an n^3 grid.
ErState window_state(const NoisePath& path, int n, double ts, double dt,
                     int J, const EnergyProfile& E) {
    std::vector<double> times(J);
    for (int j = 0; j < J; ++j) times[j] = ts + j * dt;
    std::vector<Field> z0;
    for (double t : times) {
        Field zm = mollify_at(path, casc().i_moll[0], t);
        z0.push_back(zm.grid.n == n ? std::move(zm) : resample(zm, n));
    }
    return init_state(times, z0, E);
}

NoisePath test_path(int k_max, double ts) {
    NoiseSpec ns;
    ns.k_max = k_max;
    ns.s_Q = 10.0;
    ns.grid_n = 8;
    ns.dt = 2e-5;
    ns.two_T = ts + 0.01;
    ns.seed = 42;
    return sample_path(ns);
}

double mean_of(const Field& f) {
    double s = 0.0;
    for (double x : f.a) s += x;
    return s / double(f.a.size());
}

bool bitwise_equal(const ErState& a, const ErState& b) {
    for (std::size_t j = 0; j < a.times.size(); ++j) {
        if (a.v[j].a != b.v[j].a) return false;
        if (a.p[j].a != b.p[j].a) return false;
        if (a.R[j].a != b.R[j].a) return false;
        if (a.phi[j].a != b.phi[j].a) return false;
        if (a.z[j].a != b.z[j].a) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("time partition: sixth powers tile, plateau as displayed") {
    const double eps = 0.0013431;
    for (int i = 0; i < 997; ++i) {
        const double t = (i * 0.37e-3 - 0.1);
        double s = 0.0;
        const int m0 = int(std::floor(t / eps)) - 1;
        for (int m = m0; m <= m0 + 2; ++m) s += theta_weight(m, t, eps, 6);
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    // theta_m == 1 on [eps(m + 1/8), eps(m + 7/8)]
    for (int i = 0; i <= 100; ++i) {
        const double t = eps * (3.0 + 0.125 + 0.75 * i / 100.0);
        CHECK(std::abs(theta_weight(3, t, eps, 1) - 1.0) <= 1e-12);
    }
    // support confined to (eps(m - 1/8), eps(m + 9/8))
    CHECK(theta_weight(3, eps * (3.0 - 0.125), eps, 1) == 0.0);
    CHECK(theta_weight(3, eps * (3.0 + 1.125), eps, 1) == 0.0);
}

TEST_CASE("space partition: cell windows tile on the snapped torus grid") {
    const int nc = snap_cells(0.26);
    CHECK(nc % 3 == 0);
    CHECK(1.0 / nc <= 0.26);
    for (int i = 0; i < 500; ++i) {
        // scattered points, including cell corners
        double xi[3] = {0.123 * i, 0.777 * i + 0.1, kTwoPi * (i % 7) / 7.0};
        double s = 0.0;
        for (int ax = 0; ax < 3; ++ax) xi[ax] = std::fmod(xi[ax], kTwoPi);
        for (int nx = 0; nx < nc; ++nx)
            for (int ny = 0; ny < nc; ++ny)
                for (int nz = 0; nz < nc; ++nz)
                    s += chi_cell(xi, {nx, ny, nz}, nc, 6);
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("init_state: zero input gives the zero tuple") {
    GridSpec g{16};
    std::vector<double> times = {0.0, 1e-4, 2e-4};
    std::vector<Field> z0(3, Field(g, Rank::vector3));
    ErState st = init_state(times, z0, EnergyProfile::constant(0.0));
    for (int j = 0; j < 3; ++j) {
        CHECK(sup_abs(st.v[j]) == 0.0);
        CHECK(sup_abs(st.p[j]) == 0.0);
        CHECK(sup_abs(st.R[j]) == 0.0);
        CHECK(sup_abs(st.phi[j]) == 0.0);
    }
}

TEST_CASE("init_state: trace, pressure convention, residual floor") {
    NoisePath path = test_path(2, 0.43);
    const double E0 = 0.8;
    ErState st = window_state(path, 16, 0.43, 2e-5, 5,
                              EnergyProfile::constant(E0));
    for (std::size_t j = 0; j < st.times.size(); ++j) {
        // Tr R = 2E pointwise (the traceless product drops)
        Field tr = trace_of(st.R[j]);
        for (double& x : tr.a) x -= 2.0 * E0;
        CHECK(sup_abs(tr) <= 1e-13);
        // mean of p equals mean of |z|^2 / 3
        CHECK(std::abs(mean_of(st.p[j]) - mean_of(dot(st.z[j], st.z[j])) / 3.0)
              <= 1e-14);
    }
    auto rr = residual_report(st);
    for (const auto& s : rr) {
        CHECK(s.mom_sup <= 1e-10);
        CHECK(s.energy_sup <= 1e-9);
        CHECK(s.div_v_l2 <= 1e-12);
    }
}

TEST_CASE("stress amplitudes at the identity: Gamma(Id) rho^1/2") {
    const double rho = 7.3;
    const double Id[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    const double zero6[6] = {0, 0, 0, 0, 0, 0};
    auto a = r_amplitudes(geo(), 0, Id, zero6, zero6, rho);
    // the seed family sums to 4 Id, so every coefficient is rho^(1/2)/2
    for (double ai : a) CHECK(std::abs(ai - 0.5 * std::sqrt(rho)) <= 1e-12);
}

TEST_CASE("current amplitude: |fbar| scaling and positivity") {
    const double rho1 = 1.0;
    const double Id[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    const double twoId[9] = {2, 0, 0, 0, 2, 0, 0, 0, 2};
    const double halfId[9] = {.5, 0, 0, 0, .5, 0, 0, 0, .5};
    const double zero3[3] = {0, 0, 0};
    for (int slot = 6; slot < 10; ++slot) {
        const double a1 = phi_amplitude(geo(), 0, slot, Id, Id, zero3, rho1);
        CHECK(a1 > 0.0);
        // G = 2 Id halves fbar; the Lambda argument stays 0, so the
        // amplitude scales by exactly |fbar|^{-2/3} = 2^{2/3}
        const double a2 =
            phi_amplitude(geo(), 0, slot, twoId, halfId, zero3, rho1);
        CHECK(std::abs(a2 / a1 - std::cbrt(4.0)) <= 1e-12);
    }
    // positivity over scattered small current values
    for (int i = 0; i < 100; ++i) {
        const double s = 0.1 * geo().Mbar * geo().Mbar * geo().Mbar;
        double ph[3] = {s * std::sin(0.7 * i), s * std::cos(1.3 * i),
                        s * std::sin(2.1 * i + 1.0)};
        CHECK(phi_amplitude(geo(), 0, 7, Id, Id, ph, rho1) > 0.0);
    }
}

TEST_CASE("full step, zero noise: cancellations and residual floors") {
    NoisePath path = test_path(0, 0.43);
    ErState s0 = window_state(path, 32, 0.43, 2e-5, 5,
                              EnergyProfile::constant(1.0));
    StepReport rep;
    ErState s1 = iterate_step(s0, path, casc(), geo(), &rep);

    CHECK(s1.q == 1);
    CHECK(rep.f[0] == 0.0);
    CHECK(rep.a_min > 0.0);
    CHECK(rep.w_sup > 0.0);  // Gamma(Id) rho^(1/2) != 0: not a fixed point
    CHECK(rep.c0_gap <= 1e-8 * rep.rho);
    CHECK(rep.d0_gap <= 1e-8 * std::max(rep.phil_sup, rep.rho1));
    CHECK(rep.trace_err <= 1e-12);
    CHECK(rep.div_w_rel <= 1e-12);

    auto rr = residual_report(s1);
    for (const auto& s : rr) {
        CHECK(s.mom_sup <= 1e-10);
        // the one-sided end stencils amplify rounding by 1/dt
        CHECK(s.energy_sup <= 1e-10);
        CHECK(s.div_v_l2 <= 1e-10);
    }
    // with z identically zero the pressure increment vanishes
    for (std::size_t j = 0; j < s0.times.size(); ++j)
        CHECK(sup_abs(s1.p[j] - s0.p[j]) <= 1e-13);
}

TEST_CASE("full step, noisy path: identities hold at the floor") {
    NoisePath path = test_path(2, 0.43);
    ErState s0 = window_state(path, 32, 0.43, 2e-5, 5,
                              EnergyProfile::constant(1.0));
    StepReport rep;
    ErState s1 = iterate_step(s0, path, casc(), geo(), &rep);

    CHECK(rep.c0_gap <= 1e-8 * rep.rho);
    CHECK(rep.d0_gap <= 1e-8 * std::max(rep.phil_sup, rep.rho1));
    CHECK(rep.trace_err <= 1e-12);
    CHECK(rep.div_w_rel <= 1e-12);

    auto rr = residual_report(s1);
    for (const auto& s : rr) {
        CHECK(s.mom_sup <= 1e-10);
        CHECK(s.energy_sup <= 1e-7);
        CHECK(s.div_v_l2 <= 1e-10);
    }
    // pressure mean convention preserved through the increment
    for (std::size_t j = 0; j < s1.times.size(); ++j)
        CHECK(std::abs(mean_of(s1.p[j]) - mean_of(dot(s1.z[j], s1.z[j])) / 3.0)
              <= 1e-13);
}

TEST_CASE("determinism: the step is a pure function of its inputs") {
    NoisePath path = test_path(2, 0.43);
    ErState s0 = window_state(path, 32, 0.43, 2e-5, 5,
                              EnergyProfile::constant(1.0));
    ErState a = iterate_step(s0, path, casc(), geo());
    ErState b = iterate_step(s0, path, casc(), geo());
    CHECK(bitwise_equal(a, b));
}

TEST_CASE("causality: path surgery after the window changes nothing") {
    NoisePath path = test_path(2, 0.43);
    ErState s0 = window_state(path, 32, 0.43, 2e-5, 5,
                              EnergyProfile::constant(1.0));
    ErState ref = iterate_step(s0, path, casc(), geo());

    // corrupt every path sample strictly after the window end (with one
    // sample of slack so no interpolation interval straddles the cut)
    NoisePath cut = path;
    const double t_end = s0.times.back() + cut.dt;
    for (std::size_t k = 0; k < cut.times.size(); ++k)
        if (cut.times[k] > t_end)
            for (double& x : cut.z[k].a) x = 1e6;
    ErState alt = iterate_step(s0, cut, casc(), geo());
    CHECK(bitwise_equal(ref, alt));
}
