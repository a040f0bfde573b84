/*
 * Noise-path oracles: divergence/mean at floor, Monte Carlo variance vs
 * t*Tr(Q), causal mollification, stopping-time behavior, reproducibility.
 */
#include <doctest.h>

#include <cmath>

#include "wildflow/fft.hpp"
#include "wildflow/noise.hpp"
#include "wildflow/spectral.hpp"

using namespace wf;

namespace {
NoiseSpec small_spec(std::uint64_t seed) {
    NoiseSpec s;
    s.s_Q = 3.0;
    s.k_max = 2;
    s.seed = seed;
    s.dt = 0.02;
    s.two_T = 0.4;
    s.grid_n = 16;
    return s;
}
}  // namespace

TEST_CASE("path is divergence-free, mean-zero, reproducible") {
    NoisePath p = sample_path(small_spec(42));
    for (int j : {0, 5, int(p.z.size()) - 1}) {
        CHECK(field_max_abs(div_vector(p.z[j])) < 1e-10);
        for (int c = 0; c < 3; ++c)
            CHECK(std::fabs(mean_component(p.z[j], c)) < 1e-14);
    }
    NoisePath p2 = sample_path(small_spec(42));
    for (std::size_t j = 0; j < p.z.size(); ++j) {
        Field d = p.z[j] - p2.z[j];
        CHECK(field_max_abs(d) == 0.0);
    }
}

TEST_CASE("q constant conventions") {
    NoiseSpec s = small_spec(1);
    s.k_max = 0;  // empty spectrum
    CHECK(noise_q_constant(s) == 0.0);
    s.k_max = 2;
    const double q1 = noise_q_constant(s);
    NoiseSpec s2 = s;
    s2.s_Q = s.s_Q;  // doubling sigma: emulate by comparing closed form
    // sum over the half lattice of sigma^2
    double expect = 0.0;
    for (int kx = -2; kx <= 2; ++kx)
        for (int ky = -2; ky <= 2; ++ky)
            for (int kz = 0; kz <= 2; ++kz) {
                if (!(kz > 0 || (kz == 0 && (ky > 0 || (ky == 0 && kx > 0)))))
                    continue;
                expect += std::pow(double(kx * kx + ky * ky + kz * kz),
                                   -s.s_Q);
            }
    CHECK(q1 == doctest::Approx(expect).epsilon(1e-14));
    CHECK(noise_trace_Q(s) == doctest::Approx(4.0 * expect).epsilon(1e-14));
}

TEST_CASE("Monte Carlo: E ||z(t)||^2 = t Tr(Q)") {
    NoiseSpec s = small_spec(0);
    const double trQ = noise_trace_Q(s);
    const int nsamp = 60;
    const int jt = 10;  // t = 0.2
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < nsamp; ++r) {
        s.seed = 1000 + r;
        NoisePath p = sample_path(s);
        const double e = std::pow(l2_norm(p.z[jt]), 2);
        sum += e;
        sum2 += e * e;
    }
    const double mean = sum / nsamp;
    const double var = sum2 / nsamp - mean * mean;
    const double se = std::sqrt(var / nsamp);
    CHECK(std::fabs(mean - 0.2 * trQ) < 3.0 * se + 1e-12);
}

TEST_CASE("mollification: unit mass, first moment, causality") {
    NoisePath p = sample_path(small_spec(7));
    // constant-in-time path reproduces itself
    NoisePath cp = p;
    for (auto& f : cp.z) f = p.z[3];
    Field m = mollify_at(cp, 0.1, 0.3);
    m -= p.z[3];
    CHECK(field_max_abs(m) < 1e-12);

    // causality by surgery: change samples strictly after t
    NoisePath surg = p;
    for (std::size_t j = 0; j < surg.times.size(); ++j)
        if (surg.times[j] > 0.2 + 1e-12) surg.z[j] *= 5.0;
    Field a = mollify_at(p, 0.1, 0.2);
    Field b = mollify_at(surg, 0.1, 0.2);
    a -= b;
    CHECK(field_max_abs(a) == 0.0);

    // linear-in-time path: |z_i(t) - z(t)| <= i * ||field||
    const Field base = p.z[1];
    NoisePath lin = p;
    for (std::size_t j = 0; j < lin.times.size(); ++j) {
        lin.z[j] = base;
        lin.z[j] *= lin.times[j];
    }
    const double i_q = 0.1;
    Field zi = mollify_at(lin, i_q, 0.3);
    Field exact = base;
    exact *= 0.3;
    zi -= exact;
    CHECK(field_max_abs(zi) <= i_q * field_max_abs(base) + 1e-12);
}

TEST_CASE("mollified path stays divergence-free and mean-zero") {
    NoisePath p = sample_path(small_spec(9));
    NoisePath zq = mollify_path(p, 0.08);
    CHECK(field_max_abs(div_vector(zq.z.back())) < 1e-10);
    for (int c = 0; c < 3; ++c)
        CHECK(std::fabs(mean_component(zq.z.back(), c)) < 1e-13);
}

TEST_CASE("stopping time") {
    NoiseSpec s = small_spec(3);
    NoisePath zero = sample_path(s);
    for (auto& f : zero.z)
        for (double& v : f.a) v = 0.0;
    CHECK(stopping_time(zero, 0.5, 0.05, 10, 0.2) == zero.times.back());
    CHECK(stopping_time(zero, 0.0, 0.05, 10, 0.2) == 0.0);

    for (int r = 0; r < 10; ++r) {
        s.seed = 50 + r;
        NoisePath p = sample_path(s);
        const double t1 = stopping_time(p, 0.01, 0.05, 10, 0.2);
        const double t2 = stopping_time(p, 1.0, 0.05, 10, 0.2);
        CHECK(t1 <= t2);
    }
}
