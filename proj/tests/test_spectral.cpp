/*
 * Oracle tests for the Fourier-side calculus: transform roundtrips against
 * closed forms, Littlewood-Paley plateau/support behavior, the two
 * antidivergence contracts, dealiasing, and the Holder-norm estimator.
 */
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wildflow/fft.hpp"
#include "wildflow/snapshot.hpp"
#include "wildflow/spectral.hpp"

using namespace wf;

namespace {

constexpr double kPi = std::numbers::pi;

Field coords(const GridSpec& g, int axis) {
    Field f(g, Rank::scalar);
    for (int ix = 0; ix < g.n; ++ix)
        for (int iy = 0; iy < g.n; ++iy)
            for (int iz = 0; iz < g.n; ++iz) {
                const int idx[3] = {ix, iy, iz};
                f.at(0, ix, iy, iz) = idx[axis] * g.dx();
            }
    return f;
}

Field random_band_limited(const GridSpec& g, Rank r, int kmax,
                          unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Field f(g, r);
    for (double& v : f.a) v = gauss(rng);
    return band_truncate(f, kmax);
}

}  // namespace

TEST_CASE("transform roundtrip and closed-form modes") {
    GridSpec g(16);
    Field c(g, Rank::scalar);
    for (double& v : c.a) v = 3.25;
    Spectrum s = to_spectrum(c);
    CHECK(std::abs(s.comp(0)[0] - std::complex<double>(3.25, 0.0)) < 1e-13);

    Field f = coords(g, 0);
    for (double& v : f.a) v = std::cos(v);
    Spectrum fs = to_spectrum(f);
    // cos(x1) = (e^{ix1} + e^{-ix1})/2
    CHECK(std::abs(fs.comp(0)[fs.mode_index(1, 0, 0)] - 0.5) < 1e-13);
    CHECK(std::abs(fs.comp(0)[fs.mode_index(g.n - 1, 0, 0)] - 0.5) < 1e-13);

    Field rnd = random_band_limited(g, Rank::vector3, 5, 7);
    Field back = from_spectrum(to_spectrum(rnd));
    back -= rnd;
    CHECK(field_max_abs(back) < 1e-12);
}

TEST_CASE("Parseval") {
    GridSpec g(24);
    Field f = random_band_limited(g, Rank::vector3, 8, 11);
    const double phys = l2_norm(f);
    const double spec = l2_norm_spectral(to_spectrum(f));
    CHECK(phys == doctest::Approx(spec).epsilon(1e-12));
}

TEST_CASE("Littlewood-Paley plateau, support, and partition") {
    GridSpec g(32);
    Field x1 = coords(g, 0);
    Field mode(g, Rank::scalar);
    for (std::size_t i = 0; i < mode.a.size(); ++i)
        mode.a[i] = std::cos(x1.a[i]);
    // |k| = 1 inside the plateau of P_{<= 4}
    Field keep = lp_project(mode, 2, LpKind::leq);
    keep -= mode;
    CHECK(field_max_abs(keep) < 1e-13);

    Field hi(g, Rank::scalar);
    for (std::size_t i = 0; i < hi.a.size(); ++i)
        hi.a[i] = std::cos(8.0 * x1.a[i]);  // |k| = 2^{j+2} for j = 1
    Field zero = lp_project(hi, 1, LpKind::leq);
    CHECK(field_max_abs(zero) < 1e-13);

    Field f = random_band_limited(g, Rank::scalar, 14, 3);
    Field sum = lp_project(f, 3, LpKind::leq) + lp_project(f, 3, LpKind::gt);
    sum -= f;
    CHECK(field_max_abs(sum) < 1e-13);

    // shell(j) = gt(j-1) - gt(j)
    Field sh = lp_project(f, 3, LpKind::shell);
    Field ref = lp_project(f, 2, LpKind::gt) - lp_project(f, 3, LpKind::gt);
    sh -= ref;
    CHECK(field_max_abs(sh) < 1e-13);
}

TEST_CASE("cutoff exponent") {
    CHECK(lp_cutoff_exponent(0.25) == 2);
    CHECK(lp_cutoff_exponent(0.2236) == 2);   // 1/l ~ 4.47 -> 2^2
    CHECK(lp_cutoff_exponent(1.0 / 17.0) == 4);
}

TEST_CASE("derivatives against symbolic oracles") {
    GridSpec g(16);
    Field c(g, Rank::scalar);
    for (double& v : c.a) v = 2.0;
    CHECK(field_max_abs(grad_scalar(c)) < 1e-14);

    Field x2 = coords(g, 1);
    Field f(g, Rank::scalar);
    for (std::size_t i = 0; i < f.a.size(); ++i)
        f.a[i] = std::cos(2.0 * x2.a[i]);
    Field lap = laplacian(f);
    lap.axpy(4.0, f);  // should cancel: lap = -4 cos(2 x2)
    CHECK(field_max_abs(lap) < 1e-11);

    Field A = random_band_limited(g, Rank::vector3, 5, 23);
    CHECK(field_max_abs(div_vector(curl(A))) < 1e-11);
}

TEST_CASE("antidivergence tensor contract") {
    GridSpec g(16);
    CHECK(field_max_abs(antidiv_tensor(Field(g, Rank::vector3))) == 0.0);

    Field c(g, Rank::vector3);
    for (double& v : c.a) v = -1.5;
    CHECK(field_max_abs(antidiv_tensor(c)) < 1e-13);

    Field v = random_band_limited(g, Rank::vector3, 5, 91);
    Field R = antidiv_tensor(v);
    CHECK(field_max_abs(trace_of(R)) < 1e-12);
    Field dv = div_sym_tensor(R);
    for (int i = 0; i < 3; ++i) {
        const double m = mean_component(v, i);
        double* vc = v.comp(i);
        for (std::size_t p = 0; p < g.points(); ++p) vc[p] -= m;
    }
    dv -= v;
    CHECK(field_max_abs(dv) / field_max_abs(v) < 1e-10);
}

TEST_CASE("antidivergence scalar contract") {
    GridSpec g(16);
    Field gfield(g, Rank::scalar);
    Field x1 = coords(g, 0), x2 = coords(g, 1);
    for (std::size_t i = 0; i < gfield.a.size(); ++i)
        gfield.a[i] = std::cos(2.0 * x1.a[i] + x2.a[i]);
    Field r = antidiv_scalar(gfield);
    // g = cos(k.x), k = (2,1,0): Rb g = (k/|k|^2) sin(k.x)
    Field expect(g, Rank::vector3);
    for (int ix = 0; ix < g.n; ++ix)
        for (int iy = 0; iy < g.n; ++iy)
            for (int iz = 0; iz < g.n; ++iz) {
                const double ph = 2.0 * ix * g.dx() + iy * g.dx();
                expect.at(0, ix, iy, iz) = 2.0 / 5.0 * std::sin(ph);
                expect.at(1, ix, iy, iz) = 1.0 / 5.0 * std::sin(ph);
            }
    expect -= r;
    CHECK(field_max_abs(expect) < 1e-12);

    Field rg = random_band_limited(g, Rank::scalar, 6, 5);
    set_mean(rg, 0, 0.4);
    Field d = div_vector(antidiv_scalar(rg));
    Field want = rg;
    set_mean(want, 0, 0.0);
    d -= want;
    CHECK(field_max_abs(d) < 1e-10);
}

TEST_CASE("dealiased products stay in band") {
    GridSpec g(24);
    Field a = random_band_limited(g, Rank::scalar, g.n / 3, 17);
    Field b = random_band_limited(g, Rank::scalar, g.n / 3, 19);
    Field p = multiply_dealiased(a, b);
    CHECK(band_content(p) <= g.n / 3);
}

TEST_CASE("exact grid products of band-limited factors obey Leibniz") {
    // the identity engine relies on this: if band(a)+band(b) < n/2, the
    // spectral derivative of the raw grid product equals the product rule
    GridSpec g(32);
    Field a = random_band_limited(g, Rank::scalar, 7, 5);
    Field b = random_band_limited(g, Rank::scalar, 7, 6);
    Field prod(g, Rank::scalar);
    for (std::size_t i = 0; i < prod.a.size(); ++i)
        prod.a[i] = a.a[i] * b.a[i];
    Field lhs = derivative(prod, 1);
    Field da = derivative(a, 1), db = derivative(b, 1);
    Field rhs(g, Rank::scalar);
    for (std::size_t i = 0; i < rhs.a.size(); ++i)
        rhs.a[i] = da.a[i] * b.a[i] + a.a[i] * db.a[i];
    lhs -= rhs;
    CHECK(field_max_abs(lhs) < 1e-11);
}

TEST_CASE("holder norm estimator") {
    GridSpec g(32);
    Field c(g, Rank::scalar);
    for (double& v : c.a) v = -2.5;
    CHECK(holder_norm(c, 0, 0.0) == doctest::Approx(2.5));
    CHECK(holder_norm(c, -1, 0.5) == 0.0);

    Field s = coords(g, 0);
    for (double& v : s.a) v = std::sin(v);
    CHECK(holder_norm(s, 0, 0.0) == doctest::Approx(1.0).epsilon(1e-3));
    // ||sin||_1 = sup|sin| + sup|cos| ~ 2 on the grid
    CHECK(holder_norm(s, 1, 0.0) == doctest::Approx(2.0).epsilon(1e-2));
    // fractional part of a smooth function stays bounded
    CHECK(holder_norm(s, 0, 0.5) > 1.0);
}

TEST_CASE("snapshot roundtrip") {
    GridSpec g(8);
    Field f = random_band_limited(g, Rank::sym3x3, 3, 2);
    const std::string path = "snapshot_test.wef";
    write_snapshot(path, f, 0.625);
    double t = 0.0;
    Field back = read_snapshot(path, &t);
    CHECK(t == 0.625);
    back -= f;
    CHECK(field_max_abs(back) == 0.0);
    std::remove(path.c_str());
}
