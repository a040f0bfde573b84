#include "wildflow/pipes.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace wf {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;
constexpr double pi_v = 3.14159265358979323846;

// shared by pipe_radii and choose_shifts: required separation is
// margin * (r_i + r_j)
constexpr double kSepMargin = 1.05;
// cap on the per-family sum of excluded offset fractions; beyond it the
// greedy shift search runs out of candidates
constexpr double kShiftBudget = 4.0;
constexpr int kOffsetTries = 40000;

IVec cross_i(const IVec& a, const IVec& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

long dot_i(const IVec& a, const IVec& b) {
    return long(a[0]) * b[0] + long(a[1]) * b[1] + long(a[2]) * b[2];
}

int gcd3(const IVec& v) {
    return std::gcd(std::abs(v[0]), std::gcd(std::abs(v[1]), std::abs(v[2])));
}

IVec primitive_dir(IVec v) {
    const int g = gcd3(v);
    if (g == 0) throw std::runtime_error("pipe direction is zero");
    for (int& x : v) x /= g;
    return v;
}

// unit radial bump, 1 at the center, supported in |t| < 1
double bump_unit(double t) {
    const double s = t * t;
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s));
}

double pow_si(double x, int p) {
    double r = x;
    for (int i = 1; i < p; ++i) r *= x;
    return r;
}

// basis g1, g2 of the lattice {k : k.f = 0} with g1 x g2 = +/- f
// (f primitive); the cross-product condition makes it a full basis
void find_basis(const IVec& f, IVec& g1, IVec& g2) {
    const int box = 2 * std::max({std::abs(f[0]), std::abs(f[1]),
                                  std::abs(f[2])}) + 2;
    std::vector<IVec> cands;
    for (int x = -box; x <= box; ++x)
        for (int y = -box; y <= box; ++y)
            for (int z = -box; z <= box; ++z) {
                const IVec k = {x, y, z};
                if (x == 0 && y == 0 && z == 0) continue;
                if (dot_i(k, f) != 0) continue;
                cands.push_back(k);
            }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const IVec& a, const IVec& b) {
                         const long na = dot_i(a, a), nb = dot_i(b, b);
                         if (na != nb) return na < nb;
                         return a < b;
                     });
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = 0; j < cands.size(); ++j) {
            if (j == i) continue;
            const IVec c = cross_i(cands[i], cands[j]);
            if (c == f || (c[0] == -f[0] && c[1] == -f[1] && c[2] == -f[2])) {
                g1 = cands[i];
                g2 = cands[j];
                return;
            }
        }
    throw std::runtime_error("pipe basis search failed for direction");
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
    const double h = (b - a) / n;
    long double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0L : 2.0L) * f(a + i * h);
    return double(s * h / 3.0L);
}

/*
 * Analytic cross-sections.  A profile power psi^p is a sum of signed
 * radial blobs with pairwise disjoint supports (the dipole halves and the
 * bump/ring pair never touch), so the p-th power acts blob by blob.
 */
struct Blob {
    double cx[3];  // in-plane center offset
    double amp;    // signed amplitude, already raised to the power
    std::function<double(double)> prof;  // radial profile of |.|^1 shape
    double rsup;   // support radius of the profile
};

std::vector<Blob> blobs_of(const PipeProfile& p, int power) {
    std::vector<Blob> bs;
    if (p.kind == 'R') {
        const double rb = p.rb;
        auto prof = [rb, power](double rho) {
            return pow_si(bump_unit(rho / rb), power);
        };
        bs.push_back({{p.cx[0], p.cx[1], p.cx[2]},
                      pow_si(p.amp_main, power), prof, rb});
        bs.push_back({{-p.cx[0], -p.cx[1], -p.cx[2]},
                      pow_si(-p.amp_main, power), prof, rb});
    } else {
        const double r1 = p.r1, rc = p.rc, rw = p.rw;
        auto prof1 = [r1, power](double rho) {
            return pow_si(bump_unit(rho / r1), power);
        };
        auto profr = [rc, rw, power](double rho) {
            return pow_si(bump_unit((rho - rc) / rw), power);
        };
        bs.push_back({{0, 0, 0}, pow_si(p.amp_main, power), prof1, r1});
        bs.push_back({{0, 0, 0}, pow_si(-p.amp_ring, power), profr, rc + rw});
    }
    return bs;
}

// 2 pi int prof(rho) rho drho, the free-plane integral of the blob
double blob_moment(const Blob& b) {
    return two_pi * simpson([&b](double rho) { return b.prof(rho) * rho; },
                            0.0, b.rsup, 4096);
}

/*
 * Radial Fourier transform table D(kappa) = int_{R^2} prof(|d|)
 * e^{-i kappa e.d} dd, computed by the projection-slice route: D is the
 * 1D Fourier transform of the line projection P(x) = int prof dy.  P is
 * even in y with a profile flat at the support edge, so the trapezoid
 * rule on the projection integral is spectrally accurate, and one padded
 * FFT delivers D on a kappa grid fine enough (dk * rsup = 0.05) that
 * 8-point polynomial interpolation of the entire function D is exact to
 * machine precision.
 */
struct RadialTable {
    double dk = 0;
    std::vector<double> val;

    double at(double kappa) const {
        const double x = std::fabs(kappa) / dk;
        const int nv = int(val.size());
        if (x >= nv - 1) return 0.0;  // past the resolved decay range
        int i0 = int(std::floor(x)) - 3;
        i0 = std::max(0, std::min(i0, nv - 8));
        double res = 0.0;
        for (int j = 0; j < 8; ++j) {
            double L = 1.0;
            for (int m = 0; m < 8; ++m)
                if (m != j) L *= (x - (i0 + m)) / double(j - m);
            res += val[i0 + j] * L;
        }
        return res;
    }
};

RadialTable radial_ft(const Blob& b, double kmax, bool precise) {
    RadialTable t;
    t.dk = 0.05 / b.rsup;
    const double X = two_pi / t.dk;
    const double fold = kmax + (precise ? 60.0 : 40.0) / b.rsup;
    int M = 1024;
    while (X / M > pi_v / fold) M *= 2;
    const double dx = X / M;
    const int ntrap = precise ? 512 : 256;
    std::vector<double> P(M, 0.0);
    for (int j = 0; j < M; ++j) {
        double x = j * dx;
        if (x > 0.5 * X) x -= X;
        if (std::fabs(x) >= b.rsup) continue;
        const double ymax = std::sqrt(b.rsup * b.rsup - x * x);
        const double hy = ymax / ntrap;
        long double s = 0.5L * b.prof(std::fabs(x));  // y = 0 endpoint
        for (int i = 1; i < ntrap; ++i) {
            const double y = i * hy;
            s += b.prof(std::sqrt(x * x + y * y));
        }
        P[j] = double(2.0L * s * hy);
    }
    std::vector<fftw_complex> spec(std::size_t(M) / 2 + 1);
    fftw_plan pl =
        fftw_plan_dft_r2c_1d(M, P.data(), spec.data(), FFTW_ESTIMATE);
    fftw_execute(pl);
    fftw_destroy_plan(pl);
    const int nv = std::min(M / 2 + 1, int(std::ceil(kmax / t.dk)) + 16);
    t.val.resize(nv);
    for (int m = 0; m < nv; ++m) t.val[m] = spec[m][0] * dx;
    return t;
}

// Fourier coefficient evaluator for psi^power on the transverse lattice
struct CrossFT {
    double acell = 0;
    std::vector<Blob> blobs;
    std::vector<RadialTable> tab;

    std::complex<double> coef(const IVec& k) const {
        const double kappa = std::sqrt(double(dot_i(k, k)));
        std::complex<double> s(0.0, 0.0);
        for (std::size_t i = 0; i < blobs.size(); ++i) {
            const Blob& b = blobs[i];
            const double D = tab[i].at(kappa);
            const double ph =
                k[0] * b.cx[0] + k[1] * b.cx[1] + k[2] * b.cx[2];
            s += b.amp * D *
                 std::complex<double>(std::cos(ph), -std::sin(ph));
        }
        return s / acell;
    }

    double envelope(double kappa) const {
        double e = 0.0;
        for (std::size_t i = 0; i < blobs.size(); ++i)
            e += std::fabs(blobs[i].amp) * std::fabs(tab[i].at(kappa));
        return e;
    }
};

CrossFT make_crossft(const PipeProfile& p, int power, double kmax,
                     bool precise) {
    CrossFT ft;
    ft.acell = p.acell;
    ft.blobs = blobs_of(p, power);
    for (const auto& b : ft.blobs)
        ft.tab.push_back(radial_ft(b, kmax, precise));
    return ft;
}

struct CrossSection {
    const PipeProfile& p;
    double operator()(const double d[3]) const {
        if (p.kind == 'R') {
            const double dm[3] = {d[0] - p.cx[0], d[1] - p.cx[1],
                                  d[2] - p.cx[2]};
            const double dp[3] = {d[0] + p.cx[0], d[1] + p.cx[1],
                                  d[2] + p.cx[2]};
            const double qm = std::sqrt(dm[0] * dm[0] + dm[1] * dm[1] +
                                        dm[2] * dm[2]);
            const double qp = std::sqrt(dp[0] * dp[0] + dp[1] * dp[1] +
                                        dp[2] * dp[2]);
            return p.amp_main * (bump_unit(qm / p.rb) - bump_unit(qp / p.rb));
        }
        const double r =
            std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        return p.amp_main * bump_unit(r / p.r1) -
               p.amp_ring * bump_unit((r - p.rc) / p.rw);
    }
};

// nearest transverse representative of the in-plane point `base`
void reduce_displacement(const PipeProfile& p, const double base[3],
                         double d[3]) {
    double best = 1e300;
    for (const auto& sh : p.shifts2d) {
        const double w0 = base[0] + sh[0];
        const double w1 = base[1] + sh[1];
        const double w2 = base[2] + sh[2];
        const double n = w0 * w0 + w1 * w1 + w2 * w2;
        if (n < best) {
            best = n;
            d[0] = w0;
            d[1] = w1;
            d[2] = w2;
        }
    }
}

void uv_of(const PipeProfile& p, const double y[3], double& u, double& v) {
    u = p.g1[0] * y[0] + p.g1[1] * y[1] + p.g1[2] * y[2];
    v = p.g2[0] * y[0] + p.g2[1] * y[1] + p.g2[2] * y[2];
}

double bilinear(const std::vector<double>& a, int n, double u, double v) {
    const double hu = u / two_pi * n;
    const double hv = v / two_pi * n;
    int iu = int(std::floor(hu)), iv = int(std::floor(hv));
    const double fu = hu - iu, fv = hv - iv;
    iu = ((iu % n) + n) % n;
    iv = ((iv % n) + n) % n;
    const int ju = (iu + 1) % n, jv = (iv + 1) % n;
    return (1 - fu) * ((1 - fv) * a[iu * n + iv] + fv * a[iu * n + jv]) +
           fu * ((1 - fv) * a[ju * n + iv] + fv * a[ju * n + jv]);
}

}  // namespace

double pipe_spacing(const IVec& f_any) {
    const IVec f = primitive_dir(f_any);
    IVec g1, g2;
    find_basis(f, g1, g2);
    // build the map and take the shortest nonzero transverse lattice vector
    double Auv[3][2];
    const double G11 = double(dot_i(g1, g1)), G12 = double(dot_i(g1, g2)),
                 G22 = double(dot_i(g2, g2));
    const double det = G11 * G22 - G12 * G12;
    for (int r = 0; r < 3; ++r) {
        Auv[r][0] = (g1[r] * G22 - g2[r] * G12) / det;
        Auv[r][1] = (g2[r] * G11 - g1[r] * G12) / det;
    }
    double dmin = 1e300;
    for (int mu = -6; mu <= 6; ++mu)
        for (int mv = -6; mv <= 6; ++mv) {
            if (mu == 0 && mv == 0) continue;
            const double U = two_pi * mu, V = two_pi * mv;
            double n2 = 0;
            for (int r = 0; r < 3; ++r) {
                const double w = Auv[r][0] * U + Auv[r][1] * V;
                n2 += w * w;
            }
            dmin = std::min(dmin, std::sqrt(n2));
        }
    return dmin;
}

PipeProfile build_pipe(const IVec& f, char kind, double eta, int n2d,
                       int kmax3d) {
    if (kind != 'R' && kind != 'C')
        throw std::runtime_error("build_pipe: kind must be 'R' or 'C'");
    if (n2d < 16 || n2d % 2)
        throw std::runtime_error("build_pipe: n2d must be even and >= 16");
    PipeProfile p;
    p.f = f;
    p.f_prim = primitive_dir(f);
    p.kind = kind;
    p.eta = eta;
    find_basis(p.f_prim, p.g1, p.g2);

    const double G11 = double(dot_i(p.g1, p.g1)),
                 G12 = double(dot_i(p.g1, p.g2)),
                 G22 = double(dot_i(p.g2, p.g2));
    const double det = G11 * G22 - G12 * G12;
    for (int r = 0; r < 3; ++r) {
        p.Auv[r][0] = (p.g1[r] * G22 - p.g2[r] * G12) / det;
        p.Auv[r][1] = (p.g2[r] * G11 - p.g1[r] * G12) / det;
    }
    {
        // fundamental cell area of the transverse lattice
        double a1[3], a2[3];
        for (int r = 0; r < 3; ++r) {
            a1[r] = two_pi * p.Auv[r][0];
            a2[r] = two_pi * p.Auv[r][1];
        }
        const double cr[3] = {a1[1] * a2[2] - a1[2] * a2[1],
                              a1[2] * a2[0] - a1[0] * a2[2],
                              a1[0] * a2[1] - a1[1] * a2[0]};
        p.acell = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
    }

    // transverse lattice vectors, closed under negation
    double spacing = 1e300;
    std::vector<std::array<double, 3>> raw;
    for (int mu = -6; mu <= 6; ++mu)
        for (int mv = -6; mv <= 6; ++mv) {
            const double U = two_pi * mu, V = two_pi * mv;
            std::array<double, 3> sh;
            for (int r = 0; r < 3; ++r)
                sh[r] = p.Auv[r][0] * U + p.Auv[r][1] * V;
            raw.push_back(sh);
            if (mu || mv)
                spacing = std::min(spacing,
                                   std::sqrt(sh[0] * sh[0] + sh[1] * sh[1] +
                                             sh[2] * sh[2]));
        }
    p.spacing = spacing;
    const double col1 = std::sqrt(p.Auv[0][0] * p.Auv[0][0] +
                                  p.Auv[1][0] * p.Auv[1][0] +
                                  p.Auv[2][0] * p.Auv[2][0]);
    const double col2 = std::sqrt(p.Auv[0][1] * p.Auv[0][1] +
                                  p.Auv[1][1] * p.Auv[1][1] +
                                  p.Auv[2][1] * p.Auv[2][1]);
    const double rmax = pi_v * (col1 + col2);
    for (const auto& sh : raw) {
        const double n = std::sqrt(sh[0] * sh[0] + sh[1] * sh[1] +
                                   sh[2] * sh[2]);
        if (n <= 2.0 * rmax + spacing) p.shifts2d.push_back(sh);
    }

    const double r_tube = eta / 10.0;
    if (2.0 * 0.95 * r_tube >= 0.98 * spacing)
        throw std::runtime_error(
            "build_pipe: tube radius " + std::to_string(r_tube) +
            " self-overlaps at transverse spacing " + std::to_string(spacing));

    if (kind == 'R') {
        p.rb = 0.45 * r_tube;
        // dipole centers at +/- 0.5 r_tube along an in-plane unit vector
        const double c1 = 0.5 * r_tube / col1;
        for (int r = 0; r < 3; ++r) p.cx[r] = c1 * p.Auv[r][0];
        p.r_support = 0.95 * r_tube;
    } else {
        p.r1 = 0.28 * r_tube;
        p.rc = 0.625 * r_tube;
        p.rw = 0.3 * r_tube;
        p.r_support = 0.925 * r_tube;
    }

    // continuum moments of the raw cross-section fix the normalization;
    // nothing is measured on a grid, so thin tubes lose no exactness
    p.amp_main = 1.0;
    p.amp_ring = 0.0;
    if (kind == 'C') {
        const auto bs = blobs_of(p, 1);
        const double m_disc = blob_moment(bs[0]);
        Blob ring = bs[1];
        ring.amp = 1.0;
        const double m_ring = blob_moment(ring);
        if (!(m_ring > 0.0))
            throw std::runtime_error("build_pipe: vanishing ring mass");
        p.amp_ring = m_disc / m_ring;  // exact zero-mean amplitude ratio
    }
    double m2raw = 0.0, m3raw = 0.0;
    for (const auto& b : blobs_of(p, 2)) m2raw += b.amp * blob_moment(b);
    for (const auto& b : blobs_of(p, 3)) m3raw += b.amp * blob_moment(b);
    m2raw /= p.acell;
    m3raw /= p.acell;
    if (kind == 'R') {
        if (!(m2raw > 0.0))
            throw std::runtime_error("build_pipe: vanishing psi^2 mean");
        p.scale = 1.0 / std::sqrt(m2raw);
        p.mean2 = m2raw * p.scale * p.scale;
        p.mean3 = 0.0;  // odd cross-section
    } else {
        if (!(m3raw > 0.0))
            throw std::runtime_error(
                "build_pipe: nonpositive psi^3 mean, ring overpowers the "
                "central bump");
        p.scale = std::pow(m3raw, -1.0 / 3.0);
        p.mean2 = m2raw * p.scale * p.scale;
        p.mean3 = m3raw * p.scale * p.scale * p.scale;
    }
    p.amp_main *= p.scale;
    p.amp_ring *= p.scale;

    /*
     * Band-limited synthesis on the quotient grid: place the analytic
     * coefficients at modes (alpha, beta) with |alpha|,|beta| <= n2d/3
     * and invert.  psi is a truncated view of the profile; the potential
     * B_k = psi_k i (k x f)/|k|^2 lives on exactly the same modes, so the
     * curl identity holds for the pair as represented.
     */
    const int n = n2d, nc = n / 2 + 1, Kq = n / 3;
    p.n2d = n;
    double kmax_need = 0.0;
    for (int al = -Kq; al <= Kq; ++al)
        for (int be = 0; be <= Kq; ++be) {
            const IVec k = {al * p.g1[0] + be * p.g2[0],
                            al * p.g1[1] + be * p.g2[1],
                            al * p.g1[2] + be * p.g2[2]};
            kmax_need = std::max(kmax_need, std::sqrt(double(dot_i(k, k))));
        }
    const CrossFT ft1 = make_crossft(p, 1, kmax_need + 4.0, false);

    std::vector<fftw_complex> spec(std::size_t(n) * nc);
    auto clear_spec = [&spec]() {
        for (auto& c : spec) c[0] = c[1] = 0.0;
    };
    auto place = [&](int al, int be, std::complex<double> c) {
        const int a = al >= 0 ? al : al + n;
        spec[std::size_t(a) * nc + be][0] = c.real();
        spec[std::size_t(a) * nc + be][1] = c.imag();
        if (be == 0 && al > 0) {  // Hermitian partner on the beta=0 column
            spec[std::size_t(n - al) * nc][0] = c.real();
            spec[std::size_t(n - al) * nc][1] = -c.imag();
        }
    };
    auto synth = [&](std::vector<double>& outv, std::size_t off) {
        std::vector<double> out(std::size_t(n) * n);
        fftw_plan bwd = fftw_plan_dft_c2r_2d(n, n, spec.data(), out.data(),
                                             FFTW_ESTIMATE);
        fftw_execute(bwd);
        fftw_destroy_plan(bwd);
        std::copy(out.begin(), out.end(), outv.begin() + off);
    };

    struct ModeC {
        int al, be;
        IVec k;
        std::complex<double> c;
    };
    std::vector<ModeC> modes;
    for (int al = -Kq; al <= Kq; ++al)
        for (int be = 0; be <= Kq; ++be) {
            if (be == 0 && al <= 0) continue;  // half lattice, no mean mode
            const IVec k = {al * p.g1[0] + be * p.g2[0],
                            al * p.g1[1] + be * p.g2[1],
                            al * p.g1[2] + be * p.g2[2]};
            const int ki = std::max(std::abs(k[0]),
                                    std::max(std::abs(k[1]), std::abs(k[2])));
            if (kmax3d >= 0 && ki > kmax3d) continue;
            p.max_mode = std::max(p.max_mode, ki);
            modes.push_back({al, be, k, ft1.coef(k)});
        }

    p.psi.assign(std::size_t(n) * n, 0.0);
    clear_spec();
    for (const auto& m : modes) place(m.al, m.be, m.c);
    synth(p.psi, 0);

    p.pot.assign(3 * std::size_t(n) * n, 0.0);
    for (int comp = 0; comp < 3; ++comp) {
        clear_spec();
        for (const auto& m : modes) {
            const IVec kf = cross_i(m.k, p.f);
            const double w = kf[comp] / double(dot_i(m.k, m.k));
            // times i w
            place(m.al, m.be,
                  std::complex<double>(-w * m.c.imag(), w * m.c.real()));
        }
        synth(p.pot, std::size_t(comp) * n * n);
    }
    return p;
}

double eta_for_support(char kind, double r_support) {
    // inverts the support-radius choices above (0.95 resp. 0.925 of the
    // tube radius eta/10)
    return kind == 'R' ? r_support * 10.0 / 0.95 : r_support * 10.0 / 0.925;
}

double pipe_eval(const PipeProfile& p, const double y[3]) {
    double u, v;
    uv_of(p, y, u, v);
    u = std::remainder(u, two_pi);
    v = std::remainder(v, two_pi);
    const double base[3] = {p.Auv[0][0] * u + p.Auv[0][1] * v,
                            p.Auv[1][0] * u + p.Auv[1][1] * v,
                            p.Auv[2][0] * u + p.Auv[2][1] * v};
    double d[3];
    reduce_displacement(p, base, d);
    return CrossSection{p}(d);
}

double pipe_eval_grid(const PipeProfile& p, const double y[3]) {
    double u, v;
    uv_of(p, y, u, v);
    u -= two_pi * std::floor(u / two_pi);
    v -= two_pi * std::floor(v / two_pi);
    return bilinear(p.psi, p.n2d, u, v);
}

void pipe_potential(const PipeProfile& p, const double y[3], double out[3]) {
    double u, v;
    uv_of(p, y, u, v);
    u -= two_pi * std::floor(u / two_pi);
    v -= two_pi * std::floor(v / two_pi);
    const std::size_t nn = std::size_t(p.n2d) * p.n2d;
    for (int c = 0; c < 3; ++c) {
        const double* a = p.pot.data() + c * nn;
        const int n = p.n2d;
        const double hu = u / two_pi * n, hv = v / two_pi * n;
        int iu = int(std::floor(hu)), iv = int(std::floor(hv));
        const double fu = hu - iu, fv = hv - iv;
        iu = ((iu % n) + n) % n;
        iv = ((iv % n) + n) % n;
        const int ju = (iu + 1) % n, jv = (iv + 1) % n;
        out[c] = (1 - fu) * ((1 - fv) * a[iu * n + iv] + fv * a[iu * n + jv]) +
                 fu * ((1 - fv) * a[ju * n + iv] + fv * a[ju * n + jv]);
    }
}

double pipe_dir_deriv_sup(const PipeProfile& p) {
    const int n = p.n2d, nc = n / 2 + 1;
    std::vector<double> in(p.psi);
    std::vector<fftw_complex> spec(std::size_t(n) * nc);
    fftw_plan fwd = fftw_plan_dft_r2c_2d(n, n, in.data(), spec.data(),
                                         FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
    for (int a = 0; a < n; ++a) {
        const int alpha = a <= n / 2 ? a : a - n;
        for (int b = 0; b < nc; ++b) {
            const std::size_t idx = std::size_t(a) * nc + b;
            const IVec k = {alpha * p.g1[0] + b * p.g2[0],
                            alpha * p.g1[1] + b * p.g2[1],
                            alpha * p.g1[2] + b * p.g2[2]};
            const double kf = double(dot_i(k, p.f));
            const double re = spec[idx][0] / (double(n) * n);
            const double im = spec[idx][1] / (double(n) * n);
            spec[idx][0] = -kf * im;
            spec[idx][1] = kf * re;
        }
    }
    std::vector<double> out(std::size_t(n) * n);
    fftw_plan bwd = fftw_plan_dft_c2r_2d(n, n, spec.data(), out.data(),
                                         FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);
    double sup = 0.0;
    for (double v : out) sup = std::max(sup, std::fabs(v));
    return sup;
}

std::complex<double> pipe_coefficient(const PipeProfile& p, const IVec& k,
                                      int power) {
    if (power < 1 || power > 3)
        throw std::runtime_error("pipe_coefficient: power must be 1, 2 or 3");
    if (dot_i(k, p.f) != 0)
        throw std::runtime_error(
            "pipe_coefficient: mode not orthogonal to the pipe direction");
    const double kappa = std::sqrt(double(dot_i(k, k)));
    const CrossFT ft = make_crossft(p, power, kappa + 4.0, true);
    return ft.coef(k);
}

PipeTables pipe_fourier(const PipeProfile& p, int k_cut) {
    if (k_cut < 1) throw std::runtime_error("pipe_fourier: k_cut must be >= 1");
    PipeTables t;
    t.c0 = p.mean2;
    t.d0 = p.mean3;
    const double m2 = p.mean2;

    const double fnorm = std::sqrt(double(dot_i(p.f_prim, p.f_prim)));
    const double g1n = std::sqrt(double(dot_i(p.g1, p.g1)));
    const double g2n = std::sqrt(double(dot_i(p.g2, p.g2)));
    const double kball = std::sqrt(3.0) * k_cut;
    const int La = int(std::ceil(kball * g2n / fnorm)) + 1;
    const int Lb = int(std::ceil(kball * g1n / fnorm)) + 1;

    const CrossFT f1 = make_crossft(p, 1, kball + 4.0, true);
    const CrossFT f2 = make_crossft(p, 2, kball + 4.0, true);
    const CrossFT f3 = make_crossft(p, 3, kball + 4.0, true);

    long double kept = 0.0L;
    for (int al = -La; al <= La; ++al)
        for (int be = 0; be <= Lb; ++be) {
            if (be == 0 && al <= 0) continue;  // canonical half lattice
            const IVec k = {al * p.g1[0] + be * p.g2[0],
                            al * p.g1[1] + be * p.g2[1],
                            al * p.g1[2] + be * p.g2[2]};
            if (std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])}) >
                k_cut)
                continue;
            if (dot_i(k, p.f) != 0)
                throw std::runtime_error(
                    "pipe_fourier: mode lattice not orthogonal to f");
            const std::complex<double> b = f1.coef(k);
            kept += 2.0L * std::norm(b);
            t.modes.push_back({k, b, f2.coef(k), f3.coef(k)});
        }

    // Parseval against the exact continuum mean of psi^2: a large deficit
    // means the cutoff box misses real spectral mass
    const double diff = double((long double)m2 - kept);
    if (diff > 1e-10 * m2)
        throw std::runtime_error(
            "pipe_fourier: spectral mass beyond k_cut exceeds 1e-6 relative "
            "(profile not representable at this cutoff)");

    /*
     * Near the threshold the subtraction above loses precision, so sum
     * the dropped mass directly: extend the radial tables until the blob
     * transforms have decayed below 1e-9 of their peak, then accumulate
     * the modes outside the cutoff box.
     */
    double kdec = kball + 4.0;
    CrossFT fe = f1;
    const double peak = fe.envelope(0.0);
    for (int iter = 0;; ++iter) {
        double klast = 0.0;
        double dq = 1e300;
        for (const auto& tb : fe.tab) dq = std::min(dq, tb.dk);
        for (double q = 0.0; q <= kdec; q += dq)
            if (fe.envelope(q) > 1e-9 * peak) klast = q;
        if (klast < kdec - 8.0 * dq) {
            kdec = klast + 4.0 * dq;
            break;
        }
        if (iter == 6)
            throw std::runtime_error(
                "pipe_fourier: blob spectrum does not decay within the "
                "searchable range");
        kdec *= 2.0;
        fe = make_crossft(p, 1, kdec, true);
    }
    long double dropped = 0.0L;
    const int Ea = int(std::ceil(kdec * g2n / fnorm)) + 1;
    const int Eb = int(std::ceil(kdec * g1n / fnorm)) + 1;
    for (int al = -Ea; al <= Ea; ++al)
        for (int be = 0; be <= Eb; ++be) {
            if (be == 0 && al <= 0) continue;
            const IVec k = {al * p.g1[0] + be * p.g2[0],
                            al * p.g1[1] + be * p.g2[1],
                            al * p.g1[2] + be * p.g2[2]};
            if (double(dot_i(k, k)) > kdec * kdec) continue;
            if (std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])}) <=
                k_cut)
                continue;
            dropped += 2.0L * std::norm(fe.coef(k));
        }
    if (std::sqrt(double(dropped) / m2) > 1e-6)
        throw std::runtime_error(
            "pipe_fourier: spectral mass beyond k_cut exceeds 1e-6 relative "
            "(profile not representable at this cutoff)");
    return t;
}

IVec slot_direction(const DirectionFamilies& fam, int cls, int slot) {
    if (cls < 0 || cls >= 27 || slot < 0 || slot >= 10)
        throw std::runtime_error("slot_direction: index out of range");
    return slot < 6 ? fam.R[cls].k[slot] : fam.Phi[cls].k[slot - 6];
}

std::array<std::array<double, 10>, 27> pipe_radii(const DirectionFamilies& fam,
                                                  double eta_scale) {
    /*
     * Two skew line families with cross product n can never be pushed
     * further apart than reach = pi gcd(n)/|n|, whatever the offsets, and
     * a pair at separation s excludes the fraction s/reach of the offset
     * torus.  Feasibility of the shift search therefore requires the
     * per-family sum of excluded fractions (over all 539 concurrent
     * partners) to stay below a fixed budget: scale all radii down
     * together until the worst sum fits.
     */
    std::array<IVec, 270> dirs;
    std::array<double, 270> r0, sp;
    for (int c = 0; c < 27; ++c)
        for (int s = 0; s < 10; ++s) {
            const int i = 10 * c + s;
            dirs[i] = primitive_dir(slot_direction(fam, c, s));
            sp[i] = pipe_spacing(dirs[i]);
            r0[i] = 0.95 * (sp[i] * eta_scale / 10.0) / 10.0;
        }
    double smax = 0.0;
    std::array<double, 270> reach_min;
    reach_min.fill(1e300);
    for (int i = 0; i < 270; ++i) {
        double s_i = 0.0;
        for (int j = 0; j < 270; ++j) {
            if (j == i) continue;
            const IVec n = cross_i(dirs[i], dirs[j]);
            const double reach =
                pi_v * gcd3(n) / std::sqrt(double(dot_i(n, n)));
            reach_min[i] = std::min(reach_min[i], reach);
            // both parities of the partner direction
            s_i += 2.0 * kSepMargin * (r0[i] + r0[j]) / reach;
        }
        // own opposite parity: transverse lattice reach is spacing/2
        s_i += kSepMargin * 2.0 * r0[i] / (0.5 * sp[i]);
        smax = std::max(smax, s_i);
    }
    const double gamma = std::min(1.0, kShiftBudget / smax);
    std::array<std::array<double, 10>, 27> r{};
    for (int c = 0; c < 27; ++c)
        for (int s = 0; s < 10; ++s) {
            const int i = 10 * c + s;
            r[c][s] = std::min(gamma * r0[i],
                               0.225 * reach_min[i] / kSepMargin);
        }
    return r;
}

double line_family_distance(const IVec& f_any, const double a[3],
                            const IVec& g_any, const double b[3]) {
    const IVec f = primitive_dir(f_any), g = primitive_dir(g_any);
    const IVec nvec = cross_i(f, g);
    const double c[3] = {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
    if (nvec[0] || nvec[1] || nvec[2]) {
        // skew: distances |(c - 2 pi m).n|/|n|, m.n ranges over gcd(n) Z
        const double nn = std::sqrt(double(dot_i(nvec, nvec)));
        const double period = two_pi * gcd3(nvec);
        const double v = c[0] * nvec[0] + c[1] * nvec[1] + c[2] * nvec[2];
        return std::fabs(std::remainder(v, period)) / nn;
    }
    // parallel: closest vector in the projected period lattice
    const double ff = double(dot_i(f, f));
    const double cf = (c[0] * f[0] + c[1] * f[1] + c[2] * f[2]) / ff;
    const double cp[3] = {c[0] - cf * f[0], c[1] - cf * f[1],
                          c[2] - cf * f[2]};
    const int box = 2 * std::max({std::abs(f[0]), std::abs(f[1]),
                                  std::abs(f[2])}) + 2;
    double best = 1e300;
    for (int x = -box; x <= box; ++x)
        for (int y = -box; y <= box; ++y)
            for (int z = -box; z <= box; ++z) {
                const double m[3] = {two_pi * x, two_pi * y, two_pi * z};
                const double mf = (m[0] * f[0] + m[1] * f[1] + m[2] * f[2]) /
                                  ff;
                double n2 = 0;
                for (int r = 0; r < 3; ++r) {
                    const double w = cp[r] - (m[r] - mf * f[r]);
                    n2 += w * w;
                }
                best = std::min(best, n2);
            }
    return std::sqrt(best);
}

ShiftPlan choose_shifts(const DirectionFamilies& fam,
                        const std::array<std::array<double, 10>, 27>& radius) {
    /*
     * 540 placements: 270 directions times two time-slab parities, each
     * an independent offset.  Greedy, fattest tubes first, over a K^3
     * offset grid; a candidate survives if it keeps margin * (r_i + r_j)
     * from everything already placed.  Same-direction pairs (the two
     * parities) are checked through the transverse lattice of that
     * direction, skew pairs through the closed-form distance.
     */
    struct Item {
        int cls, slot, par;
        IVec f;
        double r;
    };
    std::vector<Item> items;
    items.reserve(540);
    for (int c = 0; c < 27; ++c)
        for (int s = 0; s < 10; ++s) {
            const IVec f = primitive_dir(slot_direction(fam, c, s));
            for (int par = 0; par < 2; ++par)
                items.push_back({c, s, par, f, radius[c][s]});
        }
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& a, const Item& b) { return a.r > b.r; });

    // fast same-direction distance: reduce the displacement in the (u,v)
    // chart, where the transverse lattice is exactly 2 pi Z^2
    struct TransChart {
        IVec g1, g2;
        double Auv[3][2];
    };
    std::vector<TransChart> chart;
    std::vector<IVec> chart_dir;
    auto chart_of = [&](const IVec& f) -> const TransChart& {
        for (std::size_t i = 0; i < chart_dir.size(); ++i)
            if (chart_dir[i] == f) return chart[i];
        TransChart tc;
        find_basis(f, tc.g1, tc.g2);
        const double G11 = double(dot_i(tc.g1, tc.g1)),
                     G12 = double(dot_i(tc.g1, tc.g2)),
                     G22 = double(dot_i(tc.g2, tc.g2));
        const double det = G11 * G22 - G12 * G12;
        for (int r = 0; r < 3; ++r) {
            tc.Auv[r][0] = (tc.g1[r] * G22 - tc.g2[r] * G12) / det;
            tc.Auv[r][1] = (tc.g2[r] * G11 - tc.g1[r] * G12) / det;
        }
        chart_dir.push_back(f);
        chart.push_back(tc);
        return chart.back();
    };
    auto parallel_dist = [&](const IVec& f, const double a[3],
                             const double b[3]) {
        const TransChart& tc = chart_of(f);
        const double c[3] = {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
        const double u = std::remainder(
            tc.g1[0] * c[0] + tc.g1[1] * c[1] + tc.g1[2] * c[2], two_pi);
        const double v = std::remainder(
            tc.g2[0] * c[0] + tc.g2[1] * c[1] + tc.g2[2] * c[2], two_pi);
        double best = 1e300;
        for (int mu = -3; mu <= 3; ++mu)
            for (int mv = -3; mv <= 3; ++mv) {
                const double U = u - two_pi * mu, V = v - two_pi * mv;
                double n2 = 0;
                for (int r = 0; r < 3; ++r) {
                    const double w = tc.Auv[r][0] * U + tc.Auv[r][1] * V;
                    n2 += w * w;
                }
                best = std::min(best, n2);
            }
        return std::sqrt(best);
    };

    struct Placed {
        IVec f;
        double p[3];
        double r;
    };
    std::vector<Placed> placed;
    placed.reserve(540);

    ShiftPlan plan;
    // candidates must avoid every rational hyperplane the constraint
    // lattices live on, so they are drawn from a fixed-seed generator
    // (grid candidates collide with the projected lattices with
    // probability 1/grid per pair, which is fatal over 539 partners)
    std::mt19937_64 rng(0x77696c64666c6f77ull);
    auto draw = [&rng]() {
        return two_pi * ((rng() >> 11) * 0x1p-53);
    };
    for (const auto& it : items) {
        bool done = false;
        for (int trial = 0; trial < kOffsetTries && !done; ++trial) {
            const double cand[3] = {draw(), draw(), draw()};
            bool ok = true;
            for (const auto& q : placed) {
                const double d =
                    q.f == it.f
                        ? parallel_dist(it.f, cand, q.p)
                        : line_family_distance(it.f, cand, q.f, q.p);
                if (d < kSepMargin * (it.r + q.r)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                plan.p[it.par][it.cls][it.slot] = {cand[0], cand[1], cand[2]};
                placed.push_back({it.f, {cand[0], cand[1], cand[2]}, it.r});
                done = true;
            }
        }
        if (!done)
            throw std::runtime_error(
                "choose_shifts: offset search exhausted, pipe density too "
                "high for the requested tube radii");
    }
    return plan;
}

}  // namespace wf
