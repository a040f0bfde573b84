#include "wildflow/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "wildflow/bump.hpp"

namespace wf {

double bump01_mass() {
    static const double mass = [] {
        // composite Simpson on a fixed 20000-interval grid: deterministic
        const int m = 20000;
        const double h = 1.0 / m;
        double s = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * bump01_raw(i * h);
        }
        return s * h / 3.0;
    }();
    return mass;
}

Spectrum derivative_spec(const Spectrum& s, int axis) {
    Spectrum out = s;
    const int n = s.grid.n;
    const int nz = s.nz();
    for (int c = 0; c < components(s.rank); ++c) {
        std::complex<double>* sc = out.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    int k[3] = {out.wave(jx), out.wave(jy), jz};
                    // the unpaired Nyquist column has no consistent odd
                    // multiplier; zero it
                    for (int d = 0; d < 3; ++d)
                        if (k[d] == n / 2) k[d] = 0;
                    sc[out.mode_index(jx, jy, jz)] *=
                        std::complex<double>(0.0, double(k[axis]));
                }
    }
    return out;
}

Field derivative(const Field& f, int axis) {
    return from_spectrum(derivative_spec(to_spectrum(f), axis));
}

Field grad_scalar(const Field& f) {
    if (f.rank != Rank::scalar)
        throw std::runtime_error("grad_scalar: scalar field required");
    Field out(f.grid, Rank::vector3);
    Spectrum s = to_spectrum(f);
    for (int d = 0; d < 3; ++d) {
        Field g = from_spectrum(derivative_spec(s, d));
        std::copy(g.comp(0), g.comp(0) + f.grid.points(), out.comp(d));
    }
    return out;
}

Field div_vector(const Field& v) {
    if (v.rank != Rank::vector3)
        throw std::runtime_error("div_vector: vector field required");
    Field out(v.grid, Rank::scalar);
    for (int d = 0; d < 3; ++d) {
        Field c(v.grid, Rank::scalar);
        std::copy(v.comp(d), v.comp(d) + v.grid.points(), c.comp(0));
        out += derivative(c, d);
    }
    return out;
}

Field div_sym_tensor(const Field& R) {
    if (R.rank != Rank::sym3x3)
        throw std::runtime_error("div_sym_tensor: sym3x3 field required");
    Field out(R.grid, Rank::vector3);
    const std::size_t np = R.grid.points();
    for (int i = 0; i < 3; ++i) {
        Field acc(R.grid, Rank::scalar);
        for (int j = 0; j < 3; ++j) {
            Field c(R.grid, Rank::scalar);
            std::copy(R.comp(sym_index(i, j)),
                      R.comp(sym_index(i, j)) + np, c.comp(0));
            acc += derivative(c, j);
        }
        std::copy(acc.comp(0), acc.comp(0) + np, out.comp(i));
    }
    return out;
}

Field curl(const Field& v) {
    if (v.rank != Rank::vector3)
        throw std::runtime_error("curl: vector field required");
    const std::size_t np = v.grid.points();
    auto comp_field = [&](int c) {
        Field f(v.grid, Rank::scalar);
        std::copy(v.comp(c), v.comp(c) + np, f.comp(0));
        return f;
    };
    Field out(v.grid, Rank::vector3);
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        Field c = derivative(comp_field(k), j) - derivative(comp_field(j), k);
        std::copy(c.comp(0), c.comp(0) + np, out.comp(i));
    }
    return out;
}

Field laplacian(const Field& f) {
    Spectrum s = to_spectrum(f);
    const int n = s.grid.n;
    const int nz = s.nz();
    for (int c = 0; c < components(s.rank); ++c) {
        std::complex<double>* sc = s.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    const double kx = s.wave(jx), ky = s.wave(jy), kz = jz;
                    sc[s.mode_index(jx, jy, jz)] *=
                        -(kx * kx + ky * ky + kz * kz);
                }
    }
    return from_spectrum(s);
}

Field div_outer(const Field& a, const Field& b) {
    if (a.rank != Rank::vector3 || b.rank != Rank::vector3)
        throw std::runtime_error("div_outer: vector fields required");
    const std::size_t np = a.grid.points();
    Field out(a.grid, Rank::vector3);
    for (int i = 0; i < 3; ++i) {
        Field acc(a.grid, Rank::scalar);
        for (int j = 0; j < 3; ++j) {
            Field prod(a.grid, Rank::scalar);
            const double* ai = a.comp(i);
            const double* bj = b.comp(j);
            double* pf = prod.comp(0);
            for (std::size_t p = 0; p < np; ++p) pf[p] = ai[p] * bj[p];
            acc += derivative(prod, j);
        }
        std::copy(acc.comp(0), acc.comp(0) + np, out.comp(i));
    }
    return out;
}

Field contract_sym_gradT(const Field& R, const Field& v) {
    if (R.rank != Rank::sym3x3 || v.rank != Rank::vector3)
        throw std::runtime_error("contract_sym_gradT: sym3x3 and vector");
    const std::size_t np = R.grid.points();
    Field out(R.grid, Rank::scalar);
    double* of = out.comp(0);
    Spectrum vs = to_spectrum(v);
    for (int j = 0; j < 3; ++j) {
        Spectrum vj(v.grid, Rank::scalar);
        std::copy(vs.comp(j), vs.comp(j) + vs.modes_per_comp(), vj.comp(0));
        for (int i = 0; i < 3; ++i) {
            Field dv = from_spectrum(derivative_spec(vj, i));
            const double* rf = R.comp(sym_index(i, j));
            const double* df = dv.comp(0);
            for (std::size_t p = 0; p < np; ++p) of[p] += rf[p] * df[p];
        }
    }
    return out;
}

Field advect_raw(const Field& u, const Field& f) {
    if (u.rank != Rank::vector3)
        throw std::runtime_error("advect_raw: velocity must be a vector");
    const std::size_t np = f.grid.points();
    Field out(f.grid, f.rank);
    Spectrum fs = to_spectrum(f);
    for (int c = 0; c < components(f.rank); ++c) {
        Spectrum fc(f.grid, Rank::scalar);
        std::copy(fs.comp(c), fs.comp(c) + fs.modes_per_comp(), fc.comp(0));
        double* of = out.comp(c);
        for (int d = 0; d < 3; ++d) {
            Field df = from_spectrum(derivative_spec(fc, d));
            const double* uf = u.comp(d);
            const double* dff = df.comp(0);
            for (std::size_t p = 0; p < np; ++p) of[p] += uf[p] * dff[p];
        }
    }
    return out;
}

Field multiply_dealiased(const Field& a, const Field& b) {
    if (a.grid != b.grid)
        throw std::runtime_error("multiply_dealiased: grid mismatch");
    if (a.rank != Rank::scalar || b.rank != Rank::scalar)
        throw std::runtime_error("multiply_dealiased: scalar fields required");
    Field prod(a.grid, Rank::scalar);
    const std::size_t np = a.grid.points();
    const double* af = a.comp(0);
    const double* bf = b.comp(0);
    double* pf = prod.comp(0);
    for (std::size_t p = 0; p < np; ++p) pf[p] = af[p] * bf[p];
    return band_truncate(prod, a.grid.n / 3);
}

Field advect(const Field& u, const Field& f) {
    if (u.rank != Rank::vector3)
        throw std::runtime_error("advect: velocity must be a vector");
    const std::size_t np = f.grid.points();
    Field out(f.grid, f.rank);
    Spectrum fs = to_spectrum(f);
    for (int c = 0; c < components(f.rank); ++c) {
        Spectrum fc(f.grid, Rank::scalar);
        std::copy(fs.comp(c), fs.comp(c) + fs.modes_per_comp(), fc.comp(0));
        Field acc(f.grid, Rank::scalar);
        for (int d = 0; d < 3; ++d) {
            Field df = from_spectrum(derivative_spec(fc, d));
            Field ud(f.grid, Rank::scalar);
            std::copy(u.comp(d), u.comp(d) + np, ud.comp(0));
            acc += multiply_dealiased(ud, df);
        }
        std::copy(acc.comp(0), acc.comp(0) + np, out.comp(c));
    }
    return out;
}

Field lp_project(const Field& f, int j, LpKind kind) {
    Spectrum s = to_spectrum(f);
    const int n = s.grid.n;
    const int nz = s.nz();
    const double scale = std::pow(2.0, double(-j));
    const double scale_prev = std::pow(2.0, double(-(j - 1)));
    for (int c = 0; c < components(s.rank); ++c) {
        std::complex<double>* sc = s.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    const double kx = s.wave(jx), ky = s.wave(jy), kz = jz;
                    const double r = std::sqrt(kx * kx + ky * ky + kz * kz);
                    double m;
                    switch (kind) {
                        case LpKind::leq: m = lp_mollifier(r * scale); break;
                        case LpKind::gt:
                            m = 1.0 - lp_mollifier(r * scale);
                            break;
                        case LpKind::shell:
                            // P_{> 2^{j-1}} - P_{> 2^j}
                            m = lp_mollifier(r * scale) -
                                lp_mollifier(r * scale_prev);
                            break;
                    }
                    sc[s.mode_index(jx, jy, jz)] *= m;
                }
    }
    return from_spectrum(s);
}

int lp_cutoff_exponent(double l) {
    if (!(l > 0.0)) throw std::runtime_error("lp_cutoff_exponent: l <= 0");
    int j = int(std::floor(std::log2(1.0 / l)));
    // guard against log2 rounding at exact powers of two
    while (std::pow(2.0, double(j + 1)) <= 1.0 / l) ++j;
    while (std::pow(2.0, double(j)) > 1.0 / l) --j;
    return j;
}

Field project_low(const Field& f, double l) {
    return lp_project(f, lp_cutoff_exponent(l), LpKind::leq);
}

void band_truncate_inplace(Spectrum& s, int kmax) {
    const int n = s.grid.n;
    const int nz = s.nz();
    for (int c = 0; c < components(s.rank); ++c) {
        std::complex<double>* sc = s.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    const int m = std::max({std::abs(s.wave(jx)),
                                            std::abs(s.wave(jy)), jz});
                    if (m > kmax) sc[s.mode_index(jx, jy, jz)] = 0.0;
                }
    }
}

Field band_truncate(const Field& f, int kmax) {
    Spectrum s = to_spectrum(f);
    band_truncate_inplace(s, kmax);
    return from_spectrum(s);
}

int band_content(const Field& f, double rel_tol) {
    Spectrum s = to_spectrum(f);
    double peak = 0.0;
    for (const auto& v : s.c) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return 0;
    const int n = s.grid.n;
    const int nz = s.nz();
    int best = 0;
    for (int c = 0; c < components(s.rank); ++c) {
        const std::complex<double>* sc = s.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    if (std::abs(sc[s.mode_index(jx, jy, jz)]) >
                        rel_tol * peak) {
                        const int m = std::max({std::abs(s.wave(jx)),
                                                std::abs(s.wave(jy)), jz});
                        best = std::max(best, m);
                    }
                }
    }
    return best;
}

void set_mean(Field& f, int c, double m) {
    const double cur = mean_component(f, c);
    double* ff = f.comp(c);
    const std::size_t np = f.grid.points();
    const double shift = m - cur;
    for (std::size_t i = 0; i < np; ++i) ff[i] += shift;
}

double sup_abs(const Field& f) { return field_max_abs(f); }

Field antidiv_tensor(const Field& v) {
    if (v.rank != Rank::vector3)
        throw std::runtime_error("antidiv_tensor: vector field required");
    Spectrum s = to_spectrum(v);
    Spectrum out(v.grid, Rank::sym3x3);
    const int n = s.grid.n;
    const int nz = s.nz();
    for (int jx = 0; jx < n; ++jx)
        for (int jy = 0; jy < n; ++jy)
            for (int jz = 0; jz < nz; ++jz) {
                const std::size_t idx = s.mode_index(jx, jy, jz);
                // Nyquist components follow the derivative convention
                // (multiplier zero), so that div recovers the input
                int ki[3] = {s.wave(jx), s.wave(jy), jz};
                for (int d = 0; d < 3; ++d)
                    if (ki[d] == n / 2) ki[d] = 0;
                const double k[3] = {double(ki[0]), double(ki[1]),
                                     double(ki[2])};
                const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if (k2 == 0.0) continue;
                std::complex<double> vh[3], uh[3], pu[3];
                for (int i = 0; i < 3; ++i) vh[i] = s.comp(i)[idx];
                // u = (Lap)^{-1} v so that div of the assembled tensor is v
                for (int i = 0; i < 3; ++i) uh[i] = -vh[i] / k2;
                std::complex<double> kdotu = 0.0;
                for (int i = 0; i < 3; ++i) kdotu += k[i] * uh[i];
                for (int i = 0; i < 3; ++i)
                    pu[i] = uh[i] - k[i] * kdotu / k2;  // Leray part
                const std::complex<double> I(0.0, 1.0);
                const std::complex<double> divu = I * kdotu;
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        std::complex<double> r =
                            0.25 * (I * k[i] * pu[j] + I * k[j] * pu[i]) +
                            0.75 * (I * k[i] * uh[j] + I * k[j] * uh[i]);
                        if (i == j) r -= 0.5 * divu;
                        out.comp(sym_index(i, j))[idx] = r;
                    }
            }
    return from_spectrum(out);
}

Field antidiv_scalar(const Field& g) {
    if (g.rank != Rank::scalar)
        throw std::runtime_error("antidiv_scalar: scalar field required");
    Spectrum s = to_spectrum(g);
    Spectrum out(g.grid, Rank::vector3);
    const int n = s.grid.n;
    const int nz = s.nz();
    for (int jx = 0; jx < n; ++jx)
        for (int jy = 0; jy < n; ++jy)
            for (int jz = 0; jz < nz; ++jz) {
                const std::size_t idx = s.mode_index(jx, jy, jz);
                int ki[3] = {s.wave(jx), s.wave(jy), jz};
                for (int d = 0; d < 3; ++d)
                    if (ki[d] == n / 2) ki[d] = 0;
                const double k[3] = {double(ki[0]), double(ki[1]),
                                     double(ki[2])};
                const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if (k2 == 0.0) continue;
                const std::complex<double> gh = s.comp(0)[idx];
                const std::complex<double> I(0.0, 1.0);
                // -grad (-Lap)^{-1}: symbol -i k / |k|^2
                for (int i = 0; i < 3; ++i)
                    out.comp(i)[idx] = -I * k[i] / k2 * gh;
            }
    return from_spectrum(out);
}

namespace {

// Deterministic multi-index selection per derivative order.
std::vector<std::array<int, 3>> order_multiindices(int j) {
    std::vector<std::array<int, 3>> all;
    for (int r1 = j; r1 >= 0; --r1)
        for (int r2 = j - r1; r2 >= 0; --r2)
            all.push_back({r1, r2, j - r1 - r2});
    if (all.size() <= 84) return all;
    std::vector<std::array<int, 3>> sub;
    sub.push_back({j, 0, 0});
    sub.push_back({0, j, 0});
    sub.push_back({0, 0, j});
    const int h = j / 2;
    sub.push_back({j - h, h, 0});
    sub.push_back({0, j - h, h});
    sub.push_back({h, 0, j - h});
    const int t = j / 3;
    sub.push_back({j - 2 * t, t, t});
    return sub;
}

Field multi_derivative(const Spectrum& s0, int c, const std::array<int, 3>& r) {
    Spectrum s(s0.grid, Rank::scalar);
    std::copy(s0.comp(c), s0.comp(c) + s0.modes_per_comp(), s.comp(0));
    const int n = s.grid.n;
    const int nz = s.nz();
    const int order = r[0] + r[1] + r[2];
    std::complex<double>* sc = s.comp(0);
    for (int jx = 0; jx < n; ++jx)
        for (int jy = 0; jy < n; ++jy)
            for (int jz = 0; jz < nz; ++jz) {
                int k[3] = {s.wave(jx), s.wave(jy), jz};
                for (int d = 0; d < 3; ++d)
                    if (k[d] == n / 2 && r[d] % 2 == 1) k[d] = 0;
                double mag = 1.0;
                for (int d = 0; d < 3; ++d)
                    for (int p = 0; p < r[d]; ++p) mag *= double(k[d]);
                // i^order cycles 1, i, -1, -i
                std::complex<double> mult;
                switch (order % 4) {
                    case 0: mult = {mag, 0.0}; break;
                    case 1: mult = {0.0, mag}; break;
                    case 2: mult = {-mag, 0.0}; break;
                    default: mult = {0.0, -mag}; break;
                }
                sc[s.mode_index(jx, jy, jz)] *= mult;
            }
    return from_spectrum(s);
}

}  // namespace

Field multi_derivative_field(const Field& f, int r1, int r2, int r3) {
    if (f.rank != Rank::scalar)
        throw std::runtime_error("multi_derivative_field: scalar required");
    return multi_derivative(to_spectrum(f), 0, {r1, r2, r3});
}

Field multi_derivative_spec(const Spectrum& s, int comp, int r1, int r2,
                            int r3) {
    return multi_derivative(s, comp, {r1, r2, r3});
}

Field resample(const Field& f, int n_new) {
    if (n_new == f.grid.n) return f;
    Spectrum src = to_spectrum(f);
    Spectrum dst(GridSpec(n_new), f.rank);
    const int kmax = std::min(f.grid.n, n_new) / 2 - 1;
    for (int c = 0; c < components(f.rank); ++c) {
        const std::complex<double>* sc = src.comp(c);
        std::complex<double>* dc = dst.comp(c);
        for (int jx = 0; jx < src.grid.n; ++jx)
            for (int jy = 0; jy < src.grid.n; ++jy)
                for (int jz = 0; jz <= kmax; ++jz) {
                    const int kx = src.wave(jx), ky = src.wave(jy);
                    if (std::abs(kx) > kmax || std::abs(ky) > kmax) continue;
                    const int djx = kx >= 0 ? kx : kx + n_new;
                    const int djy = ky >= 0 ? ky : ky + n_new;
                    dc[dst.mode_index(djx, djy, jz)] =
                        sc[src.mode_index(jx, jy, jz)];
                }
    }
    return from_spectrum(dst);
}

double holder_norm(const Field& f, int N, double frac) {
    if (N < 0) return 0.0;  // notational convention for negative indices
    Spectrum s = to_spectrum(f);
    double total = 0.0;
    double frac_part = 0.0;
    const int n = f.grid.n;
    for (int j = 0; j <= N; ++j) {
        double worst = 0.0;
        for (const auto& r : order_multiindices(j)) {
            for (int c = 0; c < components(f.rank); ++c) {
                Field d = multi_derivative(s, c, r);
                worst = std::max(worst, sup_abs(d));
                if (frac > 0.0 && j == N) {
                    // nearest-neighbor difference quotients along each axis
                    const double h = f.grid.dx();
                    const double hp = std::pow(h, frac);
                    const double* df = d.comp(0);
                    for (int ax = 0; ax < 3; ++ax)
                        for (int ix = 0; ix < n; ++ix)
                            for (int iy = 0; iy < n; ++iy)
                                for (int iz = 0; iz < n; ++iz) {
                                    int jx = ix, jy = iy, jz = iz;
                                    if (ax == 0) jx = (ix + 1) % n;
                                    if (ax == 1) jy = (iy + 1) % n;
                                    if (ax == 2) jz = (iz + 1) % n;
                                    const double q =
                                        std::fabs(
                                            df[d.point_index(jx, jy, jz)] -
                                            df[d.point_index(ix, iy, iz)]) /
                                        hp;
                                    frac_part = std::max(frac_part, q);
                                }
                }
            }
        }
        total += worst;
    }
    return total + frac_part;
}

}  // namespace wf
