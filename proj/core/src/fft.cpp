#include "wildflow/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace wf {

namespace {

struct Plans {
    fftw_plan fwd = nullptr;   // r2c, out-of-place
    fftw_plan bwd = nullptr;   // c2r, out-of-place (destroys input copy)
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;
    int n = 0;
};

Plans& plans_for(int n) {
    static std::map<int, Plans> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Plans p;
    p.n = n;
    const std::size_t np = std::size_t(n) * n * n;
    const std::size_t nc = std::size_t(n) * n * (n / 2 + 1);
    p.rbuf = fftw_alloc_real(np);
    p.cbuf = fftw_alloc_complex(nc);
    p.fwd = fftw_plan_dft_r2c_3d(n, n, n, p.rbuf, p.cbuf, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_c2r_3d(n, n, n, p.cbuf, p.rbuf, FFTW_ESTIMATE);
    if (!p.fwd || !p.bwd) throw std::runtime_error("fft: plan creation failed");
    return cache.emplace(n, p).first->second;
}

}  // namespace

Spectrum to_spectrum(const Field& f) {
    Plans& p = plans_for(f.grid.n);
    Spectrum s(f.grid, f.rank);
    const std::size_t np = f.grid.points();
    const std::size_t nc = s.modes_per_comp();
    const double scale = 1.0 / double(np);
    for (int c = 0; c < components(f.rank); ++c) {
        const double* src = f.comp(c);
        for (std::size_t i = 0; i < np; ++i) p.rbuf[i] = src[i];
        fftw_execute(p.fwd);
        std::complex<double>* dst = s.comp(c);
        for (std::size_t i = 0; i < nc; ++i)
            dst[i] = std::complex<double>(p.cbuf[i][0] * scale,
                                          p.cbuf[i][1] * scale);
    }
    return s;
}

Field from_spectrum(const Spectrum& s) {
    Plans& p = plans_for(s.grid.n);
    Field f(s.grid, s.rank);
    const std::size_t np = s.grid.points();
    const std::size_t nc = s.modes_per_comp();
    for (int c = 0; c < components(s.rank); ++c) {
        const std::complex<double>* src = s.comp(c);
        for (std::size_t i = 0; i < nc; ++i) {
            p.cbuf[i][0] = src[i].real();
            p.cbuf[i][1] = src[i].imag();
        }
        fftw_execute(p.bwd);
        double* dst = f.comp(c);
        for (std::size_t i = 0; i < np; ++i) dst[i] = p.rbuf[i];
    }
    return f;
}

double l2_norm(const Field& f) {
    double s = 0.0;
    for (double v : f.a) s += v * v;
    return std::sqrt(s / double(f.grid.points()));
}

double l2_norm_spectral(const Spectrum& s) {
    const int n = s.grid.n;
    const int nz = s.nz();
    double acc = 0.0;
    for (int c = 0; c < components(s.rank); ++c) {
        const std::complex<double>* sc = s.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    // kz interior modes represent a conjugate pair
                    const double w = (jz == 0 || jz == n / 2) ? 1.0 : 2.0;
                    acc += w * std::norm(sc[s.mode_index(jx, jy, jz)]);
                }
    }
    return std::sqrt(acc);
}

}  // namespace wf
