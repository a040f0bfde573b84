#include "wildflow/noise.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "wildflow/bump.hpp"
#include "wildflow/fft.hpp"
#include "wildflow/spectral.hpp"

namespace wf {

namespace {

struct ModeBasis {
    int k[3];
    double sigma;
    double e1[3], e2[3];
};

// one representative per +/-k pair, 0 < |k|_inf <= k_max, fixed order
std::vector<ModeBasis> half_lattice(const NoiseSpec& spec) {
    std::vector<ModeBasis> modes;
    for (int kx = -spec.k_max; kx <= spec.k_max; ++kx)
        for (int ky = -spec.k_max; ky <= spec.k_max; ++ky)
            for (int kz = 0; kz <= spec.k_max; ++kz) {
                const bool canonical =
                    kz > 0 || (kz == 0 && (ky > 0 || (ky == 0 && kx > 0)));
                if (!canonical) continue;
                ModeBasis m;
                m.k[0] = kx; m.k[1] = ky; m.k[2] = kz;
                const double kn = std::sqrt(double(kx * kx + ky * ky + kz * kz));
                m.sigma = std::pow(kn, -spec.s_Q);
                // polarization frame orthogonal to k
                double t[3] = {0.0, 0.0, 1.0};
                if (kx == 0 && ky == 0) { t[0] = 1.0; t[2] = 0.0; }
                double e1[3] = {ky * t[2] - kz * t[1], kz * t[0] - kx * t[2],
                                kx * t[1] - ky * t[0]};
                double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] +
                                      e1[2] * e1[2]);
                for (int i = 0; i < 3; ++i) m.e1[i] = e1[i] / n1;
                double e2[3] = {ky * m.e1[2] - kz * m.e1[1],
                                kz * m.e1[0] - kx * m.e1[2],
                                kx * m.e1[1] - ky * m.e1[0]};
                double n2 = std::sqrt(e2[0] * e2[0] + e2[1] * e2[1] +
                                      e2[2] * e2[2]);
                for (int i = 0; i < 3; ++i) m.e2[i] = e2[i] / n2;
                modes.push_back(m);
            }
    return modes;
}

Field synthesize(const GridSpec& g, const std::vector<ModeBasis>& modes,
                 const std::vector<std::array<std::complex<double>, 3>>& c) {
    Spectrum s(g, Rank::vector3);
    const int n = g.n;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const int kx = modes[m].k[0], ky = modes[m].k[1], kz = modes[m].k[2];
        const int jx = kx >= 0 ? kx : kx + n;
        const int jy = ky >= 0 ? ky : ky + n;
        for (int i = 0; i < 3; ++i)
            s.comp(i)[s.mode_index(jx, jy, kz)] = c[m][i];
        if (kz == 0) {
            // kz = 0 plane stores both conjugate partners
            const int mjx = -kx >= 0 ? -kx : -kx + n;
            const int mjy = -ky >= 0 ? -ky : -ky + n;
            for (int i = 0; i < 3; ++i)
                s.comp(i)[s.mode_index(mjx, mjy, 0)] = std::conj(c[m][i]);
        }
    }
    return from_spectrum(s);
}

}  // namespace

Field NoisePath::at(double t) const {
    if (times.empty()) throw std::runtime_error("NoisePath::at: empty path");
    if (t <= times.front()) return z.front();
    if (t >= times.back()) return z.back();
    const int i = index_floor(t);
    const double w = (t - times[i]) / (times[i + 1] - times[i]);
    Field out = z[i];
    out *= (1.0 - w);
    out.axpy(w, z[i + 1]);
    return out;
}

int NoisePath::index_floor(double t) const {
    int i = int(std::floor((t - times.front()) / dt));
    if (i < 0) i = 0;
    if (i >= int(times.size()) - 1) i = int(times.size()) - 2;
    return i;
}

NoisePath sample_path(const NoiseSpec& spec) {
    GridSpec g(spec.grid_n);
    if (spec.k_max >= g.n / 2)
        throw std::runtime_error("sample_path: k_max exceeds grid Nyquist");
    const auto modes = half_lattice(spec);
    const int steps = std::max(1, int(std::llround(spec.two_T / spec.dt)));
    NoisePath path;
    path.grid = g;
    path.dt = spec.dt;
    std::vector<std::array<std::complex<double>, 3>> c(
        modes.size(), {std::complex<double>(0, 0), {0, 0}, {0, 0}});
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    path.times.push_back(0.0);
    path.z.push_back(synthesize(g, modes, c));
    const double sdt = std::sqrt(spec.dt);
    for (int s = 1; s <= steps; ++s) {
        for (std::size_t m = 0; m < modes.size(); ++m) {
            // four independent Brownian coordinates per pair: cos/sin times
            // two polarizations, each with standard deviation sigma*sqrt(2)
            const double amp = modes[m].sigma * std::sqrt(2.0) * 0.5 * sdt;
            const double d1c = gauss(rng), d1s = gauss(rng);
            const double d2c = gauss(rng), d2s = gauss(rng);
            for (int i = 0; i < 3; ++i)
                c[m][i] += amp * (std::complex<double>(d1c, -d1s) *
                                      modes[m].e1[i] +
                                  std::complex<double>(d2c, -d2s) *
                                      modes[m].e2[i]);
        }
        path.times.push_back(s * spec.dt);
        path.z.push_back(synthesize(g, modes, c));
    }
    return path;
}

double noise_q_constant(const NoiseSpec& spec) {
    double q = 0.0;
    for (const auto& m : half_lattice(spec)) q += 0.5 * 2.0 * m.sigma * m.sigma;
    return q;
}

double noise_trace_Q(const NoiseSpec& spec) {
    double tr = 0.0;
    for (const auto& m : half_lattice(spec)) tr += 4.0 * m.sigma * m.sigma;
    return tr;
}

Field mollify_at(const NoisePath& path, double i_q, double t) {
    // kernel r_i(u) = bump01(u/i)/i on u in [0, i]; weights renormalized so
    // a constant path is reproduced exactly
    const int nodes =
        std::max(17, std::min(129, 2 * int(std::ceil(i_q / path.dt)) + 1));
    const double du = i_q / (nodes - 1);
    double wsum = 0.0;
    std::vector<double> w(nodes);
    for (int j = 0; j < nodes; ++j) {
        const double trap = (j == 0 || j == nodes - 1) ? 0.5 : 1.0;
        w[j] = trap * bump01(double(j) / (nodes - 1));
        wsum += w[j];
    }
    Field acc(path.grid, Rank::vector3);
    for (int j = 0; j < nodes; ++j) {
        if (w[j] == 0.0) continue;
        acc.axpy(w[j] / wsum, path.at(t - j * du));
    }
    return acc;
}

NoisePath mollify_path(const NoisePath& path, double i_q) {
    if (i_q <= path.dt) {
        std::fprintf(stderr,
                     "mollify_path: i_q = %g not resolvable at dt = %g, "
                     "returning path unchanged\n",
                     i_q, path.dt);
        return path;
    }
    NoisePath out;
    out.grid = path.grid;
    out.dt = path.dt;
    out.times = path.times;
    out.z.reserve(path.z.size());
    for (double t : path.times) out.z.push_back(mollify_at(path, i_q, t));
    return out;
}

namespace {

// reduced multi-index set: exact low orders, representatives high up
std::vector<std::array<int, 3>> reduced_ops(int N1) {
    std::vector<int> orders = {0, 1, 2, 3, 4, 6, 8};
    for (int j : {16, 32, 64, 96})
        if (j < N1) orders.push_back(j);
    if (N1 > 8) orders.push_back(N1);
    std::vector<std::array<int, 3>> ops;
    for (int j : orders) {
        if (j > N1) continue;
        if ((j + 1) * (j + 2) / 2 <= 10) {
            for (int r1 = j; r1 >= 0; --r1)
                for (int r2 = j - r1; r2 >= 0; --r2)
                    ops.push_back({r1, r2, j - r1 - r2});
        } else {
            const int h = j / 2, t = j / 3;
            ops.push_back({j, 0, 0});
            ops.push_back({0, j, 0});
            ops.push_back({0, 0, j});
            ops.push_back({j - h, h, 0});
            ops.push_back({0, j - h, h});
            ops.push_back({h, 0, j - h});
            ops.push_back({j - 2 * t, t, t});
        }
    }
    return ops;
}

// All reduced derivatives of one sample, materialized once (one inverse
// transform per op and component); the difference-quotient loop then
// works on cached grid values with no transforms at all.
std::vector<Field> deriv_stack(const Field& f,
                               const std::vector<std::array<int, 3>>& ops) {
    Spectrum s = to_spectrum(f);
    std::vector<Field> out;
    out.reserve(ops.size() * components(f.rank));
    for (const auto& r : ops)
        for (int c = 0; c < components(f.rank); ++c)
            out.push_back(multi_derivative_spec(s, c, r[0], r[1], r[2]));
    return out;
}

// sum over derivative orders of the worst sup; b == nullptr measures the
// stack itself, otherwise the difference of two stacks
double stack_cn(const std::vector<Field>& a, const std::vector<Field>* b,
                const std::vector<std::array<int, 3>>& ops, int comps) {
    double acc = 0.0;
    int cur_order = -1;
    double cur_max = 0.0;
    std::size_t i = 0;
    for (const auto& r : ops) {
        const int order = r[0] + r[1] + r[2];
        if (order != cur_order) {
            acc += cur_max;
            cur_max = 0.0;
            cur_order = order;
        }
        for (int c = 0; c < comps; ++c, ++i) {
            if (!b) {
                cur_max = std::max(cur_max, sup_abs(a[i]));
            } else {
                const auto& x = a[i].a;
                const auto& y = (*b)[i].a;
                double m = 0.0;
                for (std::size_t p = 0; p < x.size(); ++p)
                    m = std::max(m, std::abs(x[p] - y[p]));
                cur_max = std::max(cur_max, m);
            }
        }
    }
    return acc + cur_max;
}

// shared driver: fills norm[j] one sample at a time, keeping a rolling
// window of derivative stacks; stops early once `stop_at` is reached
// (stopping-time queries never need samples past the threshold)
std::vector<double> running_norm_impl(const NoisePath& path, double delta_h,
                                      int N1, int window, double stop_at) {
    const auto ops = reduced_ops(N1);
    const int M = int(path.z.size());
    // evaluate on a grid just resolving the band (exact for band-limited z)
    int kc = 0;
    for (int j : {0, M / 2, M - 1}) kc = std::max(kc, band_content(path.z[j]));
    int n_eval = std::max(8, 2 * kc + 4);
    if (n_eval % 2) ++n_eval;
    n_eval = std::min(n_eval, path.grid.n);
    const int comps = components(path.z.front().rank);

    const double hexp = 0.5 - delta_h;
    std::vector<double> norm;
    norm.reserve(M);
    std::vector<std::vector<Field>> ring(window + 1);
    double amax = 0.0, qmax = 0.0;
    for (int j = 0; j < M; ++j) {
        ring[j % (window + 1)] = deriv_stack(resample(path.z[j], n_eval), ops);
        const auto& cur = ring[j % (window + 1)];
        amax = std::max(amax, stack_cn(cur, nullptr, ops, comps));
        for (int j1 = std::max(0, j - window); j1 < j; ++j1) {
            const double dtpow =
                std::pow(path.times[j] - path.times[j1], hexp);
            qmax = std::max(
                qmax,
                stack_cn(cur, &ring[j1 % (window + 1)], ops, comps) / dtpow);
        }
        norm.push_back(amax + qmax);
        if (norm.back() >= stop_at) break;
    }
    return norm;
}

}  // namespace

std::vector<double> running_holder_norm(const NoisePath& path, double delta_h,
                                        int N1, int window) {
    return running_norm_impl(path, delta_h, N1, window,
                             std::numeric_limits<double>::infinity());
}

double stopping_time(const NoisePath& path, double L, double delta_h, int N1,
                     double T, int window) {
    (void)T;
    const auto norm = running_norm_impl(path, delta_h, N1, window, L);
    if (!norm.empty() && norm.back() >= L)
        return path.times[norm.size() - 1];
    return path.times.back();  // = 2T: threshold never reached
}

}  // namespace wf
