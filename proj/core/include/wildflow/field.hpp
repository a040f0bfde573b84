#pragma once
/*
 * Real fields on the periodic torus T^3 = [0,2pi)^3, sampled on a uniform
 * n^3 grid, together with their Fourier-side representation.
 *
 * Storage is component-major: component c, then x, then y, then z (z is the
 * fastest index), matching the snapshot file layout.  Symmetric 3x3 tensors
 * keep six components in the order xx, yy, zz, xy, xz, yz, so symmetry holds
 * exactly by construction.
 */

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace wf {

struct GridSpec {
    int n = 0;  // points per axis, even, >= 8; period is 2*pi per axis

    GridSpec() = default;
    explicit GridSpec(int n_per_axis) : n(n_per_axis) {
        if (n < 8 || n % 2 != 0)
            throw std::runtime_error("GridSpec: n must be even and >= 8");
    }
    std::size_t points() const { return std::size_t(n) * n * n; }
    double dx() const;
    bool operator==(const GridSpec& o) const { return n == o.n; }
    bool operator!=(const GridSpec& o) const { return n != o.n; }
};

enum class Rank { scalar = 1, vector3 = 3, sym3x3 = 6 };

inline int components(Rank r) { return static_cast<int>(r); }

// Index of the (i,j) entry of a symmetric tensor in the 6-component storage.
inline int sym_index(int i, int j) {
    if (i == j) return i;
    int a = i < j ? i : j, b = i < j ? j : i;
    if (a == 0) return b == 1 ? 3 : 4;
    return 5;  // (1,2)
}

struct Field {
    GridSpec grid;
    Rank rank = Rank::scalar;
    std::vector<double> a;

    Field() = default;
    Field(GridSpec g, Rank r)
        : grid(g), rank(r), a(g.points() * components(r), 0.0) {}

    std::size_t point_index(int ix, int iy, int iz) const {
        return (std::size_t(ix) * grid.n + iy) * grid.n + iz;
    }
    double* comp(int c) { return a.data() + std::size_t(c) * grid.points(); }
    const double* comp(int c) const {
        return a.data() + std::size_t(c) * grid.points();
    }
    double& at(int c, int ix, int iy, int iz) {
        return comp(c)[point_index(ix, iy, iz)];
    }
    double at(int c, int ix, int iy, int iz) const {
        return comp(c)[point_index(ix, iy, iz)];
    }

    void check_same_layout(const Field& o, const char* who) const {
        if (grid != o.grid || rank != o.rank)
            throw std::runtime_error(std::string(who) +
                                     ": mismatched grid or rank");
    }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);
    Field& axpy(double s, const Field& o);  // this += s*o
};

Field operator+(Field x, const Field& y);
Field operator-(Field x, const Field& y);
Field operator*(double s, Field x);

// Fourier coefficients in the real-to-complex half layout: per component,
// kx,ky run over the full signed range (stored at indices 0..n-1) and kz
// over 0..n/2.  Coefficients are normalized so that
//   f(x) = sum_k c_k exp(i k.x).
struct Spectrum {
    GridSpec grid;
    Rank rank = Rank::scalar;
    std::vector<std::complex<double>> c;

    Spectrum() = default;
    Spectrum(GridSpec g, Rank r)
        : grid(g), rank(r),
          c(std::size_t(g.n) * g.n * (g.n / 2 + 1) * components(r)) {}

    int nz() const { return grid.n / 2 + 1; }
    std::size_t modes_per_comp() const {
        return std::size_t(grid.n) * grid.n * nz();
    }
    std::complex<double>* comp(int cc) {
        return c.data() + cc * modes_per_comp();
    }
    const std::complex<double>* comp(int cc) const {
        return c.data() + cc * modes_per_comp();
    }
    std::size_t mode_index(int jx, int jy, int jz) const {
        return (std::size_t(jx) * grid.n + jy) * nz() + jz;
    }
    // signed wavenumber for a storage index along a full axis
    int wave(int j) const { return j <= grid.n / 2 ? j : j - grid.n; }
};

// Pointwise linear algebra on fields.  These are grid-ring operations:
// every polynomial identity among them holds exactly on sampled values.
Field pointwise_mul(const Field& s, const Field& f);   // scalar times any rank
Field dot(const Field& u, const Field& v);             // vector . vector
Field sym_outer(const Field& u, const Field& v);       // u(x)v + v(x)u
Field outer_self(const Field& u);                      // u(x)u
Field ring_outer(const Field& u, const Field& v);      // sym_outer - (2/3)(u.v) Id
Field ring_outer_self(const Field& u);                 // u(x)u - (|u|^2/3) Id
Field tensor_apply(const Field& R, const Field& v);    // sym3x3 . vector
Field trace_of(const Field& R);                        // sym3x3 -> scalar
void add_id_times(Field& R, const Field& s, double factor = 1.0);
void add_id_times(Field& R, double s);
double field_min(const Field& f);
double field_max_abs(const Field& f);
double mean_component(const Field& f, int c);

}  // namespace wf
