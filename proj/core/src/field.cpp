#include "wildflow/field.hpp"

#include <cmath>
#include <numbers>

namespace wf {

double GridSpec::dx() const { return 2.0 * std::numbers::pi / n; }

Field& Field::operator+=(const Field& o) {
    check_same_layout(o, "Field::operator+=");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    check_same_layout(o, "Field::operator-=");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : a) v *= s;
    return *this;
}

Field& Field::axpy(double s, const Field& o) {
    check_same_layout(o, "Field::axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * o.a[i];
    return *this;
}

Field operator+(Field x, const Field& y) { return x += y; }
Field operator-(Field x, const Field& y) { return x -= y; }
Field operator*(double s, Field x) { return x *= s; }

static void want(bool ok, const char* msg) {
    if (!ok) throw std::runtime_error(msg);
}

Field pointwise_mul(const Field& s, const Field& f) {
    want(s.rank == Rank::scalar && s.grid == f.grid,
         "pointwise_mul: scalar field and matching grid required");
    Field out(f.grid, f.rank);
    const std::size_t np = f.grid.points();
    for (int c = 0; c < components(f.rank); ++c) {
        const double* sf = s.comp(0);
        const double* ff = f.comp(c);
        double* of = out.comp(c);
        for (std::size_t i = 0; i < np; ++i) of[i] = sf[i] * ff[i];
    }
    return out;
}

Field dot(const Field& u, const Field& v) {
    want(u.rank == Rank::vector3 && v.rank == Rank::vector3 && u.grid == v.grid,
         "dot: two vector fields required");
    Field out(u.grid, Rank::scalar);
    const std::size_t np = u.grid.points();
    double* of = out.comp(0);
    for (int c = 0; c < 3; ++c) {
        const double* uf = u.comp(c);
        const double* vf = v.comp(c);
        for (std::size_t i = 0; i < np; ++i) of[i] += uf[i] * vf[i];
    }
    return out;
}

Field sym_outer(const Field& u, const Field& v) {
    want(u.rank == Rank::vector3 && v.rank == Rank::vector3 && u.grid == v.grid,
         "sym_outer: two vector fields required");
    Field out(u.grid, Rank::sym3x3);
    const std::size_t np = u.grid.points();
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double* ui = u.comp(i);
            const double* uj = u.comp(j);
            const double* vi = v.comp(i);
            const double* vj = v.comp(j);
            double* of = out.comp(sym_index(i, j));
            for (std::size_t p = 0; p < np; ++p)
                of[p] = ui[p] * vj[p] + uj[p] * vi[p];
        }
    return out;
}

Field outer_self(const Field& u) {
    want(u.rank == Rank::vector3, "outer_self: vector field required");
    Field out(u.grid, Rank::sym3x3);
    const std::size_t np = u.grid.points();
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double* ui = u.comp(i);
            const double* uj = u.comp(j);
            double* of = out.comp(sym_index(i, j));
            for (std::size_t p = 0; p < np; ++p) of[p] = ui[p] * uj[p];
        }
    return out;
}

Field ring_outer(const Field& u, const Field& v) {
    Field out = sym_outer(u, v);
    Field d = dot(u, v);
    add_id_times(out, d, -2.0 / 3.0);
    return out;
}

Field ring_outer_self(const Field& u) {
    Field out = outer_self(u);
    Field d = dot(u, u);
    add_id_times(out, d, -1.0 / 3.0);
    return out;
}

Field tensor_apply(const Field& R, const Field& v) {
    want(R.rank == Rank::sym3x3 && v.rank == Rank::vector3 && R.grid == v.grid,
         "tensor_apply: sym3x3 and vector fields required");
    Field out(R.grid, Rank::vector3);
    const std::size_t np = R.grid.points();
    for (int i = 0; i < 3; ++i) {
        double* of = out.comp(i);
        for (int j = 0; j < 3; ++j) {
            const double* rf = R.comp(sym_index(i, j));
            const double* vf = v.comp(j);
            for (std::size_t p = 0; p < np; ++p) of[p] += rf[p] * vf[p];
        }
    }
    return out;
}

Field trace_of(const Field& R) {
    want(R.rank == Rank::sym3x3, "trace_of: sym3x3 field required");
    Field out(R.grid, Rank::scalar);
    const std::size_t np = R.grid.points();
    double* of = out.comp(0);
    for (int i = 0; i < 3; ++i) {
        const double* rf = R.comp(i);
        for (std::size_t p = 0; p < np; ++p) of[p] += rf[p];
    }
    return out;
}

void add_id_times(Field& R, const Field& s, double factor) {
    want(R.rank == Rank::sym3x3 && s.rank == Rank::scalar && R.grid == s.grid,
         "add_id_times: sym3x3 and scalar fields required");
    const std::size_t np = R.grid.points();
    const double* sf = s.comp(0);
    for (int i = 0; i < 3; ++i) {
        double* rf = R.comp(i);
        for (std::size_t p = 0; p < np; ++p) rf[p] += factor * sf[p];
    }
}

void add_id_times(Field& R, double s) {
    want(R.rank == Rank::sym3x3, "add_id_times: sym3x3 field required");
    const std::size_t np = R.grid.points();
    for (int i = 0; i < 3; ++i) {
        double* rf = R.comp(i);
        for (std::size_t p = 0; p < np; ++p) rf[p] += s;
    }
}

double field_min(const Field& f) {
    double m = f.a.empty() ? 0.0 : f.a[0];
    for (double v : f.a) m = std::min(m, v);
    return m;
}

double field_max_abs(const Field& f) {
    double m = 0.0;
    for (double v : f.a) m = std::max(m, std::fabs(v));
    return m;
}

double mean_component(const Field& f, int c) {
    const std::size_t np = f.grid.points();
    const double* ff = f.comp(c);
    double s = 0.0;
    for (std::size_t i = 0; i < np; ++i) s += ff[i];
    return s / double(np);
}

}  // namespace wf
