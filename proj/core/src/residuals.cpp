#include "wildflow/residuals.hpp"

#include <cmath>
#include <stdexcept>

#include "wildflow/fft.hpp"
#include "wildflow/spectral.hpp"

namespace wf {

Field time_derivative_sample(const std::vector<Field>& f,
                             const std::vector<double>& times,
                             std::size_t j) {
    if (f.size() != times.size() || f.size() < 3)
        throw std::runtime_error(
            "time_derivative_sample: need at least 3 snapshots");
    const double dt = times[1] - times[0];
    Field d = f[j];
    if (j == 0) {
        // (-3 f_0 + 4 f_1 - f_2) / (2 dt)
        d *= -3.0;
        d.axpy(4.0, f[1]);
        d.axpy(-1.0, f[2]);
    } else if (j + 1 == f.size()) {
        d *= 3.0;
        d.axpy(-4.0, f[j - 1]);
        d.axpy(1.0, f[j - 2]);
    } else {
        d = f[j + 1];
        d.axpy(-1.0, f[j - 1]);
    }
    d *= 1.0 / (2.0 * dt);
    return d;
}

Field momentum_residual(const ErState& st, std::size_t j) {
    const Field u = st.v[j] + st.z[j];
    Field r = time_derivative_sample(st.v, st.times, j);
    r += div_outer(u, u);
    r += grad_scalar(st.p[j]);
    r -= div_sym_tensor(st.R[j]);
    return r;
}

Field energy_residual(const ErState& st, std::size_t j) {
    const Field& v = st.v[j];
    const Field& z = st.z[j];
    const Field& R = st.R[j];
    const Field u = v + z;

    // kinetic energy density series for the time derivative
    std::vector<Field> ke(st.times.size());
    for (std::size_t i = 0; i < st.times.size(); ++i) {
        ke[i] = dot(st.v[i], st.v[i]);
        ke[i] *= 0.5;
    }
    Field lhs = time_derivative_sample(ke, st.times, j);
    lhs += advect_raw(v, st.p[j]);
    lhs += dot(v, div_outer(u, u));

    std::vector<Field> trR(st.times.size());
    for (std::size_t i = 0; i < st.times.size(); ++i)
        trR[i] = trace_of(st.R[i]);
    Field rhs = time_derivative_sample(trR, st.times, j);
    rhs += advect_raw(u, trR[j]);
    rhs *= 0.5;
    rhs += div_vector(tensor_apply(R, v));
    rhs += contract_sym_gradT(R, z);
    rhs += div_vector(st.phi[j]);
    const double eprime = st.E.deriv(st.times[j]);
    for (double& x : rhs.a) x -= eprime;

    lhs -= rhs;
    return lhs;
}

std::vector<ResidualSample> residual_report(const ErState& st) {
    if (st.times.size() < 3)
        throw std::runtime_error("residual_report: need >= 3 snapshots");
    std::vector<ResidualSample> out;
    for (std::size_t j = 0; j < st.times.size(); ++j) {
        ResidualSample s;
        s.t = st.times[j];
        const Field m = momentum_residual(st, j);
        s.mom_l2 = l2_norm(m);
        s.mom_sup = sup_abs(m);
        const Field e = energy_residual(st, j);
        s.energy_l2 = l2_norm(e);
        s.energy_sup = sup_abs(e);
        s.div_v_l2 = l2_norm(div_vector(st.v[j]));
        out.push_back(s);
    }
    return out;
}

}  // namespace wf
