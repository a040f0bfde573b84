#pragma once
/*
 * The relaxed Euler state carried through the iteration: snapshots of
 * (v, p, R, phi, z) on one shared time grid, plus the prescribed energy
 * loss profile E.  The tuple is meant to satisfy, up to discretization,
 *     d_t v + div((v+z)(x)(v+z)) + grad p = div R,   div v = 0,
 * together with the local energy balance whose defect is carried by the
 * current phi and the rate -E'.
 */

#include <vector>

#include "wildflow/field.hpp"

namespace wf {

// Prescribed energy loss E(t), C^1; the table form is linearly
// interpolated with E' piecewise constant, extended constantly outside
// the node range (matching the t < 0 convention of the noise path).
struct EnergyProfile {
    enum class Form { constant, linear, table };
    Form form = Form::constant;
    double a0 = 0.0, a1 = 0.0;         // constant value / linear a0 + a1 t
    std::vector<double> tab_t, tab_e;  // table nodes, strictly increasing

    double value(double t) const;
    double deriv(double t) const;

    static EnergyProfile constant(double e);
    static EnergyProfile linear(double e0, double slope);
};

struct ErState {
    int q = 0;
    GridSpec grid;
    std::vector<double> times;
    std::vector<Field> v;    // vector, divergence free
    std::vector<Field> p;    // scalar; mean fixed to the mean of |z|^2/3
    std::vector<Field> R;    // sym3x3 stress
    std::vector<Field> phi;  // vector current
    std::vector<Field> z;    // vector, the mollified noise at this level
    EnergyProfile E;
};

/*
 * Level-0 tuple from the mollified noise samples z0:
 *     v = 0,
 *     p = -|z0|^2/3 + const,
 *     R = z0 (x) z0 - (|z0|^2/3) Id + (2E/3) Id,
 *     phi = -(|z0|^2/2) z0.
 * With v = 0 the momentum line reads div(z0 (x) z0) + grad p = div R and
 * the traceless product leaves exactly grad p = -grad(|z0|^2/3), which
 * fixes the sign of p up to a constant; the constant is chosen so the
 * mean of p equals the mean of |z0|^2/3 (the convention preserved by the
 * later pressure increments).  The energy line closes exactly:
 * Tr R = 2E gives (1/2) D_t Tr R = E' against -E', and R : grad z0^T
 * equals div((|z0|^2/2) z0) = -div phi pointwise for divergence-free z0.
 */
ErState init_state(const std::vector<double>& times,
                   const std::vector<Field>& z0, const EnergyProfile& E);

}  // namespace wf
