#pragma once
/*
 * The one C^inf bump family used everywhere: frequency-space mollifier
 * plateaus, time mollification kernels, and partition-of-unity windows are
 * all built from the classic exp(-1/s) transition.
 */

#include <cmath>

namespace wf {

// h(s) = exp(-1/s) for s > 0, 0 otherwise; C^inf on the line.
inline double exp_bridge(double s) {
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

// Smooth step: 0 for u <= 0, 1 for u >= 1, strictly monotone in between.
inline double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = exp_bridge(u);
    const double b = exp_bridge(1.0 - u);
    return a / (a + b);
}

// Radial Littlewood-Paley profile: 1 on [0,1], 0 on [2,inf).
inline double lp_mollifier(double r) { return smooth_step(2.0 - r); }

// Unnormalized C^inf bump supported in (0,1).
inline double bump01_raw(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return std::exp(-1.0 / (s * (1.0 - s)));
}

// Mass of bump01_raw, computed once by a fixed-resolution quadrature so the
// normalized kernel is identical in every run.
double bump01_mass();

// Unit-mass kernel supported in (0,1).
inline double bump01(double s) { return bump01_raw(s) / bump01_mass(); }

// Derivative of bump01 (analytic, for dual-formula mollification tests).
inline double bump01_deriv(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double g = s * (1.0 - s);
    const double gp = 1.0 - 2.0 * s;
    return bump01_raw(s) * gp / (g * g) / bump01_mass();
}

}  // namespace wf
