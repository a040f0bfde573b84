#pragma once
/*
 * The parameter cascade driving the iteration.  All scales are explicit
 * powers of the frequency ladder lambda_q = floor(a^{b^q}) and the
 * amplitude ladder delta_q:
 *
 *   gamma = (b-1)^2,           nu = (1-7*alpha)/(3*alpha),
 *   deltabar_q = lambda_q^{-2 alpha},
 *   delta_0 = lambda_0^gamma,  delta_q = lambda_0^gamma deltabar_q
 *                                        lambda_1^{2 alpha}   (q >= 1).
 *
 * Each derived scale X in {i, eps, mu, l, ltemp} follows one pattern:
 *   q = 0:   X_0 = lambda_0^{x5} lambda_1^{x6}
 *   q >= 1:  X_q = lambda_q^{x1} delta_q^{x2} lambda_{q+1}^{x3}
 *                  delta_{q+1}^{x4}
 * with the exponent vectors listed in build_cascade's implementation
 * (eps additionally carries the prefactor C_eps).
 *
 * n0 = ceil(24 b/(b-1)) - 1 and h0 = ceil(8 b/(b-1)) enter only the scale
 * audits; N1 = n0 + 5 is the spatial regularity order of the noise norm.
 */

#include <string>
#include <vector>

namespace wf {

struct Cascade {
    // raw inputs
    double a = 0, b = 0, alpha = 0, delta_h = 0;
    double L = 0, T = 0, kappa = 0;
    int q_max = 0;
    // diagnostic constants (recorded, not derived)
    double C_v = 1.0, Mbar = 1.0, C1 = 0.0, C2 = 0.0;
    double C_rho = 1.0;    // prefactor of rho, possibly raised by measurement
    double inf_n0 = 0.0;   // inf over families of N0(F_R^j), from geometry

    double gamma = 0, nu = 0, C_eps = 0;
    int n0 = 0, h0 = 0, N1 = 0;

    // arrays indexed by q, length q_max + 3 so audits at q_max can see q+2
    std::vector<double> lambda, deltabar, delta;
    std::vector<double> eps, mu, l, ltemp, i_moll, rho, rho1;

    std::string manifest_block() const;  // human-readable key-value dump
};

// inf_n0 <= 0 means "caller could not supply it"; a conservative default
// is used and recorded.
Cascade build_cascade(double a, double b, double alpha, double delta_h,
                      double L, double T, double kappa, int q_max,
                      double inf_n0 = 0.0, double C_v = 1.0,
                      double Mbar = 1.0, double C_rho = 1.0);

struct AuditRow {
    std::string name;
    double lhs_log = 0, rhs_log = 0;  // natural logs, always finite
    double lhs = 0, rhs = 0;          // exp of the logs (may under/overflow)
    bool ok = false;
};

// The tracked scale inequalities at level q (never throws; desk-scale
// parameters routinely violate the asymptotic ones, which is reported).
std::vector<AuditRow> audit_scale_inequalities(const Cascade& c, int q);

}  // namespace wf
