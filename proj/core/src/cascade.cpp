#include "wildflow/cascade.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wf {

namespace {

struct ExpVec {
    double x1, x2, x3, x4, x5, x6;
};

// log of the scale at level q given log(lambda_q), log(delta_q) ladders
double scale_log(const ExpVec& e, int q, const std::vector<double>& llam,
                 const std::vector<double>& ldel) {
    if (q == 0) return e.x5 * llam[0] + e.x6 * llam[1];
    return e.x1 * llam[q] + e.x2 * ldel[q] + e.x3 * llam[q + 1] +
           e.x4 * ldel[q + 1];
}

}  // namespace

Cascade build_cascade(double a, double b, double alpha, double delta_h,
                      double L, double T, double kappa, int q_max,
                      double inf_n0, double C_v, double Mbar, double C_rho) {
    if (!(a > 2.0)) throw std::runtime_error("build_cascade: need a > 2");
    if (!(b > 1.0)) throw std::runtime_error("build_cascade: need b > 1");
    if (!(alpha > 0.0 && alpha < 1.0 / 7.0))
        throw std::runtime_error("build_cascade: need alpha in (0, 1/7)");
    if (q_max < 1) throw std::runtime_error("build_cascade: q_max >= 1");
    const double hratio = (0.5 + delta_h) / (0.5 - delta_h);
    const double hlimit =
        std::min((1.0 - 4.0 * alpha) / (3.0 * alpha), 4.0 / 3.0);
    if (!(delta_h > 0.0 && delta_h < 1.0 && hratio < hlimit))
        throw std::runtime_error(
            "build_cascade: delta_h violates (1/2+d)/(1/2-d) < "
            "min((1-4a)/(3a), 4/3)");

    Cascade c;
    c.a = a; c.b = b; c.alpha = alpha; c.delta_h = delta_h;
    c.L = L; c.T = T; c.kappa = kappa; c.q_max = q_max;
    c.C_v = C_v; c.Mbar = Mbar; c.C_rho = C_rho;
    c.gamma = (b - 1.0) * (b - 1.0);
    c.nu = (1.0 - 7.0 * alpha) / (3.0 * alpha);
    c.n0 = int(std::ceil(24.0 * b / (b - 1.0))) - 1;
    c.h0 = int(std::ceil(8.0 * b / (b - 1.0)));
    c.N1 = c.n0 + 5;
    if (inf_n0 <= 0.0) inf_n0 = 0.25;  // conservative seed-family fallback
    c.inf_n0 = inf_n0;
    c.C_eps = 1.0 / (C_v * Mbar + L) * std::min(0.5, inf_n0 / 6.0);

    const int len = q_max + 3;
    c.lambda.resize(len);
    c.deltabar.resize(len);
    c.delta.resize(len);
    std::vector<double> llam(len), ldel(len);
    for (int q = 0; q < len; ++q) {
        c.lambda[q] = std::floor(std::pow(a, std::pow(b, double(q))));
        llam[q] = std::log(c.lambda[q]);
        c.deltabar[q] = std::pow(c.lambda[q], -2.0 * alpha);
    }
    for (int q = 0; q < len; ++q) {
        c.delta[q] = (q == 0)
                         ? std::pow(c.lambda[0], c.gamma)
                         : std::pow(c.lambda[0], c.gamma) * c.deltabar[q] *
                               std::pow(c.lambda[1], 2.0 * alpha);
        ldel[q] = std::log(c.delta[q]);
    }

    const double nu = c.nu;
    const double minv = 1.0 / (0.5 - delta_h);
    const ExpVec ev_i{0.0, 0.0, -2.0 * minv, 3.5 * minv,
                      7.0 * alpha / (1.0 - 2.0 * delta_h),
                      -7.0 * alpha / (1.0 - 2.0 * delta_h)};
    const ExpVec ev_eps{-1.0, 0.0, -(2.0 + nu), (3.0 + 2.0 * nu) / 2.0,
                        -0.5, -0.5};
    const ExpVec ev_mu{-1.0, 0.0, -(2.0 + nu), 2.0 + nu, -0.5, -0.5};
    const ExpVec ev_l{-1.0, 0.0, -(4.0 + nu) / 2.0, (4.0 + nu) / 2.0,
                      -0.5, -0.5};
    const ExpVec ev_lt{-1.0, 0.0, -(4.0 + nu) / 2.0, (3.0 + nu) / 2.0,
                       -0.5, -0.5};

    c.i_moll.resize(len);
    c.eps.resize(len);
    c.mu.resize(len);
    c.l.resize(len);
    c.ltemp.resize(len);
    c.rho.resize(len);
    c.rho1.resize(len);
    for (int q = 0; q + 1 < len; ++q) {
        c.i_moll[q] = std::exp(scale_log(ev_i, q, llam, ldel));
        c.eps[q] = c.C_eps * std::exp(scale_log(ev_eps, q, llam, ldel));
        c.mu[q] = std::exp(scale_log(ev_mu, q, llam, ldel));
        c.l[q] = std::exp(scale_log(ev_l, q, llam, ldel));
        c.ltemp[q] = std::exp(scale_log(ev_lt, q, llam, ldel));
        c.rho[q] = C_rho * Mbar * Mbar *
                   std::pow(c.lambda[q], -c.gamma) * c.delta[q + 1] / inf_n0;
        c.rho1[q] = std::pow(c.lambda[q], -1.5 * c.gamma) *
                    std::pow(c.delta[q + 1], 1.5);
    }
    return c;
}

std::vector<AuditRow> audit_scale_inequalities(const Cascade& c, int q) {
    std::vector<AuditRow> rows;
    auto push = [&](const std::string& name, double lhs_log, double rhs_log) {
        AuditRow r;
        r.name = name;
        r.lhs_log = lhs_log;
        r.rhs_log = rhs_log;
        r.lhs = std::exp(lhs_log);
        r.rhs = std::exp(rhs_log);
        r.ok = lhs_log <= rhs_log;
        rows.push_back(r);
    };
    const double llamq = std::log(c.lambda[q]);
    const double llamq1 = std::log(c.lambda[q + 1]);
    const double ldelq = std::log(c.delta[q]);
    const double ldelq1 = std::log(c.delta[q + 1]);
    const double ldelq2 = std::log(c.delta[q + 2]);
    const double lrho = std::log(c.rho[q]);
    const double lmu = std::log(c.mu[q]);
    const double leps = std::log(c.eps[q]);
    const double ll = std::log(c.l[q]);
    const double llt = std::log(c.ltemp[q]);
    const double li = std::log(c.i_moll[q]);

    // the two lines guaranteed by the choice of n0 and h0
    push("stress_tail_n0",
         lrho - lmu + llamq + 0.5 * ldelq -
             double(c.n0 + 1) * (lmu + llamq1),
         -2.0 * c.gamma * llamq1 + 1.5 * ldelq2);
    push("current_tail_h0",
         lrho - leps + llamq + 0.5 * ldelq - double(c.h0) * (ll + llamq1),
         (-1.0 - 2.0 * c.gamma) * llamq1 + 1.5 * ldelq2 + 0.5 * ldelq1);
    push("l_below_ltemp", ll, llt);
    push("lambda_below_cutoff", llamq, -ll);
    push("moll_vs_rho", (0.5 - c.delta_h) * li, 0.5 * lrho);
    push("cutoff_gradient_vs_rho", ll + llamq + 0.5 * ldelq, 0.5 * lrho);
    return rows;
}

std::string Cascade::manifest_block() const {
    std::ostringstream os;
    os.precision(17);
    os << "a " << a << "\nb " << b << "\nalpha " << alpha << "\ndelta_h "
       << delta_h << "\nL " << L << "\nT " << T << "\nkappa " << kappa
       << "\nq_max " << q_max << "\ngamma " << gamma << "\nnu " << nu
       << "\nn0 " << n0 << "\nh0 " << h0 << "\nN1 " << N1 << "\nC_eps "
       << C_eps << "\ninf_n0 " << inf_n0 << "\nC_v " << C_v << "\nMbar "
       << Mbar << "\nC_rho " << C_rho << "\n";
    for (int q = 0; q <= q_max + 1; ++q) {
        os << "q" << q << ".lambda " << lambda[q] << "\nq" << q << ".delta "
           << delta[q] << "\nq" << q << ".eps " << eps[q] << "\nq" << q
           << ".mu " << mu[q] << "\nq" << q << ".l " << l[q] << "\nq" << q
           << ".ltemp " << ltemp[q] << "\nq" << q << ".i " << i_moll[q]
           << "\nq" << q << ".rho " << rho[q] << "\nq" << q << ".rho1 "
           << rho1[q] << "\n";
    }
    return os.str();
}

}  // namespace wf
