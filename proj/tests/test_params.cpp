/*
 * Parameter-cascade oracles: the integer formulas for n0/h0, the gamma
 * exponent, the frequency ladder, piecewise q=0 branches, and the audit
 * rows (computed in log space so enormous exponents stay finite).
 */
#include <doctest.h>

#include <cmath>

#include "wildflow/cascade.hpp"

using namespace wf;

TEST_CASE("integer formulas and ladder") {
    Cascade c = build_cascade(4.0, 1.25, 0.1, 0.05, 1.01, 0.01, 0.5, 1, 0.25);
    CHECK(c.n0 == 119);
    CHECK(c.h0 == 40);
    CHECK(c.N1 == 124);
    CHECK(c.gamma == doctest::Approx(0.0625));
    CHECK(c.lambda[0] == 4.0);
    CHECK(c.lambda[1] == 5.0);
    CHECK(c.lambda[2] == 8.0);
    CHECK(c.nu == doctest::Approx((1.0 - 0.7) / 0.3));
    for (int q = 0; q + 1 < int(c.lambda.size()); ++q)
        CHECK(c.lambda[q + 1] > c.lambda[q]);
}

TEST_CASE("piecewise q=0 branch") {
    Cascade c = build_cascade(4.0, 1.25, 0.1, 0.05, 1.01, 0.01, 0.5, 2, 0.25);
    const double geo = 1.0 / std::sqrt(c.lambda[0] * c.lambda[1]);
    CHECK(c.mu[0] == doctest::Approx(geo).epsilon(1e-12));
    CHECK(c.l[0] == doctest::Approx(geo).epsilon(1e-12));
    CHECK(c.ltemp[0] == doctest::Approx(geo).epsilon(1e-12));
    CHECK(c.eps[0] == doctest::Approx(c.C_eps * geo).epsilon(1e-12));
    const double i0 = std::pow(c.lambda[0] / c.lambda[1],
                               7.0 * c.alpha / (1.0 - 2.0 * c.delta_h));
    CHECK(c.i_moll[0] == doctest::Approx(i0).epsilon(1e-12));
    // delta_q: delta_0 = lambda_0^gamma; q >= 1 uses the mollified ladder
    CHECK(c.delta[0] == doctest::Approx(std::pow(4.0, 0.0625)));
    CHECK(c.delta[1] ==
          doctest::Approx(std::pow(4.0, c.gamma) *
                          std::pow(5.0, -2.0 * c.alpha) *
                          std::pow(5.0, 2.0 * c.alpha)));
    // recomputation is bit-identical (pure functions of the inputs)
    Cascade c2 = build_cascade(4.0, 1.25, 0.1, 0.05, 1.01, 0.01, 0.5, 2, 0.25);
    CHECK(c2.mu[0] == c.mu[0]);
    CHECK(c2.rho[0] == c.rho[0]);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS(build_cascade(4.0, 1.25, 0.2, 0.05, 1.0, 1.0, 0.5, 1));
    // delta_h too large: (1/2+d)/(1/2-d) must stay below 4/3 at alpha=0.1
    CHECK_THROWS(build_cascade(4.0, 1.25, 0.1, 0.2, 1.0, 1.0, 0.5, 1));
    CHECK_NOTHROW(build_cascade(4.0, 1.25, 0.1, 0.07, 1.0, 1.0, 0.5, 1));
}

TEST_CASE("audit rows: reported, not asserted") {
    Cascade c = build_cascade(4.0, 1.25, 0.1, 0.05, 1.01, 0.01, 0.5, 1, 0.25);
    auto rows = audit_scale_inequalities(c, 0);
    CHECK(rows.size() == 6);
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.lhs_log));
        CHECK(std::isfinite(r.rhs_log));
    }
}

TEST_CASE("audit satisfied at large a") {
    // with a huge and b close to 1 the asymptotic inequalities hold
    Cascade c =
        build_cascade(1e4, 1.02, 0.1, 0.05, 1.01, 0.01, 0.5, 1, 0.25);
    auto rows = audit_scale_inequalities(c, 0);
    for (const auto& r : rows) {
        INFO(r.name);
        CHECK(r.ok);
    }
}
