#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "glwb/models.hpp"

using namespace glwb;

TEST_CASE("CIR conditional moments match the noncentral chi-square law",
          "[models][property]") {
    // V_{t+h} | V_t = v is c X with X ~ chi-square(d, lambda); its raw
    // moments are classical, giving an independent check of all three
    // conditional moments used by the variance tree.
    HestonParams p;
    p.k = 1.3;
    p.theta = 0.03;
    p.omega = 0.45;
    for (double v : {0.0001, 0.0225, 0.09})
        for (double h : {0.05, 0.5, 1.0}) {
            const double e = std::exp(-p.k * h);
            const double c = p.omega * p.omega * (1.0 - e) / (4.0 * p.k);
            const double d = 4.0 * p.k * p.theta / (p.omega * p.omega);
            const double lam = v * e / c;
            const double x1 = d + lam;
            const double x2 = x1 * x1 + 2.0 * (d + 2.0 * lam);
            const double x3 = x1 * x1 * x1 + 6.0 * x1 * (d + 2.0 * lam) +
                              8.0 * (d + 3.0 * lam);
            CirMoments m = heston_moments(p, v, h);
            CHECK(m.m1 == Catch::Approx(c * x1).epsilon(1e-12));
            CHECK(m.m2 == Catch::Approx(c * c * x2).epsilon(1e-12));
            CHECK(m.m3 == Catch::Approx(c * c * c * x3).epsilon(1e-11));
        }
}

TEST_CASE("OU transition composes over sub-steps", "[models][property]") {
    HullWhiteParams p;
    p.k = 0.8;
    const double h = 0.7, x0 = 0.4;
    double m_full, s_full;
    ou_conditional(p, x0, h, m_full, s_full);
    // Two half-steps: mean composes multiplicatively, variances add with
    // the decay of the first half.
    double m_half, s_half;
    ou_conditional(p, x0, h / 2.0, m_half, s_half);
    double m2, s2;
    ou_conditional(p, m_half, h / 2.0, m2, s2);
    const double e = std::exp(-p.k * h / 2.0);
    CHECK(m2 == Catch::Approx(m_full).epsilon(1e-13));
    CHECK(std::sqrt(s_half * s_half * e * e + s2 * s2) ==
          Catch::Approx(s_full).epsilon(1e-12));
}

TEST_CASE("joint OU/integral moments reproduce known limits",
          "[models][property]") {
    const double k = 1.2, x = 0.3, h = 0.5;
    OuJointMoments m = ou_joint_moments(k, x, h);
    double mean, sd;
    HullWhiteParams p;
    p.k = k;
    ou_conditional(p, x, h, mean, sd);
    CHECK(m.mean_x == Catch::Approx(mean).epsilon(1e-14));
    CHECK(m.var_x == Catch::Approx(sd * sd).epsilon(1e-14));
    // Var and Cov by numerical quadrature of the standard OU kernels:
    // Cov(X_h, Y) = int_0^h e^{-k(h-s)} (1 - e^{-k(h-s)})/k ... use the
    // closed alternative Cov = (1 - e^{-kh})^2 / (2k^2).
    const double e = std::exp(-k * h);
    CHECK(m.cov_xy == Catch::Approx((1.0 - e) * (1.0 - e) / (2.0 * k * k))
                          .epsilon(1e-12));
    // Small-k expansion: Var(Y) -> h^3/3, Cov -> h^2/2, Var(X) -> h.
    OuJointMoments s = ou_joint_moments(1e-6, 0.0, h);
    CHECK(s.var_y == Catch::Approx(h * h * h / 3.0).epsilon(1e-4));
    CHECK(s.cov_xy == Catch::Approx(h * h / 2.0).epsilon(1e-4));
    CHECK(s.var_x == Catch::Approx(h).epsilon(1e-4));
}

TEST_CASE("flat-curve beta integral matches quadrature", "[models][property]") {
    HullWhiteParams p;
    p.k = 1.0;
    p.omega = 0.2;
    p.curve.r0 = 0.04;
    for (auto [t0, t1] : {std::pair{0.0, 1.0}, {2.5, 3.5}, {0.0, 10.0}}) {
        // Composite Simpson with 2000 panels as the reference.
        const int n = 2000;
        double sum = 0.0, w = (t1 - t0) / n;
        for (int i = 0; i < n; ++i) {
            double a = t0 + i * w;
            sum += w / 6.0 *
                   (p.beta(a) + 4.0 * p.beta(a + w / 2.0) + p.beta(a + w));
        }
        CHECK(p.int_beta(t0, t1) == Catch::Approx(sum).epsilon(1e-9));
    }
}

TEST_CASE("pillar curve interpolates discounts and differentiates forwards",
          "[models]") {
    Curve c;
    c.r0 = 0.03;
    c.pillar_t = {0.0, 1.0, 2.0, 5.0};
    c.pillar_df = {1.0, std::exp(-0.03), std::exp(-0.07), std::exp(-0.20)};
    CHECK_FALSE(c.flat());
    CHECK(c.log_df(1.0) == Catch::Approx(-0.03).margin(1e-12));
    CHECK(c.log_df(1.5) == Catch::Approx(-0.05).margin(1e-12));
    // Forward rate on (1,2) is the slope of -log df: 0.04.
    CHECK(c.forward(1.5) == Catch::Approx(0.04).margin(1e-6));

    Curve flat;
    flat.r0 = 0.04;
    CHECK(flat.log_df(3.0) == Catch::Approx(-0.12).margin(1e-14));
    CHECK(flat.forward(7.0) == 0.04);
}
