#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "glwb/solver.hpp"

using namespace glwb;

namespace {

HullWhiteParams hw_params(double rho = -0.5) {
    HullWhiteParams p;
    p.k = 1.0;
    p.omega = 0.2;
    p.sigma = 0.15;
    p.rho = rho;
    p.curve.r0 = 0.04;
    return p;
}

} // namespace

TEST_CASE("secant iteration solves a monotone pricing-like function",
          "[solver]") {
    // price(a) = 104 e^{-20a}: root of price = 100 at ln(1.04)/20.
    auto price = [](double a) { return 104.0 * std::exp(-20.0 * a); };
    const double root = std::log(1.04) / 20.0;
    FeeSolveResult r = solve_fee(price, 100.0);
    CHECK(std::fabs(price(r.alpha_g) - 100.0) < 0.1); // solver tolerance
    CHECK(r.alpha_g == Catch::Approx(root).margin(1e-5));
    CHECK(r.slope < 0.0);
    CHECK(r.iterations <= 10);
}

TEST_CASE("staged solve lands on the fine root despite a biased warm-up",
          "[solver]") {
    auto fine = [](double a) { return 104.0 * std::exp(-20.0 * a); };
    auto coarse = [&](double a) { return fine(a) + 0.4; }; // biased pricer
    const double root = std::log(1.04) / 20.0;
    FeeSolveResult r = solve_fee_staged(coarse, fine, 100.0);
    CHECK(r.alpha_g == Catch::Approx(root).margin(1e-5));
    CHECK(std::fabs(fine(r.alpha_g) - 100.0) < 0.1);
}

TEST_CASE("resolution ladders are monotone across configurations",
          "[solver]") {
    for (bool heston : {false, true})
        for (bool dynamic : {false, true})
            for (Method m : {Method::HybridMc, Method::StandardMc,
                             Method::HybridPde, Method::AdiPde}) {
                CellParams prev;
                for (int i = 0; i < 4; ++i) {
                    CellParams p = cell_params(m, ConfigLevel(i), heston,
                                               dynamic);
                    CHECK(p.steps_per_year >= 1);
                    if (i > 0) {
                        CHECK(p.steps_per_year >= prev.steps_per_year);
                        CHECK(p.paths >= prev.paths);
                        CHECK(p.space_nodes >= prev.space_nodes);
                        CHECK(p.factor_nodes >= prev.factor_nodes);
                    }
                    prev = p;
                }
            }
    // Spot values.
    CellParams d = cell_params(Method::HybridPde, ConfigLevel::D, false, false);
    CHECK(d.steps_per_year == 200);
    CHECK(d.space_nodes == 2000);
    CellParams a = cell_params(Method::HybridMc, ConfigLevel::A, true, false);
    CHECK(a.steps_per_year == 5);
    CHECK(a.paths == 86000);
}

TEST_CASE("cell calibration hits the net premium", "[solver]") {
    CellRequest rq;
    rq.model = hw_params();
    rq.contract = Contract{};
    rq.mortality = gompertz_table(65, 85);
    rq.method = Method::HybridPde;
    rq.params = cell_params(Method::HybridPde, ConfigLevel::A, false, false);
    CellResult r = solve_cell(rq);
    CHECK(r.fee > 0.0);
    CHECK(r.fee < 0.02);
    CHECK(r.value == Catch::Approx(rq.contract.net_premium).margin(0.15));
    CHECK(r.ci == 0.0); // deterministic method: no sampling interval

    // The initial-fee variant calibrates to the net premium, not the gross.
    CellRequest rk = rq;
    rk.contract.net_premium = 96.0;
    rk.contract.base0 = 100.0;
    CellResult k = solve_cell(rk);
    CHECK(k.value == Catch::Approx(96.0).margin(0.15));
}

TEST_CASE("Monte Carlo cells report a fee interval", "[solver]") {
    CellRequest rq;
    rq.model = hw_params();
    rq.contract = Contract{};
    rq.mortality = gompertz_table(65, 85);
    rq.method = Method::HybridMc;
    rq.params.steps_per_year = 4;
    rq.params.paths = 20000;
    CellResult r = solve_cell(rq);
    CHECK(r.ci > 0.0);
    CHECK(r.ci < 0.002);
    CHECK(r.value == Catch::Approx(100.0).margin(0.3));

    // Same seed, same answer.
    CellResult r2 = solve_cell(rq);
    CHECK(r2.fee == r.fee);
}

TEST_CASE("common random numbers stabilize the Delta",
          "[solver][property]") {
    MortalityTable mt = gompertz_table(65, 85);
    HullWhiteParams p = hw_params();
    Contract c;
    const double alpha = 0.005, bump = 0.01;
    const double h = bump * c.net_premium;
    std::vector<double> crn, indep;
    for (std::uint64_t s = 0; s < 8; ++s) {
        ExactHullWhiteGenerator g1(p, mt.years(), 1, 1000 + s);
        ExactHullWhiteGenerator g2(p, mt.years(), 1, 2000 + s);
        PathSource src1(g1, 4000), src2(g2, 4000);
        double up = static_price(src1, c, mt, alpha, 1.0, 1.0 + bump).value;
        double dn = static_price(src1, c, mt, alpha, 1.0, 1.0 - bump).value;
        crn.push_back((up - dn) / (2.0 * h));
        double dn2 = static_price(src2, c, mt, alpha, 1.0, 1.0 - bump).value;
        indep.push_back((up - dn2) / (2.0 * h));
    }
    auto variance = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= double(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / double(v.size() - 1);
    };
    CHECK(variance(indep) > 10.0 * variance(crn));
}

TEST_CASE("Delta is positive and below one for an at-the-money rider",
          "[solver]") {
    CellRequest rq;
    rq.model = hw_params();
    rq.contract = Contract{};
    rq.mortality = gompertz_table(65, 85);
    rq.method = Method::HybridPde;
    rq.params = cell_params(Method::HybridPde, ConfigLevel::A, false, false);
    double delta = cell_delta(rq, 0.0050, 0.01);
    CHECK(delta > 0.3);
    CHECK(delta < 1.0);
}
