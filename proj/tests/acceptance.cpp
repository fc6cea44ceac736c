// Acceptance gate for the GLWB pricing engine.  Each numbered criterion
// prints one PASS/FAIL line per checked cell; the exit code is the number of
// failures.  Tolerances are pinned here, next to the published reference
// values they guard.
//
// Default tier (CI): coarse configurations (mostly B for PDE, A for MC) with
// proportionally relaxed tolerances (+-3 bp for PDE fees), so the gate runs
// in tens of minutes on one core.  Set GLWB_ACCEPT_FULL=1 to rerun the
// published tables at configuration D with the full tolerances (hours).
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "glwb/reproduce.hpp"

using namespace glwb;

namespace {

struct Gate {
    int pass = 0, fail = 0;
    void report(bool ok, const std::string& label, const std::string& detail) {
        std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", label.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        (ok ? pass : fail) += 1;
    }
    void near(const std::string& label, double got, double want, double tol,
              const char* unit) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.2f %s vs %.2f +- %.2f", got, unit,
                      want, tol);
        report(std::fabs(got - want) <= tol, label, buf);
    }
    void inside(const std::string& label, double got, double lo, double hi,
                const char* unit) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.2f %s in [%.2f, %.2f]", got, unit,
                      lo, hi);
        report(got >= lo && got <= hi, label, buf);
    }
};

Gate gate;
bool full_tier = false;
MortalityTable mortality = dav2004r_65();

// Fee tolerance for PDE cells at the tier's configuration.
double pde_tol(double full_tol) { return full_tier ? full_tol : 3.0; }
ConfigLevel pde_cfg() { return full_tier ? ConfigLevel::D : ConfigLevel::B; }

// Runs one preset cell, selected within a table by method/model/rho/ratchet.
RunResult run_one(const std::string& table, Method m, ConfigLevel cfg,
                  bool heston, double rho, int ratchet) {
    auto cells = reproduce_cells(table, {cfg}, {m});
    for (const auto& c : cells) {
        if (std::holds_alternative<HestonParams>(c.model) != heston) continue;
        if (std::fabs(c.rho - rho) > 1e-9) continue;
        if (c.ratchet_every != ratchet) continue;
        return run_cell(c, mortality, 42);
    }
    throw std::logic_error("no such preset cell in " + table);
}

const double rhos[3] = {-0.5, 0.0, 0.5};

// ---------------------------------------------------------------------------
// 1. Lognormal degeneracy: zero rate volatility, flat 4% rate, 15% equity
//    volatility.  Baseline fair fees 35.51 bp (no ratchet), 64.92 bp
//    (annual ratchet).  PDE at configuration C within +-0.5 bp; MC at
//    configuration C within 1.5 standard errors.
void criterion1() {
    HullWhiteParams bs;
    bs.k = 1.0;
    bs.omega = 0.0;
    bs.sigma = 0.15;
    bs.rho = 0.0;
    bs.curve.r0 = 0.04;
    const double want[2] = {35.51, 64.92};
    for (Method m : {Method::HybridPde, Method::AdiPde, Method::HybridMc,
                     Method::StandardMc}) {
        for (int ratchet : {0, 1}) {
            CellRequest rq;
            rq.model = bs;
            rq.contract = contract_static(ratchet);
            rq.mortality = mortality;
            rq.method = m;
            rq.params = cell_params(m, ConfigLevel::C, false, false);
            CellResult r = solve_cell(rq);
            const double fee = r.fee * 1e4;
            std::string label = "1 lognormal " + method_name(m) +
                                " ratchet=" + std::to_string(ratchet);
            if (m == Method::HybridPde || m == Method::AdiPde) {
                gate.near(label, fee, want[ratchet], 0.5, "bp");
            } else {
                const double se = r.ci * 1e4 / 1.96;
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "%.2f bp vs %.2f, se %.2f bp (1.5 se bound)",
                              fee, want[ratchet], se);
                gate.report(std::fabs(fee - want[ratchet]) <= 1.5 * se, label,
                            buf);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2. Stochastic-rate static fees: hybrid-solver fees against the published
//    values and benchmark intervals.
void criterion2() {
    const double hpde_d[2][3] = {{45.72, 81.79, 111.02},
                                 {84.64, 156.96, 222.67}};
    const double bm[2][3] = {{45.81, 81.88, 111.05}, {84.71, 157.09, 222.83}};
    const double bm_ci[2][3] = {{0.12, 0.16, 0.20}, {0.14, 0.19, 0.24}};
    for (int rat = 0; rat < 2; ++rat)
        for (int i = 0; i < 3; ++i) {
            RunResult r = run_one("test1", Method::HybridPde, pde_cfg(),
                                  false, rhos[i], rat);
            char label[96];
            std::snprintf(label, sizeof label,
                          "2 hw-static hpde rho=%+.1f ratchet=%d", rhos[i],
                          rat);
            gate.near(label, r.fee_bp, hpde_d[rat][i],
                      pde_tol(1.0), "bp");
            const double slack = full_tier ? 0.0 : 3.0;
            gate.inside(std::string(label) + " benchmark", r.fee_bp,
                        bm[rat][i] - bm_ci[rat][i] - slack,
                        bm[rat][i] + bm_ci[rat][i] + slack, "bp");
        }
}

// ---------------------------------------------------------------------------
// 3. Stochastic-volatility static fees, both PDE methods.
void criterion3() {
    const double hpde_d[2][3] = {{37.01, 35.15, 32.52}, {61.66, 62.59, 62.89}};
    for (int rat = 0; rat < 2; ++rat)
        for (int i = 0; i < 3; ++i) {
            RunResult r = run_one("test2", Method::HybridPde, pde_cfg(),
                                  true, rhos[i], rat);
            char label[96];
            std::snprintf(label, sizeof label,
                          "3 sv-static hpde rho=%+.1f ratchet=%d", rhos[i],
                          rat);
            gate.near(label, r.fee_bp, hpde_d[rat][i], pde_tol(1.0), "bp");
        }
    // ADI: all cells in the full tier, the rho = -0.5 column in CI.
    for (int rat = 0; rat < 2; ++rat)
        for (int i = 0; i < (full_tier ? 3 : 1); ++i) {
            RunResult r = run_one("test2", Method::AdiPde, pde_cfg(), true,
                                  rhos[i], rat);
            char label[96];
            std::snprintf(label, sizeof label,
                          "3 sv-static apde rho=%+.1f ratchet=%d", rhos[i],
                          rat);
            gate.near(label, r.fee_bp, hpde_d[rat][i], pde_tol(1.5), "bp");
        }
}

// ---------------------------------------------------------------------------
// 4. High vol-of-vol comparison contract (4% initial fee, 151 bp management
//    fee, end-of-period fees): PDE fees near 130.8 / 117.2 bp.
void criterion4() {
    const double want[2] = {130.82, 117.19};
    for (Method m : {Method::HybridPde, Method::AdiPde})
        for (int rat = 0; rat < 2; ++rat) {
            RunResult r = run_one("test2b", m, pde_cfg(), true, -0.569, rat);
            char label[96];
            std::snprintf(label, sizeof label, "4 test2b %s ratchet=%d",
                          method_name(m).c_str(), rat);
            gate.near(label, r.fee_bp, want[rat], pde_tol(2.0), "bp");
        }
}

// ---------------------------------------------------------------------------
// 5. Delta tables at pinned fees (units of 1e-4).
void criterion5() {
    const double hw[2][3] = {{6058, 6058, 6097}, {7120, 7391, 7649}};
    const double he[2][3] = {{7875, 7797, 7717}, {8508, 8398, 8282}};
    for (int heston = 0; heston < 2; ++heston)
        for (int rat = 0; rat < 2; ++rat)
            for (int i = 0; i < (full_tier ? 3 : 1); ++i) {
                RunResult r = run_one("test3", Method::HybridPde, pde_cfg(),
                                      heston != 0, rhos[i], rat);
                char label[96];
                std::snprintf(label, sizeof label,
                              "5 delta %s hpde rho=%+.1f ratchet=%d @%g bp",
                              heston ? "sv" : "hw", rhos[i], rat,
                              r.fee_bp);
                gate.near(label, r.delta * 1e4,
                          (heston ? he : hw)[rat][i], 10.0, "x1e-4");
            }
}

// ---------------------------------------------------------------------------
// 6. Mortality stress: +10% shock lowers every static fee; shocked
//    hybrid-solver fees match the published stressed table.
void criterion6() {
    const double shocked_hw[2][3] = {{41.75, 76.18, 104.42},
                                     {75.92, 142.95, 204.24}};
    const double shocked_he[2][3] = {{33.88, 31.90, 29.25},
                                     {55.54, 55.80, 55.40}};
    const double base_hw[2][3] = {{45.72, 81.79, 111.02},
                                  {84.64, 156.96, 222.67}};
    const double base_he[2][3] = {{37.01, 35.15, 32.52},
                                  {61.66, 62.59, 62.89}};
    for (int heston = 0; heston < 2; ++heston)
        for (int rat = 0; rat < 2; ++rat)
            for (int i = 0; i < 3; ++i) {
                if (!full_tier && !(rat == 0 && (heston == 0 || i == 0)))
                    continue; // CI: the no-ratchet row plus one sv cell
                RunResult r = run_one("test4", Method::HybridPde, pde_cfg(),
                                      heston != 0, rhos[i], rat);
                char label[96];
                std::snprintf(label, sizeof label,
                              "6 stress %s hpde rho=%+.1f ratchet=%d",
                              heston ? "sv" : "hw", rhos[i], rat);
                gate.near(label, r.fee_bp,
                          (heston ? shocked_he : shocked_hw)[rat][i],
                          pde_tol(1.0), "bp");
                // The published drops range from 3.1 to 7.5 bp.
                const double drop =
                    (heston ? base_he : base_hw)[rat][i] - r.fee_bp;
                gate.inside(std::string(label) + " fee drop", drop,
                            3.1 - pde_tol(1.0), 7.5 + pde_tol(1.0), "bp");
            }
}

// ---------------------------------------------------------------------------
// 7. Dynamic (optimal withdrawal) fees: hybrid solver against the published
//    values; dynamic MC within its own interval of the benchmark.
void criterion7() {
    const double hw[2][3] = {{85.23, 172.58, 267.29}, {96.19, 186.55, 273.99}};
    const double he[2][3] = {{64.81, 61.87, 57.39}, {71.50, 68.93, 64.71}};
    const double bm_hw[2][3] = {{84.35, 169.05, 261.29},
                                {96.37, 186.53, 274.02}};
    for (int heston = 0; heston < 2; ++heston)
        for (int rat3 = 0; rat3 < 2; ++rat3)
            for (int i = 0; i < 3; ++i) {
                if (!full_tier && i != 0) continue; // CI: rho = -0.5 column
                RunResult r = run_one(heston ? "dyn2" : "dyn1",
                                      Method::HybridPde, pde_cfg(),
                                      heston != 0, rhos[i], rat3 ? 3 : 0);
                char label[96];
                std::snprintf(label, sizeof label,
                              "7 dynamic %s hpde rho=%+.1f ratchet=%d",
                              heston ? "sv" : "hw", rhos[i], rat3 ? 3 : 0);
                gate.near(label, r.fee_bp, (heston ? he : hw)[rat3][i],
                          pde_tol(2.0), "bp");
            }
    // Dynamic MC converges to the benchmark from below but must stay within
    // its own confidence interval.
    {
        ConfigLevel cfg = full_tier ? ConfigLevel::D : ConfigLevel::B;
        RunResult r = run_one("dyn1", Method::HybridMc, cfg, false, -0.5, 0);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.2f +- %.2f bp vs benchmark %.2f",
                      r.fee_bp, r.ci_bp, bm_hw[0][0]);
        gate.report(std::fabs(r.fee_bp - bm_hw[0][0]) <= r.ci_bp,
                    "7 dynamic hw hmc rho=-0.5", buf);
    }
}

// ---------------------------------------------------------------------------
// 8. Fast invariant suite (no table runs; well under a minute).
void criterion8() {
    // Tree probabilities form a simplex and match three conditional moments.
    {
        HullWhiteParams p;
        p.k = 1.0;
        Lattice lat = Lattice::hull_white(p, 40, 4.0);
        const double h = 0.1, H = std::exp(-p.k * h);
        const double K2 = (1.0 - std::exp(-2.0 * p.k * h)) / (2.0 * p.k);
        double worst = 0.0;
        for (int n = 0; n < lat.steps(); ++n)
            for (int pos = 0; pos < lat.band_size(n); ++pos) {
                const NodeTransition& t = lat.transition(n, pos);
                double s = 0, m1 = 0, m2 = 0, m3 = 0;
                for (int b = 0; b < 4; ++b) {
                    double w = lat.value(n + 1, t.succ[std::size_t(b)]);
                    s += t.p[std::size_t(b)];
                    m1 += t.p[std::size_t(b)] * w;
                    m2 += t.p[std::size_t(b)] * w * w;
                    m3 += t.p[std::size_t(b)] * w * w * w;
                }
                double mu = lat.value(n, pos) * H;
                worst = std::max({worst, std::fabs(s - 1.0),
                                  std::fabs(m1 - mu),
                                  std::fabs(m2 - mu * mu - K2),
                                  std::fabs(m3 - mu * mu * mu -
                                            3.0 * mu * K2)});
            }
        char buf[96];
        std::snprintf(buf, sizeof buf, "max moment defect %.2e", worst);
        gate.report(worst < 1e-10, "8 tree simplex and moments", buf);
    }
    // Variance tree three-moment matching.
    {
        HestonParams p;
        p.V0 = p.theta = 0.0225;
        p.k = 1.0;
        p.omega = 0.2;
        Lattice lat = Lattice::heston(p, 40, 2.0);
        double worst = 0.0;
        for (int n = 0; n < lat.steps(); ++n)
            for (int pos = 0; pos < lat.band_size(n); ++pos) {
                const NodeTransition& t = lat.transition(n, pos);
                CirMoments m =
                    heston_moments(p, lat.value(n, pos), lat.dt());
                double m1 = 0, m2 = 0, m3 = 0;
                for (int b = 0; b < 4; ++b) {
                    double w = lat.value(n + 1, t.succ[std::size_t(b)]);
                    m1 += t.p[std::size_t(b)] * w;
                    m2 += t.p[std::size_t(b)] * w * w;
                    m3 += t.p[std::size_t(b)] * w * w * w;
                }
                worst = std::max({worst, std::fabs(m1 - m.m1),
                                  std::fabs(m2 - m.m2), std::fabs(m3 - m.m3)});
            }
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "max defect %.2e (fallbacks %ld)", worst,
                      lat.fallback_count());
        gate.report(worst < 1e-10 && lat.fallback_count() == 0,
                    "8 variance-tree moments", buf);
    }
    // Zero-coupon bonds and the discounted-equity martingale.
    {
        HullWhiteParams p;
        p.k = 1.0;
        p.omega = 0.2;
        p.sigma = 0.15;
        p.rho = -0.5;
        p.curve.r0 = 0.04;
        ExactHullWhiteGenerator gen(p, 10, 1, 2024);
        std::vector<IntervalData> path(10);
        double md = 0, me = 0, vd = 0, ve = 0;
        const std::size_t n = 30000;
        for (std::size_t i = 0; i < n; ++i) {
            gen.path(i, path.data());
            double d = 1.0, e = 1.0;
            for (int y = 0; y < 10; ++y) {
                d *= path[std::size_t(y)].disc;
                e *= path[std::size_t(y)].disc * path[std::size_t(y)].ratio;
            }
            md += d;
            me += e;
            vd += d * d;
            ve += e * e;
        }
        md /= double(n);
        me /= double(n);
        double sed = std::sqrt((vd / double(n) - md * md) / double(n));
        double see = std::sqrt((ve / double(n) - me * me) / double(n));
        const double df = std::exp(p.curve.log_df(10.0));
        char buf[120];
        std::snprintf(buf, sizeof buf, "%.5f vs %.5f (se %.5f)", md, df, sed);
        gate.report(std::fabs(md - df) < 4.0 * sed, "8 zero-coupon bond", buf);
        std::snprintf(buf, sizeof buf, "%.5f vs 1 (se %.5f)", me, see);
        gate.report(std::fabs(me - 1.0) < 4.0 * see,
                    "8 discounted-equity martingale", buf);
    }
    // Forward and backward static path estimators coincide.
    {
        MortalityTable mt = gompertz_table(65, 85);
        HullWhiteParams p;
        p.k = 1.0;
        p.omega = 0.2;
        p.sigma = 0.15;
        p.rho = -0.5;
        p.curve.r0 = 0.04;
        ExactHullWhiteGenerator gen(p, mt.years(), 2, 31);
        std::vector<IntervalData> path(std::size_t(mt.years()));
        Contract c = contract_dynamic(3);
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 20; ++i) {
            gen.path(i, path.data());
            for (double g : {0.0, 1.0, 1.6}) {
                double f = static_path_value(path.data(), c, mt, 0.008, g);
                double b =
                    static_path_value_backward(path.data(), c, mt, 0.008, g);
                worst = std::max(worst, std::fabs(f - b));
            }
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "max |fwd - bwd| %.2e", worst);
        gate.report(worst < 1e-10, "8 estimator identity", buf);
    }
    // Homogeneity of degree one across the pricing methods.
    {
        MortalityTable mt = gompertz_table(65, 82);
        HullWhiteParams p;
        p.k = 1.0;
        p.omega = 0.2;
        p.sigma = 0.15;
        p.rho = -0.5;
        p.curve.r0 = 0.04;
        Contract c;
        Contract cs = c;
        const double eta = 1.3;
        cs.gross_premium *= eta;
        cs.net_premium *= eta;
        ExactHullWhiteGenerator gen(p, mt.years(), 1, 9);
        PathSource src(gen, 4000);
        double v = static_price(src, c, mt, 0.006).value;
        double vs = static_price(src, cs, mt, 0.006).value;
        gate.report(std::fabs(vs - eta * v) < 1e-10 * eta * v,
                    "8 homogeneity mc",
                    "pathwise scale invariance");
        HpdeConfig hc;
        hc.steps_per_year = 12;
        hc.grid_nodes = 200;
        HpdeEngine h1(p, c, mt, hc), h2(p, cs, mt, hc);
        double r1 = h1.price(0.006), r2 = h2.price(0.006);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.6f vs %.6f", r2, eta * r1);
        gate.report(std::fabs(r2 - eta * r1) < 1e-8 * eta * r1,
                    "8 homogeneity hybrid solver", buf);
        AdiConfig ac;
        ac.steps_per_year = 8;
        ac.a_nodes = 200;
        ac.f_nodes = 32;
        AdiEngine a1(p, c, mt, ac), a2(p, cs, mt, ac);
        double q1 = a1.price(0.006), q2 = a2.price(0.006);
        std::snprintf(buf, sizeof buf, "%.4f vs %.4f", q2, eta * q1);
        gate.report(std::fabs(q2 - eta * q1) < 2e-3 * eta * q1,
                    "8 homogeneity adi", buf);
        // Time-stepping order of the ADI scheme.
        auto price_at = [&](int spy) {
            AdiConfig k = ac;
            k.steps_per_year = spy;
            return AdiEngine(p, c, mt, k).price(0.004);
        };
        double ref = price_at(32);
        double e1 = std::fabs(price_at(4) - ref);
        double e2 = std::fabs(price_at(8) - ref);
        std::snprintf(buf, sizeof buf, "errors %.2e -> %.2e", e1, e2);
        gate.report(e2 < e1 && e1 / e2 > 1.5, "8 adi refinement order", buf);
        // Fee monotonicity.
        double prev = h1.price(0.0);
        bool mono = true;
        for (double al : {0.005, 0.01, 0.02}) {
            double x = h1.price(al);
            mono = mono && x < prev;
            prev = x;
        }
        gate.report(mono, "8 monotone fee", "price decreasing in the fee");
    }
}

// ---------------------------------------------------------------------------
// 9. Cross-method concordance on the static fee cells.
void criterion9() {
    const double base_tol = full_tier ? 1.5 : 3.0;
    for (int heston = 0; heston < 2; ++heston)
        for (int rat = 0; rat < 2; ++rat)
            for (int i = 0; i < 3; ++i) {
                if (!full_tier && !(i == 0 && rat == 0)) continue;
                std::vector<RunResult> rs;
                for (Method m : {Method::HybridMc, Method::StandardMc,
                                 Method::HybridPde, Method::AdiPde}) {
                    ConfigLevel cfg =
                        full_tier ? ConfigLevel::D
                        : (m == Method::HybridPde || m == Method::AdiPde)
                            ? ConfigLevel::B
                            : ConfigLevel::A;
                    rs.push_back(run_one(heston ? "test2" : "test1", m, cfg,
                                         heston != 0, rhos[i], rat));
                }
                for (std::size_t a = 0; a < rs.size(); ++a)
                    for (std::size_t b = a + 1; b < rs.size(); ++b) {
                        double cia = std::max(rs[a].ci_bp, 0.0);
                        double cib = std::max(rs[b].ci_bp, 0.0);
                        double tol = std::max(
                            base_tol, std::sqrt(cia * cia + cib * cib));
                        char label[128];
                        std::snprintf(label, sizeof label,
                                      "9 concordance %s rho=%+.1f ratchet=%d "
                                      "%s/%s",
                                      heston ? "sv" : "hw", rhos[i], rat,
                                      method_name(rs[a].spec.method).c_str(),
                                      method_name(rs[b].spec.method).c_str());
                        gate.near(label, rs[a].fee_bp, rs[b].fee_bp, tol,
                                  "bp");
                    }
            }
}

} // namespace

int main(int argc, char** argv) {
    const char* env = std::getenv("GLWB_ACCEPT_FULL");
    full_tier = (env && std::strcmp(env, "1") == 0);
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--full") == 0) full_tier = true;
    std::printf("acceptance tier: %s\n",
                full_tier ? "full (configuration D)" : "ci (coarse configs)");

    criterion8(); // fast invariants first: fail early on broken numerics
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion9();

    std::printf("acceptance: %d passed, %d failed\n", gate.pass, gate.fail);
    return gate.fail;
}
