// solver.hpp -- fair-fee calibration and table-cell orchestration: the
// secant solver (with a coarse-resolution warm-up phase), central-difference
// Deltas, the per-method resolution ladders (configurations A-D), and
// helpers that assemble a pricer for a (model, contract, method) cell.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <variant>

#include "contract.hpp"
#include "models.hpp"
#include "mortality.hpp"
#include "pde_adi.hpp"
#include "pde_hybrid.hpp"
#include "scenarios.hpp"
#include "valuation_mc.hpp"

namespace glwb {

enum class Method { HybridMc, StandardMc, HybridPde, AdiPde };
enum class ConfigLevel { A = 0, B = 1, C = 2, D = 3 };

struct SolverConfig {
    double alpha_lo = 0.0;
    double alpha_hi = 0.02; // 200 bp
    double tolerance = 1e-4 * 100.0; // |V - target|, price units (~0.1 bp)
    int max_iterations = 20;
    int fine_iterations = 3; // final iterations at full resolution
};

struct FeeSolveResult {
    double alpha_g = 0.0;
    double value = 0.0;     // price at the solution
    double slope = 0.0;     // dV/d(alpha) estimate from the last step
    int iterations = 0;
};

// Secant iteration for price(alpha) = target.  The price function is assumed
// decreasing in alpha; no bracketing is enforced.
template <typename PriceFn>
FeeSolveResult solve_fee(PriceFn&& price, double target,
                         const SolverConfig& cfg = {}) {
    double a0 = cfg.alpha_lo, a1 = cfg.alpha_hi;
    double f0 = price(a0) - target, f1 = price(a1) - target;
    FeeSolveResult res;
    res.iterations = 2;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        if (f1 == f0) break;
        double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        if (a2 < -0.01) a2 = -0.01;
        if (a2 > 0.1) a2 = 0.1;
        a0 = a1;
        f0 = f1;
        a1 = a2;
        f1 = price(a1) - target;
        ++res.iterations;
        if (std::fabs(f1) < cfg.tolerance) break;
    }
    res.alpha_g = a1;
    res.value = f1 + target;
    res.slope = (a1 != a0) ? (f1 - f0) / (a1 - a0) : 0.0;
    return res;
}

// Two-stage secant: iterate on the cheap coarse pricer until the step is
// small, then polish with the full-resolution pricer for fine_iterations.
template <typename CoarseFn, typename FineFn>
FeeSolveResult solve_fee_staged(CoarseFn&& coarse, FineFn&& fine,
                                double target, const SolverConfig& cfg = {}) {
    SolverConfig ccfg = cfg;
    ccfg.tolerance = 10.0 * cfg.tolerance;
    ccfg.max_iterations = cfg.max_iterations - cfg.fine_iterations;
    FeeSolveResult warm = solve_fee(coarse, target, ccfg);

    // Polish: restart the secant at the warm solution with a small spread.
    double a0 = warm.alpha_g, a1 = warm.alpha_g + 1e-4;
    double f0 = fine(a0) - target;
    if (std::fabs(f0) < cfg.tolerance) {
        FeeSolveResult res;
        res.alpha_g = a0;
        res.value = f0 + target;
        res.slope = warm.slope;
        res.iterations = warm.iterations + 1;
        return res;
    }
    double f1 = fine(a1) - target;
    FeeSolveResult res;
    res.iterations = warm.iterations + 2;
    for (int it = 0; it < cfg.fine_iterations; ++it) {
        if (f1 == f0) break;
        double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1;
        f0 = f1;
        a1 = a2;
        f1 = fine(a1) - target;
        ++res.iterations;
        if (std::fabs(f1) < cfg.tolerance) break;
    }
    res.alpha_g = a1;
    res.value = f1 + target;
    res.slope = (a1 != a0) ? (f1 - f0) / (a1 - a0) : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Resolution ladders (configurations A-D) per method and model family.

struct CellParams {
    int steps_per_year = 1;   // simulation or PDE time steps per year
    std::size_t paths = 0;    // MC only
    int space_nodes = 0;      // PDE account-direction nodes
    int factor_nodes = 0;     // ADI factor-direction nodes
    int ls_degree = 0;        // dynamic MC regression degree
};

inline CellParams cell_params(Method m, ConfigLevel lvl, bool heston,
                              bool dynamic) {
    const int i = int(lvl);
    CellParams p;
    switch (m) {
        case Method::HybridMc: {
            static const int spy[4] = {5, 10, 20, 40};
            p.steps_per_year = spy[i];
            if (!dynamic) {
                static const double hw[4] = {1.3e5, 2.3e5, 5.4e5, 1.0e6};
                static const double he[4] = {8.6e4, 1.6e5, 3.8e5, 7.3e5};
                p.paths = std::size_t((heston ? he : hw)[i]);
            } else {
                static const double hw[4] = {3.3e3, 1.6e4, 5.2e4, 1.4e5};
                static const double he[4] = {3.2e3, 1.5e4, 4.9e4, 1.3e5};
                p.paths = std::size_t((heston ? he : hw)[i]);
                p.ls_degree = 2 + i;
            }
            break;
        }
        case Method::StandardMc: {
            if (!dynamic) {
                if (heston) {
                    static const int spy[4] = {5, 10, 20, 40};
                    static const double n[4] = {7.4e4, 1.4e5, 3.5e5, 7.5e5};
                    p.steps_per_year = spy[i];
                    p.paths = std::size_t(n[i]);
                } else {
                    static const double n[4] = {2.7e5, 9.8e5, 4.9e6, 2.0e7};
                    p.steps_per_year = 1;
                    p.paths = std::size_t(n[i]);
                }
            } else {
                if (heston) {
                    static const int spy[4] = {5, 10, 20, 40};
                    static const double n[4] = {3.2e3, 1.5e4, 4.9e4, 1.3e5};
                    p.steps_per_year = spy[i];
                    p.paths = std::size_t(n[i]);
                } else {
                    static const double n[4] = {3.2e3, 1.6e4, 5.3e4, 1.6e5};
                    p.steps_per_year = 5;
                    p.paths = std::size_t(n[i]);
                }
                p.ls_degree = 2 + i;
            }
            break;
        }
        case Method::HybridPde: {
            static const int spy_hw[4] = {30, 60, 100, 200};
            static const int spy_he[4] = {35, 70, 100, 200};
            static const int nodes[4] = {400, 600, 1000, 2000};
            p.steps_per_year = (heston ? spy_he : spy_hw)[i];
            p.space_nodes = nodes[i];
            break;
        }
        case Method::AdiPde: {
            if (!dynamic) {
                if (heston) {
                    static const int spy[4] = {26, 40, 64, 104};
                    static const int fn[4] = {13, 20, 32, 52};
                    p.steps_per_year = spy[i];
                    p.space_nodes = 10 * spy[i];
                    p.factor_nodes = fn[i];
                } else {
                    static const int spy[4] = {18, 27, 40, 62};
                    static const int fn[4] = {36, 54, 80, 124};
                    p.steps_per_year = spy[i];
                    p.space_nodes = 10 * spy[i];
                    p.factor_nodes = fn[i];
                }
            } else {
                if (heston) {
                    static const int spy[4] = {22, 36, 60, 100};
                    static const int fn[4] = {11, 18, 30, 50};
                    p.steps_per_year = spy[i];
                    p.space_nodes = 10 * spy[i];
                    p.factor_nodes = fn[i];
                } else {
                    static const int spy[4] = {16, 24, 38, 60};
                    static const int fn[4] = {32, 48, 76, 120};
                    p.steps_per_year = spy[i];
                    p.space_nodes = 10 * spy[i];
                    p.factor_nodes = fn[i];
                }
            }
            break;
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Cell runner: calibrates the fair fee for one (model, contract, method,
// resolution) cell and computes the Delta at a given fee.

struct CellRequest {
    ModelParams model;
    Contract contract;
    MortalityTable mortality = dav2004r_65();
    Method method = Method::HybridPde;
    CellParams params;
    bool dynamic = false;
    bool exclude_skip = false;       // drop gamma = 0 in the MC regression
    std::uint64_t seed = 42;
    SolverConfig solver;
};

struct CellResult {
    double fee = 0.0;        // calibrated guarantee fee (absolute, not bp)
    double ci = 0.0;         // half-width of the 95% fee interval (MC only)
    double value = 0.0;      // price at the calibrated fee
    double seconds = 0.0;
    int iterations = 0;
};

namespace detail {

inline bool is_heston(const ModelParams& m) {
    return std::holds_alternative<HestonParams>(m);
}

// Owns whatever a pricing method needs to evaluate price(alpha) repeatedly
// (scenario batches, trees, meshes), so the secant reuses them across
// fee evaluations (common random numbers for MC).
class CellPricer {
  public:
    CellPricer(const CellRequest& rq, bool coarse) : rq_(rq) {
        CellParams p = rq.params;
        if (coarse) {
            p.steps_per_year = std::max(1, p.steps_per_year / 3);
            if (p.paths) p.paths = std::max<std::size_t>(1000, p.paths / 16);
            if (p.space_nodes) p.space_nodes = std::max(100, p.space_nodes / 2);
            if (p.factor_nodes) p.factor_nodes = std::max(10, p.factor_nodes / 2);
        }
        const int years = rq.mortality.years();
        switch (rq.method) {
            case Method::HybridMc:
                if (is_heston(rq.model)) {
                    const auto& he = std::get<HestonParams>(rq.model);
                    lattice_ = Lattice::heston(he, p.steps_per_year * years,
                                               double(years));
                    gen_ = std::make_unique<HybridHestonGenerator>(lattice_, he,
                                                                   rq.seed);
                } else {
                    const auto& hw = std::get<HullWhiteParams>(rq.model);
                    lattice_ = Lattice::hull_white(hw, p.steps_per_year * years,
                                                   double(years));
                    gen_ = std::make_unique<HybridHullWhiteGenerator>(lattice_,
                                                                      hw, rq.seed);
                }
                break;
            case Method::StandardMc:
                if (is_heston(rq.model)) {
                    gen_ = std::make_unique<StandardHestonGenerator>(
                        std::get<HestonParams>(rq.model), years,
                        p.steps_per_year, rq.seed);
                } else {
                    gen_ = std::make_unique<ExactHullWhiteGenerator>(
                        std::get<HullWhiteParams>(rq.model), years,
                        p.steps_per_year, rq.seed);
                }
                break;
            case Method::HybridPde: {
                HpdeConfig cfg;
                cfg.steps_per_year = p.steps_per_year;
                cfg.grid_nodes = p.space_nodes;
                cfg.dynamic_withdrawal = rq.dynamic;
                hpde_ = std::make_unique<HpdeEngine>(rq.model, rq.contract,
                                                     rq.mortality, cfg);
                break;
            }
            case Method::AdiPde: {
                AdiConfig cfg;
                cfg.steps_per_year = p.steps_per_year;
                cfg.a_nodes = p.space_nodes;
                cfg.f_nodes = p.factor_nodes;
                cfg.dynamic_withdrawal = rq.dynamic;
                adi_ = std::make_unique<AdiEngine>(rq.model, rq.contract,
                                                   rq.mortality, cfg);
                break;
            }
        }
        if (gen_) {
            if (rq.dynamic) {
                batch_ = ScenarioBatch::fill(*gen_, p.paths);
                ls_.degree = p.ls_degree > 0 ? p.ls_degree : 3;
                ls_.exclude_skip = rq.exclude_skip;
                ls_.policy_seed = rq.seed ^ 0x9e3779b97f4a7c15ull;
            } else {
                source_ = std::make_unique<PathSource>(*gen_, p.paths);
            }
        }
    }

    double price(double alpha, double a0_scale = 1.0) {
        switch (rq_.method) {
            case Method::HybridMc:
            case Method::StandardMc: {
                McEstimate e = rq_.dynamic
                                   ? dynamic_price(batch_, rq_.contract,
                                                   rq_.mortality, alpha, ls_,
                                                   a0_scale)
                                   : static_price(*source_, rq_.contract,
                                                  rq_.mortality, alpha, 1.0,
                                                  a0_scale);
                last_se_ = e.std_error;
                return e.value;
            }
            case Method::HybridPde:
                if (a0_scale == 1.0) return hpde_->price(alpha);
                return hpde_->solve(alpha).at_account(a0_scale *
                                                      rq_.contract.net_premium);
            case Method::AdiPde:
                if (a0_scale == 1.0) return adi_->price(alpha);
                return adi_->solve(alpha).at_account(a0_scale *
                                                     rq_.contract.net_premium);
        }
        throw std::logic_error("cell pricer: unknown method");
    }

    // Central-difference Delta at fee alpha.  PDE methods reuse a single
    // backward solve; MC methods reuse the same scenarios (common random
    // numbers).
    double delta(double alpha, double rel_bump) {
        const double A0 = rq_.contract.net_premium;
        const double h = rel_bump * A0;
        if (rq_.method == Method::HybridPde) {
            auto sol = hpde_->solve(alpha);
            return (sol.at_account(A0 + h) - sol.at_account(A0 - h)) / (2.0 * h);
        }
        if (rq_.method == Method::AdiPde) {
            auto sol = adi_->solve(alpha);
            return (sol.at_account(A0 + h) - sol.at_account(A0 - h)) / (2.0 * h);
        }
        double up = price(alpha, 1.0 + rel_bump);
        double dn = price(alpha, 1.0 - rel_bump);
        return (up - dn) / (2.0 * h);
    }

    double last_std_error() const { return last_se_; }

  private:
    const CellRequest& rq_;
    Lattice lattice_;
    std::unique_ptr<ScenarioGenerator> gen_;
    std::unique_ptr<PathSource> source_;
    ScenarioBatch batch_;
    DynamicLsConfig ls_;
    std::unique_ptr<HpdeEngine> hpde_;
    std::unique_ptr<AdiEngine> adi_;
    double last_se_ = 0.0;
};

} // namespace detail

// Calibrates the fair guarantee fee for one cell.
inline CellResult solve_cell(const CellRequest& rq) {
    auto t0 = std::chrono::steady_clock::now();
    detail::CellPricer fine(rq, false);
    detail::CellPricer coarse(rq, true);
    SolverConfig scfg = rq.solver;
    const bool mc =
        rq.method == Method::HybridMc || rq.method == Method::StandardMc;
    FeeSolveResult r = solve_fee_staged(
        [&](double a) { return coarse.price(a); },
        [&](double a) { return fine.price(a); }, rq.contract.net_premium,
        scfg);
    CellResult out;
    out.fee = r.alpha_g;
    out.value = r.value;
    out.iterations = r.iterations;
    if (mc && r.slope != 0.0)
        out.ci = 1.96 * fine.last_std_error() / std::fabs(r.slope);
    out.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return out;
}

// Delta of the contract value with respect to the initial account, at a
// given guarantee fee, with the benefit base held fixed.
inline double cell_delta(const CellRequest& rq, double alpha_g,
                         double rel_bump) {
    detail::CellPricer fine(rq, false);
    return fine.delta(alpha_g, rel_bump);
}

} // namespace glwb
