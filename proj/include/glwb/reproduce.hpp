// reproduce.hpp -- preset model/contract/cell definitions for the benchmark
// reproduction runs exposed by the command-line tool and the acceptance
// suite: static and dynamic fair-fee tables, Delta tables at fixed fees, and
// mortality-stress reruns, over both models and all four pricing methods.
#pragma once

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "solver.hpp"

namespace glwb {

// One benchmark cell: either a fair-fee calibration (fixed_fee_bp < 0) or a
// Delta evaluation at a pinned guarantee fee (fixed_fee_bp >= 0).
struct RunSpec {
    std::string cell;            // unique id; also the output ordering key
    std::string table;           // reproduce id this cell belongs to
    Method method = Method::HybridPde;
    ConfigLevel config = ConfigLevel::A;
    ModelParams model;
    Contract contract;
    bool dynamic = false;
    bool exclude_skip = false;   // drop gamma = 0 from the MC policy grid
    double rho = 0.0;
    int ratchet_every = 0;       // 0 = ratchet off
    double mortality_factor = 1.0;
    double fixed_fee_bp = -1.0;
    double delta_bump = 0.01;    // relative account bump for Deltas
};

// --- model presets ----------------------------------------------------------

inline HullWhiteParams bshw_base(double rho) {
    HullWhiteParams p;
    p.S0 = 100.0;
    p.sigma = 0.15;
    p.k = 1.0;
    p.omega = 0.2;
    p.rho = rho;
    p.curve.r0 = 0.04;
    return p;
}

inline HestonParams heston_base(double rho) {
    HestonParams p;
    p.S0 = 100.0;
    p.V0 = p.theta = 0.15 * 0.15;
    p.k = 1.0;
    p.omega = 0.2;
    p.rho = rho;
    p.r = 0.04;
    return p;
}

// High vol-of-vol parameter set used by the test2b comparison run.
inline HestonParams heston_test2b() {
    HestonParams p;
    p.S0 = 100.0;
    p.V0 = p.theta = 0.22 * 0.22;
    p.k = 4.75;
    p.omega = 0.55;
    p.rho = -0.569;
    p.r = 0.04;
    return p;
}

// --- contract presets -------------------------------------------------------

// Base static rider: G = 5%, no extra fees, continuous fee accrual, death
// benefit at the next anniversary, fixed withdrawal gamma = 1.
inline Contract contract_static(int ratchet_every) {
    Contract c;
    c.ratchet_every = ratchet_every;
    return c;
}

// test2b contract: 4% initial fee (account starts at 96 against a benefit
// base of 100), 151 bp management fee taken at the end of each period, and a
// lower guaranteed rate (further reduced when the annual ratchet is on).
inline Contract contract_test2b(bool ratchet) {
    Contract c;
    c.gross_premium = 100.0;
    c.net_premium = 96.0;
    c.base0 = 100.0;
    c.g_rate = ratchet ? 0.0419 : 0.0490;
    c.alpha_m = 0.0151;
    c.fee_mode = FeeMode::EndOfPeriod;
    c.db_mode = DbMode::NextAnniversary;
    c.ratchet_every = ratchet ? 1 : 0;
    return c;
}

// Dynamic-policy rider: 5% bonus on skipped withdrawals, declining surrender
// penalties over the first five years, immediate death benefit.
inline Contract contract_dynamic(int ratchet_every) {
    Contract c;
    c.bonus = 0.05;
    c.kappa = {0.05, 0.04, 0.03, 0.02, 0.01};
    c.db_mode = DbMode::Immediate;
    c.fee_mode = FeeMode::Continuous;
    c.ratchet_every = ratchet_every;
    return c;
}

// --- cell enumeration -------------------------------------------------------

inline const std::vector<std::string>& reproduce_ids() {
    static const std::vector<std::string> ids = {
        "test1", "test2", "test2b", "test3", "test4",
        "dyn1",  "dyn2",  "dyn3",   "dyn4"};
    return ids;
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::HybridMc: return "hmc";
        case Method::StandardMc: return "smc";
        case Method::HybridPde: return "hpde";
        case Method::AdiPde: return "apde";
    }
    return "?";
}

inline std::string config_name(ConfigLevel c) {
    return std::string(1, char('A' + int(c)));
}

namespace detail {

inline std::string cell_id(const std::string& table, Method m, ConfigLevel cf,
                           double rho, int ratchet) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.3f", rho);
    return table + "/" + method_name(m) + "/" + config_name(cf) + "/rho" +
           buf + "/ratchet" + std::to_string(ratchet);
}

// MC dynamic runs at the two coarse resolutions keep the policy grid at
// {1, 2}: with few paths the regression noise makes the skip-and-bonus
// branch look spuriously attractive.
inline bool mc_exclude_skip(Method m, ConfigLevel cf) {
    return (m == Method::HybridMc || m == Method::StandardMc) &&
           int(cf) <= int(ConfigLevel::B);
}

} // namespace detail

// Expands one reproduce id into its run cells for the requested methods and
// configuration levels, in a deterministic order.
inline std::vector<RunSpec> reproduce_cells(
    const std::string& id, const std::vector<ConfigLevel>& configs,
    const std::vector<Method>& methods) {
    static const double rhos[3] = {-0.5, 0.0, 0.5};
    std::vector<RunSpec> out;

    auto push = [&](Method m, ConfigLevel cf, const ModelParams& model,
                    const Contract& c, bool dynamic, double rho, int ratchet,
                    double mort, double fee_bp) {
        RunSpec s;
        s.cell = detail::cell_id(id, m, cf, rho, ratchet);
        s.table = id;
        s.method = m;
        s.config = cf;
        s.model = model;
        s.contract = c;
        s.dynamic = dynamic;
        s.exclude_skip = dynamic && detail::mc_exclude_skip(m, cf);
        s.rho = rho;
        s.ratchet_every = ratchet;
        s.mortality_factor = mort;
        s.fixed_fee_bp = fee_bp;
        out.push_back(std::move(s));
    };

    for (Method m : methods) {
        for (ConfigLevel cf : configs) {
            if (id == "test1" || id == "test4") {
                const double mort = id == "test4" ? 1.10 : 1.0;
                for (double rho : rhos)
                    for (int ratchet : {0, 1})
                        push(m, cf, bshw_base(rho), contract_static(ratchet),
                             false, rho, ratchet, mort, -1.0);
                if (id == "test4")
                    for (double rho : rhos)
                        for (int ratchet : {0, 1})
                            push(m, cf, heston_base(rho),
                                 contract_static(ratchet), false, rho, ratchet,
                                 mort, -1.0);
            } else if (id == "test2") {
                for (double rho : rhos)
                    for (int ratchet : {0, 1})
                        push(m, cf, heston_base(rho), contract_static(ratchet),
                             false, rho, ratchet, 1.0, -1.0);
            } else if (id == "test2b") {
                for (int ratchet : {0, 1})
                    push(m, cf, heston_test2b(), contract_test2b(ratchet != 0),
                         false, heston_test2b().rho, ratchet, 1.0, -1.0);
            } else if (id == "test3") {
                for (double rho : rhos)
                    for (int ratchet : {0, 1})
                        push(m, cf, bshw_base(rho), contract_static(ratchet),
                             false, rho, ratchet, 1.0,
                             ratchet ? 250.0 : 150.0);
                for (double rho : rhos)
                    for (int ratchet : {0, 1})
                        push(m, cf, heston_base(rho), contract_static(ratchet),
                             false, rho, ratchet, 1.0,
                             ratchet ? 100.0 : 50.0);
            } else if (id == "dyn1" || id == "dyn4") {
                const double mort = id == "dyn4" ? 1.10 : 1.0;
                for (double rho : rhos)
                    for (int ratchet : {0, 3})
                        push(m, cf, bshw_base(rho), contract_dynamic(ratchet),
                             true, rho, ratchet, mort, -1.0);
                if (id == "dyn4")
                    for (double rho : rhos)
                        for (int ratchet : {0, 3})
                            push(m, cf, heston_base(rho),
                                 contract_dynamic(ratchet), true, rho, ratchet,
                                 mort, -1.0);
            } else if (id == "dyn2") {
                for (double rho : rhos)
                    for (int ratchet : {0, 3})
                        push(m, cf, heston_base(rho), contract_dynamic(ratchet),
                             true, rho, ratchet, 1.0, -1.0);
            } else if (id == "dyn3") {
                for (double rho : rhos)
                    for (int ratchet : {0, 3})
                        push(m, cf, bshw_base(rho), contract_dynamic(ratchet),
                             true, rho, ratchet, 1.0, ratchet ? 350.0 : 300.0);
                for (double rho : rhos)
                    for (int ratchet : {0, 3})
                        push(m, cf, heston_base(rho), contract_dynamic(ratchet),
                             true, rho, ratchet, 1.0, ratchet ? 100.0 : 75.0);
            } else {
                throw std::invalid_argument("unknown reproduce id: " + id);
            }
        }
    }
    return out;
}

// Result of running one cell, ready for report formatting.
struct RunResult {
    RunSpec spec;
    double fee_bp = 0.0;
    double ci_bp = -1.0;   // < 0: not a Monte Carlo cell
    double delta = 0.0;    // meaningful only when spec.fixed_fee_bp >= 0
    double seconds = 0.0;
};

// Executes one cell: builds the request, calibrates the fee or evaluates the
// Delta at the pinned fee.
inline RunResult run_cell(const RunSpec& s, const MortalityTable& base_table,
                          std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    CellRequest rq;
    rq.model = s.model;
    rq.contract = s.contract;
    rq.mortality = s.mortality_factor != 1.0 ? base_table.shock(s.mortality_factor)
                                             : base_table;
    rq.method = s.method;
    rq.params = cell_params(s.method, s.config,
                            std::holds_alternative<HestonParams>(s.model),
                            s.dynamic);
    rq.dynamic = s.dynamic;
    rq.exclude_skip = s.exclude_skip;
    rq.seed = seed;

    RunResult r;
    r.spec = s;
    if (s.fixed_fee_bp >= 0.0) {
        r.fee_bp = s.fixed_fee_bp;
        r.delta = cell_delta(rq, s.fixed_fee_bp * 1e-4, s.delta_bump);
    } else {
        CellResult cr = solve_cell(rq);
        r.fee_bp = cr.fee * 1e4;
        if (rq.method == Method::HybridMc || rq.method == Method::StandardMc)
            r.ci_bp = cr.ci * 1e4;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
    return r;
}

} // namespace glwb
