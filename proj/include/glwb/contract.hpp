// contract.hpp -- GLWB contract terms and the ordered event-time transitions
// on the state (A, B): fees -> death benefit -> withdrawal/bonus/surrender ->
// ratchet, plus the similarity (degree-1 homogeneity) reduction.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace glwb {

enum class FeeMode { Continuous, EndOfPeriod };
enum class DbMode { NextAnniversary, Immediate };

// The four death-benefit/fee cash-flow cases:
//   1: DB at next anniversary, fees at end of period
//   2: DB at next anniversary, fees continuous
//   3: DB immediate, fees at end of period
//   4: DB immediate, fees continuous
inline int cashflow_case(DbMode db, FeeMode fee) {
    if (db == DbMode::NextAnniversary)
        return fee == FeeMode::EndOfPeriod ? 1 : 2;
    return fee == FeeMode::EndOfPeriod ? 3 : 4;
}

struct Contract {
    double gross_premium = 100.0; // GP, the target of the fee calibration
    double net_premium = 100.0;   // P, invested after initial fees
    double g_rate = 0.05;         // guaranteed withdrawal rate G per year
    double dt = 1.0;              // event interval in years
    double alpha_m = 0.0;         // management fee (per year)
    FeeMode fee_mode = FeeMode::Continuous;
    DbMode db_mode = DbMode::NextAnniversary;
    int ratchet_every = 0;        // 0 = off; n = step-up every n anniversaries
    double bonus = 0.0;           // benefit-base bonus when gamma = 0
    std::vector<double> kappa;    // surrender penalty by anniversary (1-based)
    bool first_withdrawal_at_zero = false;
    double base0 = 0.0;           // initial benefit base; 0 = net premium

    int cf_case() const { return cashflow_case(db_mode, fee_mode); }

    double initial_base() const { return base0 > 0.0 ? base0 : net_premium; }

    double penalty(int anniversary) const {
        if (anniversary < 1 || anniversary > int(kappa.size())) return 0.0;
        return kappa[std::size_t(anniversary - 1)];
    }

    bool is_ratchet_date(int anniversary) const {
        return ratchet_every > 0 && anniversary >= 1 &&
               anniversary % ratchet_every == 0;
    }
};

struct PolicyState {
    double A = 0.0; // account value
    double B = 0.0; // benefit base
};

// End-of-period fee event: deducts the full fee from the account and reports
// the management share as cash.  Identity under continuous fees.
inline double apply_fee_event(PolicyState& s, const Contract& c, double alpha_tot) {
    if (c.fee_mode == FeeMode::Continuous) return 0.0;
    double decay = std::exp(-alpha_tot * c.dt);
    double mgmt = alpha_tot > 0.0
                      ? s.A * (1.0 - decay) * (c.alpha_m / alpha_tot)
                      : 0.0;
    s.A *= decay;
    return mgmt;
}

// Withdrawal/bonus/surrender transition; returns the cash to the holder.
//   gamma = 0       : no withdrawal, base grows by the bonus
//   0 < gamma <= 1  : partial/full guaranteed withdrawal
//   1 < gamma <= 2  : surrender of a fraction of the excess; gamma = 2 exits
inline double apply_withdrawal(PolicyState& s, const Contract& c, double gamma,
                               int anniversary) {
    if (gamma < 0.0 || gamma > 2.0)
        throw std::invalid_argument("withdrawal: gamma outside [0,2]");
    const double W = c.g_rate * c.dt * s.B;
    if (gamma == 0.0) {
        s.B *= (1.0 + c.bonus);
        return 0.0;
    }
    if (gamma <= 1.0) {
        double cash = gamma * W;
        s.A = std::max(0.0, s.A - cash);
        return cash;
    }
    double Ap = std::max(0.0, s.A - W);
    double cash = W + (gamma - 1.0) * Ap * (1.0 - c.penalty(anniversary));
    s.A = (2.0 - gamma) * Ap;
    s.B = (2.0 - gamma) * s.B;
    return cash;
}

inline void apply_ratchet(PolicyState& s, const Contract& c, int anniversary) {
    if (c.is_ratchet_date(anniversary)) s.B = std::max(s.B, s.A);
}

// Similarity reduction: V(A, B, t) = (B / Bhat) * V(A * Bhat / B, Bhat, t).
// Evaluates a value function stored on the representative slice Bhat at an
// arbitrary base B > 0.
template <typename ValueFn>
inline double similarity_rescale(ValueFn&& value_at_bhat, double A, double B,
                                 double Bhat) {
    if (!(B > 0.0) || !(Bhat > 0.0))
        throw std::invalid_argument("similarity: B and Bhat must be positive");
    double eta = B / Bhat;
    return eta * value_at_bhat(A / eta);
}

} // namespace glwb
