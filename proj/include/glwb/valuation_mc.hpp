// valuation_mc.hpp -- Monte Carlo valuation of the GLWB rider on simulated
// scenarios: static (fixed withdrawal fraction) pricing via the forward
// conditional-on-death estimator, and dynamic (worst-case holder behaviour)
// pricing via least-squares regression with policy re-simulation.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "contract.hpp"
#include "mortality.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "scenarios.hpp"

namespace glwb {

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Discounted-to-year-start death-benefit plus management-fee cash accrued
// over one contract year, for account value A at the start of the year
// (after the anniversary events).  m_i, R_i, R_ip1 are the death mass of the
// year and the survival probabilities at its two ends.
inline double year_cash(const IntervalData& d, int cf_case, double A,
                        double alpha_tot, double alpha_m, double m_i,
                        double R_i, double R_ip1) {
    if (A <= 0.0) return 0.0;
    const double decay = std::exp(-alpha_tot);
    const double mgmt_share =
        alpha_tot > 0.0 ? alpha_m / alpha_tot : 0.0;
    const double grown = d.disc * A * d.ratio * decay;
    switch (cf_case) {
        case 1:
            return m_i * grown +
                   R_i * d.disc * A * d.ratio * (1.0 - decay) * mgmt_share;
        case 2:
            return m_i * grown + R_i * alpha_m * A * integral_S(d, alpha_tot);
        case 3:
            return m_i * A * integral_S(d, alpha_tot) +
                   m_i * mgmt_share * A *
                       (integral_S(d, 0.0) - integral_S(d, alpha_tot)) +
                   R_ip1 * d.disc * A * d.ratio * (1.0 - decay) * mgmt_share;
        case 4:
            return m_i * A * integral_S(d, alpha_tot) +
                   alpha_m * A *
                       (m_i * integral_S_remaining(d, alpha_tot) +
                        R_ip1 * integral_S(d, alpha_tot));
        default:
            throw std::logic_error("year_cash: unknown cash-flow case");
    }
}

// Discounted value of one path under a constant withdrawal fraction gamma.
// a0_scale bumps the initial account with the benefit base held fixed, for
// Delta computation.
inline double static_path_value(const IntervalData* iv, const Contract& c,
                                const MortalityTable& mt, double alpha_g,
                                double gamma, double a0_scale = 1.0) {
    const int T = mt.years();
    const double alpha_tot = alpha_g + c.alpha_m;
    const int cf = c.cf_case();
    PolicyState st{a0_scale * c.net_premium, c.initial_base()};
    double pv = 0.0, cumdisc = 1.0;
    if (c.first_withdrawal_at_zero)
        pv += apply_withdrawal(st, c, gamma, 0);
    for (int i = 0; i < T; ++i) {
        const IntervalData& d = iv[i];
        pv += cumdisc * year_cash(d, cf, st.A, alpha_tot, c.alpha_m,
                                  mt.death_mass(i), mt.survival_at(i),
                                  mt.survival_at(i + 1));
        st.A *= d.ratio * std::exp(-alpha_tot);
        cumdisc *= d.disc;
        const int anniv = i + 1;
        if (anniv < T) {
            double cash = apply_withdrawal(st, c, gamma, anniv);
            pv += cumdisc * mt.survival_at(anniv) * cash;
            apply_ratchet(st, c, anniv);
        }
    }
    return pv;
}

// Same quantity as static_path_value, computed by per-path backward
// recursion over anniversaries instead of a forward discounted sum:
//   V(t_i) = C_i + D(t_i, t_{i+1}) [ R(t_{i+1}) W_{i+1} + V(t_{i+1}) ],
// with V(t_T) = 0, C_i the within-year death-benefit and fee cash and W the
// anniversary withdrawal.  The two estimators must agree to rounding.
inline double static_path_value_backward(const IntervalData* iv,
                                         const Contract& c,
                                         const MortalityTable& mt,
                                         double alpha_g, double gamma,
                                         double a0_scale = 1.0) {
    const int T = mt.years();
    const double alpha_tot = alpha_g + c.alpha_m;
    const int cf = c.cf_case();

    // Forward pass: record the post-event account at each year start and the
    // anniversary withdrawal cash.
    std::vector<double> a_start(std::size_t(T), 0.0);
    std::vector<double> wcash(std::size_t(T) + 1, 0.0);
    PolicyState st{a0_scale * c.net_premium, c.initial_base()};
    double w0 = 0.0;
    if (c.first_withdrawal_at_zero) w0 = apply_withdrawal(st, c, gamma, 0);
    for (int i = 0; i < T; ++i) {
        a_start[std::size_t(i)] = st.A;
        st.A *= iv[i].ratio * std::exp(-alpha_tot);
        const int anniv = i + 1;
        if (anniv < T) {
            wcash[std::size_t(anniv)] = apply_withdrawal(st, c, gamma, anniv);
            apply_ratchet(st, c, anniv);
        }
    }

    // Backward recursion.
    double v = 0.0;
    for (int i = T - 1; i >= 0; --i) {
        const IntervalData& d = iv[i];
        v = year_cash(d, cf, a_start[std::size_t(i)], alpha_tot, c.alpha_m,
                      mt.death_mass(i), mt.survival_at(i),
                      mt.survival_at(i + 1)) +
            d.disc * (mt.survival_at(i + 1) * wcash[std::size_t(i) + 1] + v);
    }
    return v + w0;
}

// Supplies path data either from a materialized batch (when it fits the
// memory budget) or by regenerating paths on demand, so that large runs
// stay within memory at the cost of regeneration per fee evaluation.
class PathSource {
  public:
    PathSource(const ScenarioGenerator& gen, std::size_t n_paths,
               std::size_t memory_budget_bytes = std::size_t(3) << 30)
        : gen_(gen), n_(n_paths) {
        std::size_t bytes =
            n_paths * std::size_t(gen.years()) * sizeof(IntervalData);
        if (bytes <= memory_budget_bytes) {
            batch_ = ScenarioBatch::fill(gen, n_paths);
            cached_ = true;
        }
    }

    std::size_t paths() const { return n_; }
    int years() const { return gen_.years(); }
    bool cached() const { return cached_; }

    const IntervalData* get(std::size_t p, std::vector<IntervalData>& buf) const {
        if (cached_) return batch_.path(p);
        buf.resize(std::size_t(gen_.years()));
        gen_.path(p, buf.data());
        return buf.data();
    }

  private:
    const ScenarioGenerator& gen_;
    std::size_t n_ = 0;
    ScenarioBatch batch_;
    bool cached_ = false;
};

inline McEstimate static_price(const PathSource& src, const Contract& c,
                               const MortalityTable& mt, double alpha_g,
                               double gamma = 1.0, double a0_scale = 1.0) {
    if (src.years() < mt.years())
        throw std::invalid_argument("static_price: scenario horizon shorter "
                                    "than the mortality horizon");
    std::vector<IntervalData> buf;
    double mean = 0.0, m2 = 0.0;
    const std::size_t n = src.paths();
    for (std::size_t p = 0; p < n; ++p) {
        double v = static_path_value(src.get(p, buf), c, mt, alpha_g, gamma,
                                     a0_scale);
        double delta = v - mean;
        mean += delta / double(p + 1);
        m2 += delta * (v - mean);
    }
    double var = n > 1 ? m2 / double(n - 1) : 0.0;
    return {mean, std::sqrt(var / double(n))};
}

struct DynamicLsConfig {
    int degree = 3;                             // total degree of the basis
    std::vector<double> gamma_grid = {0.0, 1.0, 2.0};
    std::uint64_t policy_seed = 77;             // initial random policy
    bool exclude_skip = false;                  // drop gamma = 0 candidates
};

namespace detail {

inline int ls_basis_size(int degree) {
    return (degree + 1) * (degree + 2) / 2;
}

// Monomials a^p * v^q with p + q <= degree, a = A/B and v the model factor.
inline void ls_basis(double a, double v, int degree, double* out) {
    int idx = 0;
    double ap = 1.0;
    for (int p = 0; p <= degree; ++p) {
        double term = ap;
        for (int q = 0; p + q <= degree; ++q) {
            out[idx++] = term;
            term *= v;
        }
        ap *= a;
    }
}

} // namespace detail

// Dynamic (optimal-withdrawal) price by regression and policy iteration:
// start from a random withdrawal policy, then sweep backward over decision
// times, at each one regressing realized post-decision path values on the
// state (A/B, factor), choosing the cash-plus-continuation maximizing gamma
// per path, and re-simulating the affected path tails.
inline McEstimate dynamic_price(const ScenarioBatch& batch, const Contract& c,
                                const MortalityTable& mt, double alpha_g,
                                const DynamicLsConfig& cfg,
                                double a0_scale = 1.0) {
    const int T = mt.years();
    if (batch.years < T)
        throw std::invalid_argument("dynamic_price: scenario horizon shorter "
                                    "than the mortality horizon");
    const std::size_t n = batch.n_paths;
    const double alpha_tot = alpha_g + c.alpha_m;
    const double decay = std::exp(-alpha_tot);
    const int cf = c.cf_case();
    const int nb = detail::ls_basis_size(cfg.degree);

    std::vector<double> gamma_candidates;
    for (double g : cfg.gamma_grid)
        if (!(cfg.exclude_skip && g == 0.0)) gamma_candidates.push_back(g);
    if (gamma_candidates.empty())
        throw std::invalid_argument("dynamic_price: empty gamma grid");
    // The initial random policy avoids surrender fractions: a surrender kills
    // the path, removing it from every later regression cross-section.
    std::vector<double> init_candidates;
    for (double g : gamma_candidates)
        if (g <= 1.0) init_candidates.push_back(g);
    if (init_candidates.empty()) init_candidates = gamma_candidates;

    std::vector<double> R(std::size_t(T) + 1);
    std::vector<double> mass(static_cast<std::size_t>(T));
    for (int i = 0; i <= T; ++i) R[std::size_t(i)] = mt.survival_at(i);
    for (int i = 0; i < T; ++i) mass[std::size_t(i)] = mt.death_mass(i);

    // Per-path, per-anniversary storage (row-major, stride T):
    //   gam     chosen withdrawal fraction (ignored at i = 0)
    //   preA/B  state entering the anniversary, before its events
    //   cash    discounted-to-0 cash attributed to [t_i, t_{i+1})
    //   tail    suffix sums of cash (value of the path from t_i on)
    std::vector<double> gam(n * std::size_t(T)), preA(n * std::size_t(T)),
        preB(n * std::size_t(T)), cash(n * std::size_t(T)),
        tail(n * std::size_t(T));
    std::vector<double> disc0(n * std::size_t(T)); // D(0, t_i) per path

    // Rolls path p forward from anniversary i with its current policy,
    // refreshing states, cash and tails from i on.
    auto roll_tail = [&](std::size_t p, int i, double A, double B) {
        const IntervalData* iv = batch.path(p);
        double* g = &gam[p * std::size_t(T)];
        double* pa = &preA[p * std::size_t(T)];
        double* pb = &preB[p * std::size_t(T)];
        double* ch = &cash[p * std::size_t(T)];
        double* d0 = &disc0[p * std::size_t(T)];
        for (int j = i; j < T; ++j) {
            pa[j] = A;
            pb[j] = B;
            PolicyState st{A, B};
            double wcash = 0.0;
            if (B > 0.0 && (j >= 1 || c.first_withdrawal_at_zero))
                wcash = apply_withdrawal(st, c, g[j], j);
            apply_ratchet(st, c, j);
            ch[j] = d0[j] * (R[std::size_t(j)] * wcash +
                             year_cash(iv[j], cf, st.A, alpha_tot, c.alpha_m,
                                       mass[std::size_t(j)],
                                       R[std::size_t(j)],
                                       R[std::size_t(j) + 1]));
            A = st.A * iv[j].ratio * decay;
            B = st.B;
        }
        double* tl = &tail[p * std::size_t(T)];
        double acc = 0.0;
        for (int j = T - 1; j >= i; --j) {
            acc += ch[j];
            tl[j] = acc;
        }
        // Suffix sums below i pick up the change too.
        for (int j = i - 1; j >= 0; --j)
            tl[std::size_t(j)] = tl[std::size_t(j) + 1] + ch[j];
    };

    // Initial random policy and forward pass.
    for (std::size_t p = 0; p < n; ++p) {
        CounterRng rng(cfg.policy_seed, p);
        double* g = &gam[p * std::size_t(T)];
        for (int i = 0; i < T; ++i)
            g[i] = init_candidates[std::size_t(rng.next_u64() %
                                               init_candidates.size())];
        const IntervalData* iv = batch.path(p);
        double* d0 = &disc0[p * std::size_t(T)];
        double d = 1.0;
        for (int i = 0; i < T; ++i) {
            d0[i] = d;
            d *= iv[i].disc;
        }
        roll_tail(p, 0, a0_scale * c.net_premium, c.initial_base());
    }

    // Backward policy-improvement sweep over decision times.
    std::vector<double> X, Y;
    std::vector<double> beta(static_cast<std::size_t>(nb));
    std::vector<double> phi(static_cast<std::size_t>(nb));
    std::vector<std::size_t> alive;
    const int first_dec = c.first_withdrawal_at_zero ? 0 : 1;
    for (int i = T - 1; i >= first_dec; --i) {
        // Regression of post-decision path value on the post-decision state.
        alive.clear();
        X.clear();
        Y.clear();
        for (std::size_t p = 0; p < n; ++p) {
            double B = preB[p * std::size_t(T) + std::size_t(i)];
            if (!(B > 0.0)) continue;
            double A = preA[p * std::size_t(T) + std::size_t(i)];
            PolicyState st{A, B};
            double wcash =
                apply_withdrawal(st, c, gam[p * std::size_t(T) + std::size_t(i)], i);
            apply_ratchet(st, c, i);
            if (!(st.B > 0.0)) continue; // surrendered: no continuation
            double future =
                tail[p * std::size_t(T) + std::size_t(i)] -
                disc0[p * std::size_t(T) + std::size_t(i)] *
                    R[std::size_t(i)] * wcash;
            alive.push_back(p);
            double* row = &*X.insert(X.end(), std::size_t(nb), 0.0);
            detail::ls_basis(st.A / st.B,
                             batch.path(p)[i].factor, cfg.degree, row);
            Y.push_back(future /
                        (disc0[p * std::size_t(T) + std::size_t(i)] * st.B));
        }
        if (alive.size() < std::size_t(2 * nb)) continue;
        beta = least_squares(X, Y, alive.size(), std::size_t(nb));

        // Improve every path alive entering the anniversary, including paths
        // whose current policy surrenders here (they have no regression
        // sample but can still switch away from surrendering).
        for (std::size_t p = 0; p < n; ++p) {
            double B = preB[p * std::size_t(T) + std::size_t(i)];
            if (!(B > 0.0)) continue;
            double A = preA[p * std::size_t(T) + std::size_t(i)];
            double v = batch.path(p)[i].factor;
            double best = -1e300, best_g = gam[p * std::size_t(T) + std::size_t(i)];
            for (double g : gamma_candidates) {
                PolicyState st{A, B};
                double wcash = apply_withdrawal(st, c, g, i);
                apply_ratchet(st, c, i);
                double cont = 0.0;
                if (st.B > 0.0) {
                    detail::ls_basis(st.A / st.B, v, cfg.degree, phi.data());
                    double f = 0.0;
                    for (int b = 0; b < nb; ++b)
                        f += beta[std::size_t(b)] * phi[std::size_t(b)];
                    cont = st.B * std::max(0.0, f);
                }
                double score = R[std::size_t(i)] * wcash + cont;
                if (score > best) {
                    best = score;
                    best_g = g;
                }
            }
            if (best_g != gam[p * std::size_t(T) + std::size_t(i)]) {
                gam[p * std::size_t(T) + std::size_t(i)] = best_g;
                roll_tail(p, i, A, B);
            }
        }
    }

    double mean = 0.0, m2 = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        double v = tail[p * std::size_t(T)];
        double delta = v - mean;
        mean += delta / double(p + 1);
        m2 += delta * (v - mean);
    }
    double var = n > 1 ? m2 / double(n - 1) : 0.0;
    return {mean, std::sqrt(var / double(n))};
}

} // namespace glwb
