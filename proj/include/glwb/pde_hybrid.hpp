// pde_hybrid.hpp -- hybrid tree/1D-PDE pricer: the stochastic factor
// (variance or short rate) evolves on a moment-matched quadrinomial tree,
// and between consecutive tree levels a one-dimensional PDE in the
// transformed log-account variable (E = ln A - (rho/omega) V for Heston,
// U = ln A - rho sigma X for Hull-White) is solved with the factor frozen at
// the node.  Anniversary events act on each node's surface in account space.
// The E grid is shared by all nodes (the transformed variable is continuous
// across factor jumps, so successor surfaces mix pointwise) and is
// sinh-stretched around the initial account value.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "contract.hpp"
#include "lattice.hpp"
#include "models.hpp"
#include "mortality.hpp"
#include "numerics.hpp"

namespace glwb {

struct HpdeConfig {
    int steps_per_year = 30;
    int grid_nodes = 400;
    double cut_threshold = 1e-11; // tree reach-probability cutting
    bool dynamic_withdrawal = false;
    std::vector<double> gamma_grid = {0.0, 1.0, 2.0};
    double grid_stddevs = 6.0;  // half-width in log-return standard deviations
    double grid_margin = 2.0;   // extra half-width in log-account units
    double sinh_width = 0.6;    // stretching scale of the fine central region
    int rannacher_steps = 2;    // implicit-Euler steps after each event
};

class HpdeEngine {
  public:
    HpdeEngine(const ModelParams& model, const Contract& c,
               const MortalityTable& mt, const HpdeConfig& cfg)
        : c_(c), mt_(mt), cfg_(cfg) {
        if (c.dt != 1.0)
            throw std::invalid_argument("hpde: only yearly event spacing");
        T_ = mt.years();
        N_ = cfg.steps_per_year * T_;
        h_ = 1.0 / cfg.steps_per_year;
        double half;
        if (std::holds_alternative<HestonParams>(model)) {
            heston_ = true;
            he_ = std::get<HestonParams>(model);
            rho_ = he_.rho;
            lat_ = Lattice::heston(he_, N_, double(T_), cfg.cut_threshold);
            const double vm = std::max(he_.V0, he_.theta);
            half = cfg.grid_stddevs * std::sqrt(vm * T_) +
                   std::fabs(he_.r - vm / 2.0) * T_ + cfg.grid_margin;
            root_e_ = std::log(c.net_premium) - shift_of(he_.V0);
        } else {
            hw_ = std::get<HullWhiteParams>(model);
            // A deterministic rate (omega = 0) makes the equity/rate
            // correlation irrelevant to the law of S; collapse the tree to a
            // single-node chain and drop rho from the transform and PDE.
            if (hw_.omega == 0.0) {
                rho_ = 0.0;
                lat_ = Lattice::constant(0.0, N_, double(T_));
            } else {
                rho_ = hw_.rho;
                lat_ = Lattice::hull_white(hw_, N_, double(T_),
                                           cfg.cut_threshold);
            }
            const double k = hw_.k, w = hw_.omega, s = hw_.sigma;
            const double var_lns =
                (s * s + 2.0 * std::fabs(rho_) * s * w / k + w * w / (k * k)) *
                T_;
            half = cfg.grid_stddevs * std::sqrt(var_lns) +
                   std::fabs(hw_.curve.r0 - s * s / 2.0) * T_ +
                   cfg.grid_margin;
            root_e_ = std::log(c.net_premium);
        }
        // Cover the transform shift at the most extreme tree nodes, so that
        // reading A = Bhat stays on-grid for every node.
        double max_shift = 0.0;
        for (int n = 0; n <= N_; n += std::max(1, N_ / 64)) {
            const Lattice::Level& L = lat_.level(n);
            if (L.value.empty()) continue;
            max_shift = std::max({max_shift, std::fabs(shift_of(L.value.front())),
                                  std::fabs(shift_of(L.value.back()))});
        }
        half += max_shift;

        const int M = cfg.grid_nodes;
        const double d = cfg.sinh_width;
        const double xi_max = std::asinh(half / d);
        e_.resize(std::size_t(M));
        exp_e_.resize(std::size_t(M));
        for (int j = 0; j < M; ++j) {
            double xi = -xi_max + 2.0 * xi_max * j / (M - 1);
            e_[std::size_t(j)] = root_e_ + d * std::sinh(xi);
            exp_e_[std::size_t(j)] = std::exp(e_[std::size_t(j)]);
        }
        build_stencils();
    }

    struct Solution {
        std::vector<double> e; // transformed grid
        std::vector<double> v;
        double shift = 0.0;
        double at_account(double A) const {
            return interp_linear(e, v, std::log(A) - shift);
        }
    };

    double price(double alpha_g) const {
        return solve(alpha_g).at_account(c_.net_premium);
    }

    Solution solve(double alpha_g) const {
        const int M = cfg_.grid_nodes;
        const std::size_t m = static_cast<std::size_t>(M);
        const double alpha_tot = alpha_g + c_.alpha_m;
        const int cf = c_.cf_case();
        const double alpha_c =
            c_.fee_mode == FeeMode::Continuous ? alpha_tot : 0.0; // in drift
        const double decay = std::exp(-alpha_tot);

        // Terminal surfaces at the last tree level.
        std::vector<std::vector<double>> cur(
            std::size_t(lat_.band_size(N_)));
        for (int pos = 0; pos < lat_.band_size(N_); ++pos) {
            std::vector<double>& v = cur[std::size_t(pos)];
            v.assign(m, 0.0);
            if (cf == 1 || cf == 2) {
                const double esh = std::exp(shift_of(lat_.value(N_, pos)));
                double scale = mt_.survival_at(T_ - 1);
                if (cf == 1 && alpha_tot > 0.0)
                    scale *= 1.0 - (1.0 - decay) * alpha_g / alpha_tot;
                for (int j = 0; j < M; ++j)
                    v[std::size_t(j)] = scale * exp_e_[std::size_t(j)] * esh;
            }
        }

        std::vector<double> lower(m), diag(m), upper(m), rhs(m), scratch(m),
            tmp(m), tmp2(m);
        int rann = cfg_.rannacher_steps;

        for (int n = N_ - 1; n >= 0; --n) {
            // Anniversary events at the later end of this tree interval.
            if ((n + 1) % cfg_.steps_per_year == 0 && n + 1 < N_) {
                const int year = (n + 1) / cfg_.steps_per_year;
                for (int pos = 0; pos < lat_.band_size(n + 1); ++pos)
                    apply_events(cur[std::size_t(pos)],
                                 shift_of(lat_.value(n + 1, pos)), year,
                                 alpha_g, tmp, tmp2);
                rann = cfg_.rannacher_steps;
            }
            const double theta = rann > 0 ? 1.0 : 0.5;
            const double t0 = n * h_, t1 = (n + 1) * h_;
            const int year = int(t0 + 1e-9);

            std::vector<std::vector<double>> nxt(
                std::size_t(lat_.band_size(n)));
            for (int pos = 0; pos < lat_.band_size(n); ++pos) {
                const NodeTransition& tr = lat_.transition(n, pos);
                const double f = lat_.value(n, pos);
                std::vector<double>& w = nxt[std::size_t(pos)];
                w.assign(m, 0.0);
                for (int b = 0; b < 4; ++b) {
                    const double p = tr.p[std::size_t(b)];
                    if (p == 0.0) continue;
                    const std::vector<double>& s =
                        cur[std::size_t(tr.succ[std::size_t(b)])];
                    for (int j = 0; j < M; ++j)
                        w[std::size_t(j)] += p * s[std::size_t(j)];
                }
                step_back(w, f, t0, t1, theta, alpha_g, alpha_tot, alpha_c,
                          cf, year, lower, diag, upper, rhs, scratch);
            }
            cur.swap(nxt);
            if (rann > 0) --rann;
        }

        if (c_.first_withdrawal_at_zero)
            apply_events(cur[0], shift_of(lat_.value(0, 0)), 0, alpha_g, tmp,
                         tmp2);

        Solution sol;
        sol.e = e_;
        sol.shift = shift_of(lat_.value(0, 0));
        sol.v = std::move(cur[0]);
        return sol;
    }

  private:
    Contract c_;
    MortalityTable mt_;
    HpdeConfig cfg_;
    bool heston_ = false;
    HestonParams he_;
    HullWhiteParams hw_;
    double rho_ = 0.0; // effective correlation used in transform and PDE
    Lattice lat_;
    int T_ = 0, N_ = 0;
    double h_ = 0.0, root_e_ = 0.0;
    std::vector<double> e_, exp_e_;
    // Nonuniform 3-point stencils for the first and second derivatives.
    std::vector<double> d1l_, d1c_, d1r_, d2l_, d2c_, d2r_;

    void build_stencils() {
        const int M = cfg_.grid_nodes;
        const std::size_t m = static_cast<std::size_t>(M);
        d1l_.assign(m, 0.0); d1c_.assign(m, 0.0); d1r_.assign(m, 0.0);
        d2l_.assign(m, 0.0); d2c_.assign(m, 0.0); d2r_.assign(m, 0.0);
        for (int j = 1; j < M - 1; ++j) {
            const double hm = e_[std::size_t(j)] - e_[std::size_t(j) - 1];
            const double hp = e_[std::size_t(j) + 1] - e_[std::size_t(j)];
            d1l_[std::size_t(j)] = -hp / (hm * (hm + hp));
            d1c_[std::size_t(j)] = (hp - hm) / (hm * hp);
            d1r_[std::size_t(j)] = hm / (hp * (hm + hp));
            d2l_[std::size_t(j)] = 2.0 / (hm * (hm + hp));
            d2c_[std::size_t(j)] = -2.0 / (hm * hp);
            d2r_[std::size_t(j)] = 2.0 / (hp * (hm + hp));
        }
    }

    double shift_of(double f) const {
        return heston_ ? (rho_ / he_.omega) * f : hw_.sigma * rho_ * f;
    }

    // Spatial operator coefficients with the factor frozen at f, at time t.
    void coefficients(double f, double t, double alpha_c, double& diff,
                      double& adv, double& disc) const {
        if (heston_) {
            diff = 0.5 * (1.0 - rho_ * rho_) * f;
            adv = he_.r - f / 2.0 - (rho_ / he_.omega) * he_.k * (he_.theta - f) -
                  alpha_c;
            disc = he_.r;
        } else {
            const double r = hw_.omega * f + hw_.beta(t);
            diff = 0.5 * (1.0 - rho_ * rho_) * hw_.sigma * hw_.sigma;
            adv = r - 0.5 * hw_.sigma * hw_.sigma +
                  hw_.sigma * rho_ * hw_.k * f - alpha_c;
            disc = r;
        }
    }

    // PDE source (death benefits paid within the year and/or continuous
    // management fees), per unit of exp(E + shift).
    double source_factor(int cf, int year, double t, double alpha_g,
                         double alpha_tot) const {
        switch (cf) {
            case 1: return 0.0;
            case 2: return c_.alpha_m * mt_.survival(t);
            case 3: {
                double u = t - double(year);
                double adj = alpha_tot > 0.0
                                 ? 1.0 - (1.0 - std::exp(-alpha_tot * u)) *
                                             alpha_g / alpha_tot
                                 : 1.0;
                return mt_.death_mass(year) * adj;
            }
            case 4:
                return c_.alpha_m * mt_.survival(t) + mt_.death_mass(year);
            default:
                throw std::logic_error("hpde: unknown cash-flow case");
        }
    }

    // One theta-scheme step of V_t + L V + src = 0 backward over [t0, t1],
    // in place on v (which enters holding the t1 data).
    void step_back(std::vector<double>& v, double f, double t0, double t1,
                   double theta, double alpha_g, double alpha_tot,
                   double alpha_c, int cf, int year, std::vector<double>& lower,
                   std::vector<double>& diag, std::vector<double>& upper,
                   std::vector<double>& rhs, std::vector<double>& scratch) const {
        const int M = cfg_.grid_nodes;
        const double dt = t1 - t0;
        double d1, a1, r1, d0, a0, r0;
        coefficients(f, t1, alpha_c, d1, a1, r1);
        coefficients(f, t0, alpha_c, d0, a0, r0);
        const double esh = std::exp(shift_of(f));
        const double s1 = source_factor(cf, year, t1, alpha_g, alpha_tot) * esh;
        const double s0 = source_factor(cf, year, t0, alpha_g, alpha_tot) * esh;
        const double de_top = e_[std::size_t(M - 1)] - e_[std::size_t(M - 2)];

        // Explicit part: v + dt (1-theta) (L1 v + src1) + dt theta src0.
        {
            const double w = dt * (1.0 - theta);
            rhs[0] = v[0] + w * (-r1 * v[0]);
            for (int j = 1; j < M - 1; ++j) {
                const std::size_t k = std::size_t(j);
                const double la = d1 * d2l_[k] + a1 * d1l_[k];
                const double lb = d1 * d2c_[k] + a1 * d1c_[k] - r1;
                const double lc = d1 * d2r_[k] + a1 * d1r_[k];
                rhs[k] = v[k] + w * (la * v[k - 1] + lb * v[k] + lc * v[k + 1]);
            }
            const double bc = (d1 + a1) / de_top;
            rhs[std::size_t(M - 1)] =
                v[std::size_t(M - 1)] +
                w * (bc * (v[std::size_t(M - 1)] - v[std::size_t(M - 2)]) -
                     r1 * v[std::size_t(M - 1)]);
            if (s1 != 0.0 || s0 != 0.0)
                for (int j = 0; j < M; ++j)
                    rhs[std::size_t(j)] += dt * exp_e_[std::size_t(j)] *
                                           ((1.0 - theta) * s1 + theta * s0);
        }
        // Implicit part: (I - dt theta L0) v = rhs.
        {
            const double w = dt * theta;
            lower[0] = 0.0;
            diag[0] = 1.0 + w * r0;
            upper[0] = 0.0;
            for (int j = 1; j < M - 1; ++j) {
                const std::size_t k = std::size_t(j);
                lower[k] = -w * (d0 * d2l_[k] + a0 * d1l_[k]);
                diag[k] = 1.0 - w * (d0 * d2c_[k] + a0 * d1c_[k] - r0);
                upper[k] = -w * (d0 * d2r_[k] + a0 * d1r_[k]);
            }
            const double bc = (d0 + a0) / de_top;
            lower[std::size_t(M - 1)] = w * bc;
            diag[std::size_t(M - 1)] = 1.0 - w * (bc - r0);
            upper[std::size_t(M - 1)] = 0.0;
            solve_tridiagonal(lower.data(), diag.data(), upper.data(),
                              rhs.data(), std::size_t(M), scratch.data());
        }
        v = rhs;
    }

    double read(const std::vector<double>& v, double E) const {
        return interp_linear(e_, v, E);
    }

    // Anniversary events at t = year, backward: ratchet, withdrawal, death
    // benefit, fees.  Operates in place on one node surface with transform
    // shift sh.
    void apply_events(std::vector<double>& v, double sh, int year,
                      double alpha_g, std::vector<double>& tmp,
                      std::vector<double>& tmp2) const {
        const int M = cfg_.grid_nodes;
        const double alpha_tot = alpha_g + c_.alpha_m;
        const double Bhat = c_.initial_base();
        const double esh = std::exp(sh);
        const int cf = c_.cf_case();

        // Ratchet: V(A, Bhat) <- V(A, max(A, Bhat)); for A > Bhat the value
        // is linear in A by similarity.
        if (c_.is_ratchet_date(year)) {
            const double v_at_b = read(v, std::log(Bhat) - sh);
            for (int j = 0; j < M; ++j) {
                double A = exp_e_[std::size_t(j)] * esh;
                if (A > Bhat) v[std::size_t(j)] = A / Bhat * v_at_b;
            }
        }

        // Withdrawal (skip / guaranteed / surrender), with similarity for
        // the branches that change the base.
        if (year >= 1 || c_.first_withdrawal_at_zero) {
            const double R = mt_.survival_at(year);
            const double W = c_.g_rate * c_.dt * Bhat;
            const double kap = c_.penalty(year);
            tmp.assign(std::size_t(M), 0.0);
            auto branch = [&](double A, double gamma) {
                if (gamma == 0.0)
                    return (1.0 + c_.bonus) *
                           read(v, std::log(A / (1.0 + c_.bonus)) - sh);
                if (gamma <= 1.0) {
                    double Ap = std::max(0.0, A - gamma * W);
                    double cont = Ap > 0.0 ? read(v, std::log(Ap) - sh) : v[0];
                    return cont + R * gamma * W;
                }
                double Ap = std::max(0.0, A - W);
                double eta = 2.0 - gamma;
                double cont =
                    (eta > 0.0 && Ap > 0.0)
                        ? eta * read(v, std::log(Ap) - sh)
                        : (eta > 0.0 ? eta * v[0] : 0.0);
                return cont + R * (W + (gamma - 1.0) * Ap * (1.0 - kap));
            };
            for (int j = 0; j < M; ++j) {
                double A = exp_e_[std::size_t(j)] * esh;
                if (cfg_.dynamic_withdrawal) {
                    double best = -1e300;
                    for (double g : cfg_.gamma_grid)
                        best = std::max(best, branch(A, g));
                    tmp[std::size_t(j)] = best;
                } else {
                    tmp[std::size_t(j)] = branch(A, 1.0);
                }
            }
            v.swap(tmp);
        }

        // Death benefit paid at this anniversary to last year's deaths.
        if ((cf == 1 || cf == 2) && year >= 1) {
            const double m = mt_.death_mass(year - 1);
            for (int j = 0; j < M; ++j)
                v[std::size_t(j)] += m * exp_e_[std::size_t(j)] * esh;
        }

        // End-of-period fee deduction with the management share refunded.
        if ((cf == 1 || cf == 3) && year >= 1 && alpha_tot > 0.0) {
            const double w = cf == 1 ? mt_.survival_at(year - 1)
                                     : mt_.survival_at(year);
            const double decay = std::exp(-alpha_tot * c_.dt);
            const double mgmt = w * (c_.alpha_m / alpha_tot) * (1.0 - decay);
            tmp2.assign(std::size_t(M), 0.0);
            for (int j = 0; j < M; ++j) {
                double A = exp_e_[std::size_t(j)] * esh;
                tmp2[std::size_t(j)] =
                    read(v, std::log(A * decay) - sh) + mgmt * A;
            }
            v.swap(tmp2);
        }
    }
};

} // namespace glwb
