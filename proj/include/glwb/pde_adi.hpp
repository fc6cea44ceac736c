// pde_adi.hpp -- two-dimensional finite-difference pricer on the
// untransformed (account, factor) state, where the factor is the Heston
// variance or the Hull-White short rate.  Time stepping uses the Douglas
// ADI splitting with theta = 1/2: the mixed-derivative term and the source
// are treated explicitly, each spatial direction implicitly in turn.
// Meshes are sinh-stretched: the account mesh is uniform on a band around
// the initial account value and stretched outside it; the variance mesh
// concentrates near zero and the rate mesh around the initial short rate.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "contract.hpp"
#include "models.hpp"
#include "mortality.hpp"
#include "numerics.hpp"

namespace glwb {

struct AdiConfig {
    int steps_per_year = 18;
    int a_nodes = 180;     // account direction
    int f_nodes = 36;      // factor (variance or rate) direction
    bool dynamic_withdrawal = false;
    std::vector<double> gamma_grid = {0.0, 1.0, 2.0};
    int rannacher_steps = 2; // implicit-Euler steps after each event
    double a_max_mult = 100.0;   // account mesh upper bound, times S0
    double a_band = 0.2;         // half-width of the fine band, times S0
    double a_density = 1.0 / 20; // fine-band spacing, times S0
    double r_max_mult = 15.0;    // rate mesh half-width, times r0
    double r_density = 1.0 / 400;
    double v_density = 1.0 / 500;
};

class AdiEngine {
  public:
    AdiEngine(const ModelParams& model, const Contract& c,
              const MortalityTable& mt, const AdiConfig& cfg)
        : c_(c), mt_(mt), cfg_(cfg) {
        if (c.dt != 1.0)
            throw std::invalid_argument("adi: only yearly event spacing");
        T_ = mt.years();
        N_ = cfg.steps_per_year * T_;
        h_ = 1.0 / cfg.steps_per_year;
        double S0;
        if (std::holds_alternative<HestonParams>(model)) {
            heston_ = true;
            he_ = std::get<HestonParams>(model);
            S0 = he_.S0;
            const double vmax =
                std::min(std::max(100.0 * he_.V0, 1.0), 5.0);
            build_v_mesh(vmax);
            f0_ = he_.V0;
        } else {
            hw_ = std::get<HullWhiteParams>(model);
            S0 = hw_.S0;
            const double r0 = hw_.curve.r0;
            build_r_mesh(r0);
            f0_ = r0;
        }
        build_a_mesh(S0);
        stencils(a_, a1l_, a1c_, a1r_, a2l_, a2c_, a2r_);
        stencils(f_, f1l_, f1c_, f1r_, f2l_, f2c_, f2r_);
    }

    struct Solution {
        std::vector<double> a, f; // meshes
        std::vector<double> v;    // values, account index fastest
        double f0 = 0.0;          // factor level at which to read
        double at_account(double A) const {
            const std::size_t m1 = a.size();
            std::vector<double> slice(f.size());
            for (std::size_t l = 0; l < f.size(); ++l) {
                std::vector<double> row(v.begin() + long(l * m1),
                                        v.begin() + long((l + 1) * m1));
                slice[l] = interp_linear(a, row, A);
            }
            return interp_linear(f, slice, f0);
        }
    };

    double price(double alpha_g) const {
        return solve(alpha_g).at_account(c_.net_premium);
    }

    Solution solve(double alpha_g) const {
        const std::size_t m1 = a_.size(), m2 = f_.size(), mm = m1 * m2;
        const double alpha_tot = alpha_g + c_.alpha_m;
        const int cf = c_.cf_case();
        const double alpha_c =
            c_.fee_mode == FeeMode::Continuous ? alpha_tot : 0.0;
        const double decay = std::exp(-alpha_tot);

        std::vector<double> v(mm, 0.0);
        if (cf == 1 || cf == 2) {
            double scale = mt_.survival_at(T_ - 1);
            if (cf == 1 && alpha_tot > 0.0)
                scale *= 1.0 - (1.0 - decay) * alpha_g / alpha_tot;
            for (std::size_t l = 0; l < m2; ++l)
                for (std::size_t j = 0; j < m1; ++j)
                    v[l * m1 + j] = scale * a_[j];
        }

        std::vector<double> y0(mm), y1(mm), rhs(std::max(m1, m2)),
            lower(std::max(m1, m2)), diag(std::max(m1, m2)),
            upper(std::max(m1, m2)), scratch(std::max(m1, m2)), tmp(m1);
        int rann = cfg_.rannacher_steps;

        for (int n = N_ - 1; n >= 0; --n) {
            if ((n + 1) % cfg_.steps_per_year == 0 && n + 1 < N_) {
                const int year = (n + 1) / cfg_.steps_per_year;
                for (std::size_t l = 0; l < m2; ++l)
                    apply_events(v.data() + l * m1, year, alpha_g, tmp);
                rann = cfg_.rannacher_steps;
            }
            const double theta = rann > 0 ? 1.0 : 0.5;
            const double t0 = n * h_, t1 = (n + 1) * h_;
            const int year = int(t0 + 1e-9);

            // Y0 = v + dt (F0 + F1 + F2)(t1) v + dt * source.
            for (std::size_t i = 0; i < mm; ++i) y0[i] = v[i];
            add_mixed(y0, v, h_);
            for (std::size_t l = 0; l < m2; ++l)
                apply_dir_a(y0.data() + l * m1, v.data() + l * m1, l, h_,
                            alpha_c);
            for (std::size_t j = 0; j < m1; ++j)
                apply_dir_f(y0, v, j, t1, h_);
            add_source(y0, cf, year, 0.5 * (t0 + t1), alpha_g, alpha_tot, h_);

            // Y1: (I - theta dt F1) Y1 = Y0 - theta dt F1 v.
            for (std::size_t l = 0; l < m2; ++l) {
                const double* vr = v.data() + l * m1;
                double* yr = y0.data() + l * m1;
                for (std::size_t j = 0; j < m1; ++j) rhs[j] = 0.0;
                apply_dir_a(rhs.data(), vr, l, -theta * h_, alpha_c);
                for (std::size_t j = 0; j < m1; ++j) rhs[j] += yr[j];
                solve_dir_a(yr, rhs.data(), l, theta * h_, alpha_c, lower,
                            diag, upper, scratch);
            }
            // Y2: (I - theta dt F2(t0)) Y2 = Y1 - theta dt F2(t1) v.
            for (std::size_t i = 0; i < mm; ++i) y1[i] = 0.0;
            for (std::size_t j = 0; j < m1; ++j)
                apply_dir_f(y1, v, j, t1, -theta * h_);
            for (std::size_t i = 0; i < mm; ++i) y1[i] += y0[i];
            for (std::size_t j = 0; j < m1; ++j)
                solve_dir_f(v, y1, j, t0, theta * h_, lower, diag, upper, rhs,
                            scratch);
            if (rann > 0) --rann;
        }

        if (c_.first_withdrawal_at_zero)
            for (std::size_t l = 0; l < m2; ++l)
                apply_events(v.data() + l * m1, 0, alpha_g, tmp);

        Solution sol;
        sol.a = a_;
        sol.f = f_;
        sol.v = std::move(v);
        sol.f0 = f0_;
        return sol;
    }

  private:
    Contract c_;
    MortalityTable mt_;
    AdiConfig cfg_;
    bool heston_ = false;
    HestonParams he_;
    HullWhiteParams hw_;
    int T_ = 0, N_ = 0;
    double h_ = 0.0, f0_ = 0.0;
    std::vector<double> a_, f_;
    std::vector<double> a1l_, a1c_, a1r_, a2l_, a2c_, a2r_;
    std::vector<double> f1l_, f1c_, f1r_, f2l_, f2c_, f2r_;

    // Account mesh: uniform spacing d inside [S0(1-band), S0(1+band)],
    // sinh-stretched down to 0 and up to a_max_mult * S0 outside.
    void build_a_mesh(double S0) {
        const double Al = (1.0 - cfg_.a_band) * S0;
        const double Ar = (1.0 + cfg_.a_band) * S0;
        const double Amax = cfg_.a_max_mult * S0;
        const double d = cfg_.a_density * S0;
        const double xi_lo = std::asinh(-Al / d);
        const double xi_int = (Ar - Al) / d;
        const double xi_hi = xi_int + std::asinh((Amax - Ar) / d);
        const int M = cfg_.a_nodes;
        a_.resize(std::size_t(M));
        for (int j = 0; j < M; ++j) {
            double xi = xi_lo + (xi_hi - xi_lo) * j / (M - 1);
            double A;
            if (xi < 0.0)
                A = Al + d * std::sinh(xi);
            else if (xi <= xi_int)
                A = Al + d * xi;
            else
                A = Ar + d * std::sinh(xi - xi_int);
            a_[std::size_t(j)] = std::max(0.0, A);
        }
        a_.front() = 0.0;
    }

    // Variance mesh on [0, vmax], concentrated near zero, with a node
    // placed exactly at V0 (the surface is read there).
    void build_v_mesh(double vmax) {
        const double d = cfg_.v_density * vmax;
        const double xi_max = std::asinh(vmax / d);
        const double xi_v0 = std::asinh(he_.V0 / d);
        const int M = cfg_.f_nodes;
        const int k0 = std::clamp(int(std::lround(xi_v0 / xi_max * (M - 1))),
                                  1, M - 2);
        f_.resize(std::size_t(M));
        for (int l = 0; l < M; ++l) {
            double xi = l <= k0
                            ? xi_v0 * l / k0
                            : xi_v0 + (xi_max - xi_v0) * (l - k0) / (M - 1 - k0);
            f_[std::size_t(l)] = d * std::sinh(xi);
        }
        f_.front() = 0.0;
        f_[std::size_t(k0)] = he_.V0;
    }

    // Rate mesh on [-rmax, rmax], concentrated around r0, with a node
    // placed exactly at r0.
    void build_r_mesh(double r0) {
        const double rmax = cfg_.r_max_mult * std::fabs(r0);
        const double d = cfg_.r_density * rmax;
        const double xi_lo = std::asinh((-rmax - r0) / d);
        const double xi_hi = std::asinh((rmax - r0) / d);
        const int M = cfg_.f_nodes;
        const int k0 = std::clamp(
            int(std::lround(-xi_lo / (xi_hi - xi_lo) * (M - 1))), 1, M - 2);
        f_.resize(std::size_t(M));
        for (int l = 0; l < M; ++l) {
            double xi = l <= k0 ? xi_lo * (k0 - l) / k0
                                : xi_hi * (l - k0) / (M - 1 - k0);
            f_[std::size_t(l)] = r0 + d * std::sinh(xi);
        }
        f_[std::size_t(k0)] = r0;
    }

    static void stencils(const std::vector<double>& x, std::vector<double>& c1l,
                         std::vector<double>& c1c, std::vector<double>& c1r,
                         std::vector<double>& c2l, std::vector<double>& c2c,
                         std::vector<double>& c2r) {
        const std::size_t M = x.size();
        c1l.assign(M, 0.0); c1c.assign(M, 0.0); c1r.assign(M, 0.0);
        c2l.assign(M, 0.0); c2c.assign(M, 0.0); c2r.assign(M, 0.0);
        for (std::size_t j = 1; j + 1 < M; ++j) {
            const double hm = x[j] - x[j - 1], hp = x[j + 1] - x[j];
            c1l[j] = -hp / (hm * (hm + hp));
            c1c[j] = (hp - hm) / (hm * hp);
            c1r[j] = hm / (hp * (hm + hp));
            c2l[j] = 2.0 / (hm * (hm + hp));
            c2c[j] = -2.0 / (hm * hp);
            c2r[j] = 2.0 / (hp * (hm + hp));
        }
    }

    double short_rate(std::size_t l, double t) const {
        (void)t;
        return heston_ ? he_.r : f_[l];
    }

    // Account-direction operator row coefficients at (j, l); the reaction
    // -rV is split half/half between the two directions.  Boundary rows at
    // A = 0 (degenerate coefficients) and A = Amax (homogeneous Neumann)
    // reduce to pure reaction.
    void row_a(std::size_t j, std::size_t l, double alpha_c, double& lo,
               double& di, double& up) const {
        const double r = short_rate(l, 0.0);
        if (j == 0) { // degenerate: every A-coefficient vanishes at A = 0
            lo = up = 0.0;
            di = -0.5 * r;
            return;
        }
        const double A = a_[j];
        const double diff =
            0.5 * (heston_ ? f_[l] : hw_.sigma * hw_.sigma) * A * A;
        if (j + 1 == a_.size()) { // Neumann via mirrored ghost node
            const double hb = a_[j] - a_[j - 1];
            lo = 2.0 * diff / (hb * hb);
            di = -lo - 0.5 * r;
            up = 0.0;
            return;
        }
        const double adv = (r - alpha_c) * A;
        lo = diff * a2l_[j] + adv * a1l_[j];
        di = diff * a2c_[j] + adv * a1c_[j] - 0.5 * r;
        up = diff * a2r_[j] + adv * a1r_[j];
    }

    // Factor-direction operator row coefficients at (j, l) and time t.
    // Heston: V = 0 is an outflow boundary (one-sided advection), V = Vmax
    // homogeneous Neumann.  Hull-White: homogeneous Neumann at both ends.
    void row_f(std::size_t l, double t, double& lo, double& di,
               double& up) const {
        const std::size_t M = f_.size();
        if (heston_) {
            const double r = he_.r;
            if (l == 0) {
                const double adv = he_.k * he_.theta;
                lo = 0.0;
                up = adv / (f_[1] - f_[0]);
                di = -up - 0.5 * r;
                return;
            }
            if (l + 1 == M) { // Neumann via mirrored ghost node
                const double dfb =
                    0.5 * he_.omega * he_.omega * f_[l];
                const double hb = f_[l] - f_[l - 1];
                lo = 2.0 * dfb / (hb * hb);
                di = -lo - 0.5 * r;
                up = 0.0;
                return;
            }
            const double diff = 0.5 * he_.omega * he_.omega * f_[l];
            const double adv = he_.k * (he_.theta - f_[l]);
            lo = diff * f2l_[l] + adv * f1l_[l];
            di = diff * f2c_[l] + adv * f1c_[l] - 0.5 * r;
            up = diff * f2r_[l] + adv * f1r_[l];
        } else {
            const double r = f_[l];
            const double diff = 0.5 * hw_.omega * hw_.omega;
            if (l == 0) { // Neumann via mirrored ghost node
                const double hb = f_[1] - f_[0];
                up = 2.0 * diff / (hb * hb);
                di = -up - 0.5 * r;
                lo = 0.0;
                return;
            }
            if (l + 1 == M) {
                const double hb = f_[l] - f_[l - 1];
                lo = 2.0 * diff / (hb * hb);
                di = -lo - 0.5 * r;
                up = 0.0;
                return;
            }
            const double adv = hw_.k * (hw_.theta_t(t) - r);
            lo = diff * f2l_[l] + adv * f1l_[l];
            di = diff * f2c_[l] + adv * f1c_[l] - 0.5 * r;
            up = diff * f2r_[l] + adv * f1r_[l];
        }
    }

    // out += w * F1 v on slice l.
    void apply_dir_a(double* out, const double* v, std::size_t l, double w,
                     double alpha_c) const {
        const std::size_t M = a_.size();
        double lo, di, up;
        for (std::size_t j = 0; j < M; ++j) {
            row_a(j, l, alpha_c, lo, di, up);
            double s = di * v[j];
            if (j > 0) s += lo * v[j - 1];
            if (j + 1 < M) s += up * v[j + 1];
            out[j] += w * s;
        }
    }

    void solve_dir_a(double* out, const double* rhs, std::size_t l, double w,
                     double alpha_c, std::vector<double>& lower,
                     std::vector<double>& diag, std::vector<double>& upper,
                     std::vector<double>& scratch) const {
        const std::size_t M = a_.size();
        double lo, di, up;
        std::vector<double> b(rhs, rhs + M);
        for (std::size_t j = 0; j < M; ++j) {
            row_a(j, l, alpha_c, lo, di, up);
            lower[j] = -w * lo;
            diag[j] = 1.0 - w * di;
            upper[j] = -w * up;
        }
        solve_tridiagonal(lower.data(), diag.data(), upper.data(), b.data(), M,
                          scratch.data());
        std::copy(b.begin(), b.end(), out);
    }

    // out += w * F2 v along the factor direction for account index j.
    void apply_dir_f(std::vector<double>& out, const std::vector<double>& v,
                     std::size_t j, double t, double w) const {
        const std::size_t m1 = a_.size(), M = f_.size();
        double lo, di, up;
        for (std::size_t l = 0; l < M; ++l) {
            row_f(l, t, lo, di, up);
            double s = di * v[l * m1 + j];
            if (l > 0) s += lo * v[(l - 1) * m1 + j];
            if (l + 1 < M) s += up * v[(l + 1) * m1 + j];
            out[l * m1 + j] += w * s;
        }
    }

    void solve_dir_f(std::vector<double>& out, const std::vector<double>& rhs,
                     std::size_t j, double t, double w,
                     std::vector<double>& lower, std::vector<double>& diag,
                     std::vector<double>& upper, std::vector<double>& b,
                     std::vector<double>& scratch) const {
        const std::size_t m1 = a_.size(), M = f_.size();
        double lo, di, up;
        for (std::size_t l = 0; l < M; ++l) {
            row_f(l, t, lo, di, up);
            lower[l] = -w * lo;
            diag[l] = 1.0 - w * di;
            upper[l] = -w * up;
            b[l] = rhs[l * m1 + j];
        }
        solve_tridiagonal(lower.data(), diag.data(), upper.data(), b.data(), M,
                          scratch.data());
        for (std::size_t l = 0; l < M; ++l) out[l * m1 + j] = b[l];
    }

    // out += w * F0 v, the mixed-derivative term, interior nodes only (the
    // coefficient or a Neumann condition kills it on every boundary).
    void add_mixed(std::vector<double>& out, const std::vector<double>& v,
                   double w) const {
        const double rho = heston_ ? he_.rho : hw_.rho;
        if (rho == 0.0) return;
        const std::size_t m1 = a_.size(), m2 = f_.size();
        for (std::size_t l = 1; l + 1 < m2; ++l) {
            const double cl =
                rho * (heston_ ? he_.omega * f_[l] : hw_.omega * hw_.sigma);
            if (cl == 0.0) continue;
            for (std::size_t j = 1; j + 1 < m1; ++j) {
                const double c = w * cl * a_[j];
                double s = 0.0;
                for (int dl = -1; dl <= 1; ++dl) {
                    const double fw = dl < 0   ? f1l_[l]
                                      : dl > 0 ? f1r_[l]
                                               : f1c_[l];
                    if (fw == 0.0) continue;
                    const double* row = v.data() + (l + std::size_t(long(dl))) * m1;
                    s += fw * (a1l_[j] * row[j - 1] + a1c_[j] * row[j] +
                               a1r_[j] * row[j + 1]);
                }
                out[l * m1 + j] += c * s;
            }
        }
    }

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
                throw std::logic_error("adi: unknown cash-flow case");
        }
    }

    void add_source(std::vector<double>& out, int cf, int year, double t,
                    double alpha_g, double alpha_tot, double dt) const {
        const double s = source_factor(cf, year, t, alpha_g, alpha_tot);
        if (s == 0.0) return;
        const std::size_t m1 = a_.size(), m2 = f_.size();
        for (std::size_t l = 0; l < m2; ++l)
            for (std::size_t j = 0; j < m1; ++j)
                out[l * m1 + j] += dt * s * a_[j];
    }

    double read(const double* v, double A) const {
        const std::size_t M = a_.size();
        if (A <= a_.front()) return v[0];
        if (A >= a_.back()) return v[M - 1];
        auto it = std::upper_bound(a_.begin(), a_.end(), A);
        std::size_t j = std::size_t(it - a_.begin());
        const double w = (A - a_[j - 1]) / (a_[j] - a_[j - 1]);
        return v[j - 1] + w * (v[j] - v[j - 1]);
    }

    // Anniversary events on one factor slice, backward order: ratchet,
    // withdrawal, death benefit, fees.  Identical contract logic to the
    // hybrid pricer, expressed directly in account space.
    void apply_events(double* v, int year, double alpha_g,
                      std::vector<double>& tmp) const {
        const std::size_t M = a_.size();
        const double alpha_tot = alpha_g + c_.alpha_m;
        const double Bhat = c_.initial_base();
        const int cf = c_.cf_case();

        if (c_.is_ratchet_date(year)) {
            const double v_at_b = read(v, Bhat);
            for (std::size_t j = 0; j < M; ++j)
                if (a_[j] > Bhat) v[j] = a_[j] / Bhat * v_at_b;
        }

        if (year >= 1 || c_.first_withdrawal_at_zero) {
            const double R = mt_.survival_at(year);
            const double W = c_.g_rate * c_.dt * Bhat;
            const double kap = c_.penalty(year);
            auto branch = [&](double A, double gamma) {
                if (gamma == 0.0)
                    return (1.0 + c_.bonus) * read(v, A / (1.0 + c_.bonus));
                if (gamma <= 1.0) {
                    double Ap = std::max(0.0, A - gamma * W);
                    return read(v, Ap) + R * gamma * W;
                }
                double Ap = std::max(0.0, A - W);
                double eta = 2.0 - gamma;
                double cont = eta > 0.0 ? eta * read(v, Ap) : 0.0;
                return cont + R * (W + (gamma - 1.0) * Ap * (1.0 - kap));
            };
            for (std::size_t j = 0; j < M; ++j) {
                if (cfg_.dynamic_withdrawal) {
                    double best = -1e300;
                    for (double g : cfg_.gamma_grid)
                        best = std::max(best, branch(a_[j], g));
                    tmp[j] = best;
                } else {
                    tmp[j] = branch(a_[j], 1.0);
                }
            }
            std::copy(tmp.begin(), tmp.end(), v);
        }

        if ((cf == 1 || cf == 2) && year >= 1) {
            const double m = mt_.death_mass(year - 1);
            for (std::size_t j = 0; j < M; ++j) v[j] += m * a_[j];
        }

        if ((cf == 1 || cf == 3) && year >= 1 && alpha_tot > 0.0) {
            const double w = cf == 1 ? mt_.survival_at(year - 1)
                                     : mt_.survival_at(year);
            const double decay = std::exp(-alpha_tot * c_.dt);
            const double mgmt = w * (c_.alpha_m / alpha_tot) * (1.0 - decay);
            for (std::size_t j = 0; j < M; ++j)
                tmp[j] = read(v, a_[j] * decay) + mgmt * a_[j];
            std::copy(tmp.begin(), tmp.end(), v);
        }
    }
};

} // namespace glwb
