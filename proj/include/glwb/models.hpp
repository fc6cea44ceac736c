// models.hpp -- parameter sets and deterministic curve functions for the
// Heston and Black-Scholes--Hull-White models, plus the conditional moments
// used by the lattices and simulation schemes.
#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

namespace glwb {

struct HestonParams {
    double S0 = 100.0;
    double V0 = 0.0225;
    double theta = 0.0225; // long-run variance
    double k = 1.0;        // mean-reversion speed
    double omega = 0.2;    // vol-of-vol
    double rho = 0.0;
    double r = 0.04;       // constant short rate
};

// Discount curve for the Hull-White model: either flat at r0 or log-linear
// in discount factors between yearly pillars.
struct Curve {
    double r0 = 0.04;
    std::vector<double> pillar_t;    // empty => flat
    std::vector<double> pillar_df;

    bool flat() const { return pillar_t.empty(); }

    double log_df(double t) const {
        if (flat()) return -r0 * t;
        if (t <= 0.0) return 0.0;
        std::size_t i = 1;
        while (i + 1 < pillar_t.size() && pillar_t[i] < t) ++i;
        double t0 = pillar_t[i - 1], t1 = pillar_t[i];
        double l0 = std::log(pillar_df[i - 1]), l1 = std::log(pillar_df[i]);
        return l0 + (l1 - l0) * (t - t0) / (t1 - t0);
    }

    // Instantaneous forward rate by centered differencing of -ln P(0,t).
    double forward(double t) const {
        if (flat()) return r0;
        const double h = 1e-4;
        double tl = std::max(0.0, t - h);
        return -(log_df(t + h) - log_df(tl)) / (t + h - tl);
    }
};

struct HullWhiteParams {
    double S0 = 100.0;
    double sigma = 0.15;  // equity volatility
    double k = 1.0;       // rate mean reversion
    double omega = 0.2;   // rate volatility (may be 0: deterministic rate)
    double rho = 0.0;     // equity/rate correlation
    Curve curve;

    // beta(t) = f(0,t) + (omega^2 / 2k^2) (1 - e^{-kt})^2, so that the model
    // reprices the input discount curve.
    double beta(double t) const {
        double e = 1.0 - std::exp(-k * t);
        return curve.forward(t) + omega * omega / (2.0 * k * k) * e * e;
    }

    // Drift target theta_t in dr = k(theta_t - r)dt + ... form (flat curve).
    double theta_t(double t) const {
        double e = 1.0 - std::exp(-2.0 * k * t);
        return curve.forward(t) + omega * omega / (2.0 * k * k) * e;
    }

    // Integral of beta over [t0, t1] (flat curve closed form, else Simpson).
    double int_beta(double t0, double t1) const {
        if (curve.flat()) {
            auto prim = [&](double t) {
                // integral of (1 - e^{-kt})^2 = t + 2 e^{-kt}/k - e^{-2kt}/(2k)
                return t + 2.0 * std::exp(-k * t) / k -
                       std::exp(-2.0 * k * t) / (2.0 * k);
            };
            double c = omega * omega / (2.0 * k * k);
            return curve.r0 * (t1 - t0) + c * (prim(t1) - prim(t0));
        }
        double m = 0.5 * (t0 + t1);
        return (t1 - t0) / 6.0 * (beta(t0) + 4.0 * beta(m) + beta(t1));
    }
};

using ModelParams = std::variant<HestonParams, HullWhiteParams>;

// First three conditional moments of the CIR variance V_{t+h} | V_t = v.
struct CirMoments {
    double m1, m2, m3;
};

inline CirMoments heston_moments(const HestonParams& p, double v, double h) {
    if (v < 0.0) throw std::invalid_argument("heston_moments: v < 0");
    const double e = std::exp(-p.k * h);
    const double psi = (1.0 - e) / p.k;
    const double w2 = p.omega * p.omega;
    const double ktp = p.k * p.theta * psi;
    CirMoments m;
    m.m1 = v * e + ktp;
    m.m2 = m.m1 * m.m1 + w2 * psi * (ktp / 2.0 + v * e);
    m.m3 = m.m1 * m.m2 +
           w2 * psi * (2.0 * v * v * e * e +
                       psi * (p.k * p.theta + w2 / 2.0) * (3.0 * v * e + ktp));
    return m;
}

// Exact Ornstein-Uhlenbeck transition for dX = -kX dt + dZ over step h.
inline void ou_conditional(const HullWhiteParams& p, double x, double h,
                           double& mean, double& stdev) {
    if (!(h > 0.0)) throw std::invalid_argument("ou_conditional: h <= 0");
    mean = x * std::exp(-p.k * h);
    stdev = std::sqrt((1.0 - std::exp(-2.0 * p.k * h)) / (2.0 * p.k));
}

// Exact joint moments of (X_{t+h}, Y = int_t^{t+h} X ds) given X_t = x,
// used by the exact Hull-White path generator.
struct OuJointMoments {
    double mean_x, mean_y, var_x, var_y, cov_xy;
};

inline OuJointMoments ou_joint_moments(double k, double x, double h) {
    OuJointMoments m;
    const double u = k * h;
    const double em1 = std::expm1(-u), em2 = std::expm1(-2.0 * u);
    const double e = 1.0 + em1, e2 = 1.0 + em2;
    m.mean_x = x * e;
    m.mean_y = -x * em1 / k;
    m.var_x = -em2 / (2.0 * k);
    m.cov_xy = em1 * em1 / (2.0 * k * k); // = (1 - e)^2 / (2 k^2)
    if (u < 0.02) {
        // The closed form cancels to O(u^3) and loses every digit as k -> 0;
        // switch to the series in u = kh.
        m.var_y = h * h * h *
                  (1.0 / 3.0 + u * (-0.25 + u * (7.0 / 60.0 - u / 24.0)));
    } else {
        m.var_y = (2.0 * u - 3.0 + 4.0 * e - e2) / (2.0 * k * k * k);
    }
    return m;
}

} // namespace glwb
