// scenarios.hpp -- risk-factor path generation at contract event times.
// Hybrid generators walk the variance/rate tree and advance log-S
// conditionally on the walked factor; standard generators use exact joint
// Hull-White sampling and exact-variance Heston sampling.  All generators
// are counter-based: path i is a pure function of (seed, i), so batches are
// reproducible across runs, batch sizes and thread layouts, and fee/Greek
// re-pricings share common random numbers by construction.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lattice.hpp"
#include "models.hpp"
#include "rng.hpp"

namespace glwb {

// Market data for one contract year [t_i, t_i + 1]:
//   ratio   S_{i+1} / S_i
//   disc    exp(-int r) over the year
//   factor  V (Heston) or r (Hull-White) at the start of the year
//   M[m]    trapezoidal integral of u^m * D(t_i, t_i+u) * S(t_i+u)/S(t_i) du,
//           u in [0,1] -- the moments from which the within-year cash-flow
//           integrals with an exp(-alpha u) weight are reconstructed.
struct IntervalData {
    double ratio = 1.0;
    double disc = 1.0;
    double factor = 0.0;
    double M[5] = {0, 0, 0, 0, 0};
};

// int_0^1 D(u) S(u)/S0 e^{-alpha u} du from the stored moments (4th-order
// expansion of e^{-alpha u}; alpha is a fee rate, so the remainder is ~1e-8).
inline double integral_S(const IntervalData& d, double alpha) {
    return d.M[0] - alpha * d.M[1] + alpha * alpha / 2.0 * d.M[2] -
           alpha * alpha * alpha / 6.0 * d.M[3] +
           alpha * alpha * alpha * alpha / 24.0 * d.M[4];
}

// Same integral with an extra (1 - u) weight.
inline double integral_S_remaining(const IntervalData& d, double alpha) {
    double i1 = d.M[1] - alpha * d.M[2] + alpha * alpha / 2.0 * d.M[3] -
                alpha * alpha * alpha / 6.0 * d.M[4];
    return integral_S(d, alpha) - i1;
}

class ScenarioGenerator {
  public:
    virtual ~ScenarioGenerator() = default;
    virtual int years() const = 0;
    virtual int steps_per_year() const = 0;
    // Fills `out[0..years-1]` with the market data of path `idx`.
    virtual void path(std::uint64_t idx, IntervalData* out) const = 0;
};

namespace detail {

// Accumulates the moment integrals over one year by the trapezoid rule.
struct MomentAccumulator {
    double M[5] = {0, 0, 0, 0, 0};
    double prev_x = 1.0, prev_u = 0.0;
    void reset() { *this = MomentAccumulator(); }
    void add(double u, double x) {
        double du = u - prev_u;
        double um = 1.0, pm = 1.0;
        for (int m = 0; m < 5; ++m) {
            M[m] += 0.5 * du * (x * um + prev_x * pm);
            um *= u;
            pm *= prev_u;
        }
        prev_x = x;
        prev_u = u;
    }
};

inline int pick_branch(const NodeTransition& t, double u) {
    double acc = 0.0;
    for (int b = 0; b < 3; ++b) {
        acc += t.p[std::size_t(b)];
        if (u < acc) return b;
    }
    return 3;
}

} // namespace detail

// Hybrid Heston: variance walks the tree; log-S advances with the
// tree-conditional Euler step, splitting the diffusion variance between the
// step's two variance values with a Bernoulli(1/2) draw.
class HybridHestonGenerator final : public ScenarioGenerator {
  public:
    HybridHestonGenerator(const Lattice& lat, const HestonParams& p,
                          std::uint64_t seed)
        : lat_(lat), p_(p), seed_(seed) {
        spy_ = int(std::lround(1.0 / lat.dt()));
        years_ = lat.steps() / spy_;
        if (years_ * spy_ != lat.steps())
            throw std::invalid_argument("hybrid generator: lattice steps not a "
                                        "multiple of years");
    }
    int years() const override { return years_; }
    int steps_per_year() const override { return spy_; }

    void path(std::uint64_t idx, IntervalData* out) const override {
        CounterRng rng(seed_, idx);
        const double h = lat_.dt();
        const double ro = p_.rho / p_.omega;
        const double rho_bar2 = 1.0 - p_.rho * p_.rho;
        int pos = 0;
        double v = lat_.value(0, 0);
        double log_ratio = 0.0;
        detail::MomentAccumulator acc;
        for (int i = 0; i < years_; ++i) {
            out[i].factor = v;
            acc.reset();
            log_ratio = 0.0;
            for (int s = 0; s < spy_; ++s) {
                int n = i * spy_ + s;
                const NodeTransition& t = lat_.transition(n, pos);
                int b = detail::pick_branch(t, rng.next_uniform());
                int npos = t.succ[std::size_t(b)];
                double vn = lat_.value(n + 1, npos);
                double z = rng.next_normal();
                double vstar = rng.next_bit() ? vn : v;
                log_ratio += (p_.r - ro * p_.k * p_.theta) * h +
                             (ro * p_.k - 0.5) * 0.5 * (vn + v) * h +
                             ro * (vn - v) +
                             std::sqrt(rho_bar2 * h * vstar) * z;
                v = vn;
                pos = npos;
                double u = double(s + 1) * h;
                acc.add(u, std::exp(-p_.r * u + log_ratio));
            }
            out[i].ratio = std::exp(log_ratio);
            out[i].disc = std::exp(-p_.r);
            for (int m = 0; m < 5; ++m) out[i].M[m] = acc.M[m];
        }
    }

  private:
    const Lattice& lat_;
    HestonParams p_;
    std::uint64_t seed_;
    int spy_ = 0, years_ = 0;
};

// Hybrid Hull-White: the OU factor walks the tree; log-S advances with the
// trapezoidal-rate step coupled to the X increment through rho.
class HybridHullWhiteGenerator final : public ScenarioGenerator {
  public:
    HybridHullWhiteGenerator(const Lattice& lat, const HullWhiteParams& p,
                             std::uint64_t seed)
        : lat_(lat), p_(p), seed_(seed) {
        spy_ = int(std::lround(1.0 / lat.dt()));
        years_ = lat.steps() / spy_;
        if (years_ * spy_ != lat.steps())
            throw std::invalid_argument("hybrid generator: lattice steps not a "
                                        "multiple of years");
    }
    int years() const override { return years_; }
    int steps_per_year() const override { return spy_; }

    void path(std::uint64_t idx, IntervalData* out) const override {
        CounterRng rng(seed_, idx);
        const double h = lat_.dt();
        const double rho_bar = std::sqrt(1.0 - p_.rho * p_.rho);
        int pos = 0;
        double x = lat_.value(0, 0);
        double r = p_.omega * x + p_.beta(0.0);
        for (int i = 0; i < years_; ++i) {
            out[i].factor = r;
            detail::MomentAccumulator acc;
            double log_ratio = 0.0, log_disc = 0.0;
            for (int s = 0; s < spy_; ++s) {
                int n = i * spy_ + s;
                const NodeTransition& t = lat_.transition(n, pos);
                int b = detail::pick_branch(t, rng.next_uniform());
                int npos = t.succ[std::size_t(b)];
                double xn = lat_.value(n + 1, npos);
                double rn = p_.omega * xn + p_.beta((n + 1) * h);
                double z = rng.next_normal();
                log_ratio += (0.5 * (rn + r) - 0.5 * p_.sigma * p_.sigma) * h +
                             p_.sigma * (p_.rho * (xn + x * (p_.k * h - 1.0)) +
                                         std::sqrt(h) * rho_bar * z);
                log_disc -= 0.5 * (rn + r) * h;
                x = xn;
                r = rn;
                pos = npos;
                acc.add(double(s + 1) * h, std::exp(log_disc + log_ratio));
            }
            out[i].ratio = std::exp(log_ratio);
            out[i].disc = std::exp(log_disc);
            for (int m = 0; m < 5; ++m) out[i].M[m] = acc.M[m];
        }
    }

  private:
    const Lattice& lat_;
    HullWhiteParams p_;
    std::uint64_t seed_;
    int spy_ = 0, years_ = 0;
};

// Standard Hull-White generator: exact joint sampling of the OU factor and
// its time integral, so the discount factor and log-S increment over each
// step are distributionally exact regardless of the step size.
class ExactHullWhiteGenerator final : public ScenarioGenerator {
  public:
    ExactHullWhiteGenerator(const HullWhiteParams& p, int years,
                            int steps_per_year, std::uint64_t seed)
        : p_(p), years_(years), spy_(steps_per_year), seed_(seed) {}
    int years() const override { return years_; }
    int steps_per_year() const override { return spy_; }

    void path(std::uint64_t idx, IntervalData* out) const override {
        CounterRng rng(seed_, idx);
        const double h = 1.0 / spy_;
        const double rho_bar = std::sqrt(1.0 - p_.rho * p_.rho);
        OuJointMoments mom0 = ou_joint_moments(p_.k, 0.0, h);
        const double sx = std::sqrt(mom0.var_x);
        const double cyx = mom0.cov_xy / sx;
        const double sy = std::sqrt(std::max(0.0, mom0.var_y - cyx * cyx));
        double x = 0.0;
        for (int i = 0; i < years_; ++i) {
            out[i].factor = p_.omega * x + p_.beta(double(i));
            detail::MomentAccumulator acc;
            double log_ratio = 0.0, log_disc = 0.0;
            for (int s = 0; s < spy_; ++s) {
                double t0 = double(i) + s * h;
                double z1 = rng.next_normal(), z2 = rng.next_normal();
                double z3 = rng.next_normal();
                double e = std::exp(-p_.k * h);
                double xn = x * e + sx * z1;
                double y = x * (1.0 - e) / p_.k + cyx * z1 + sy * z2;
                double int_r = p_.omega * y + p_.int_beta(t0, t0 + h);
                log_ratio += int_r - 0.5 * p_.sigma * p_.sigma * h +
                             p_.sigma * (p_.rho * ((xn - x) + p_.k * y) +
                                         rho_bar * std::sqrt(h) * z3);
                log_disc -= int_r;
                x = xn;
                acc.add(double(s + 1) * h, std::exp(log_disc + log_ratio));
            }
            out[i].ratio = std::exp(log_ratio);
            out[i].disc = std::exp(log_disc);
            for (int m = 0; m < 5; ++m) out[i].M[m] = acc.M[m];
        }
    }

  private:
    HullWhiteParams p_;
    int years_, spy_;
    std::uint64_t seed_;
};

// Standard Heston generator.  The variance transition is sampled from its
// exact (noncentral chi-square) law; log-S then advances conditionally with
// trapezoidal variance integration.  A quadratic-exponential moment-matched
// variance transition is available as a cross-validation alternative.
class StandardHestonGenerator final : public ScenarioGenerator {
  public:
    enum class VarianceScheme { Exact, QuadraticExponential };

    StandardHestonGenerator(const HestonParams& p, int years,
                            int steps_per_year, std::uint64_t seed,
                            VarianceScheme scheme = VarianceScheme::Exact)
        : p_(p), years_(years), spy_(steps_per_year), seed_(seed),
          scheme_(scheme) {}
    int years() const override { return years_; }
    int steps_per_year() const override { return spy_; }

    void path(std::uint64_t idx, IntervalData* out) const override {
        CounterRng rng(seed_, idx);
        const double h = 1.0 / spy_;
        const double e = std::exp(-p_.k * h);
        const double c = p_.omega * p_.omega * (1.0 - e) / (4.0 * p_.k);
        const double d = 4.0 * p_.k * p_.theta / (p_.omega * p_.omega);
        const double rho_bar = std::sqrt(1.0 - p_.rho * p_.rho);
        double v = p_.V0;
        for (int i = 0; i < years_; ++i) {
            out[i].factor = v;
            detail::MomentAccumulator acc;
            double log_ratio = 0.0;
            for (int s = 0; s < spy_; ++s) {
                double vn = scheme_ == VarianceScheme::Exact
                                ? exact_variance(rng, v, e, c, d)
                                : qe_variance(rng, v, h);
                double int_v = 0.5 * (v + vn) * h;
                double int_sqv_dz = (vn - v - p_.k * p_.theta * h + p_.k * int_v) /
                                    p_.omega;
                log_ratio += p_.r * h - 0.5 * int_v + p_.rho * int_sqv_dz +
                             rho_bar * std::sqrt(int_v) * rng.next_normal();
                v = vn;
                acc.add(double(s + 1) * h,
                        std::exp(-p_.r * double(s + 1) * h + log_ratio));
            }
            out[i].ratio = std::exp(log_ratio);
            out[i].disc = std::exp(-p_.r);
            for (int m = 0; m < 5; ++m) out[i].M[m] = acc.M[m];
        }
    }

  private:
    static double exact_variance(CounterRng& rng, double v, double e, double c,
                                 double d) {
        double lam = v * e / c; // noncentrality
        if (d > 1.0) {
            double z = rng.next_normal();
            double sq = z + std::sqrt(lam);
            double chi = 2.0 * rng.next_gamma((d - 1.0) / 2.0);
            return c * (sq * sq + chi);
        }
        // Poisson-mixed central chi-square for d <= 1.
        double mean = lam / 2.0;
        int j = 0;
        double p = std::exp(-mean), cum = p, u = rng.next_uniform();
        while (u > cum && j < 10000) {
            ++j;
            p *= mean / j;
            cum += p;
        }
        return c * 2.0 * rng.next_gamma(d / 2.0 + j);
    }

    double qe_variance(CounterRng& rng, double v, double h) const {
        double eh = std::exp(-p_.k * h);
        double m = p_.theta + (v - p_.theta) * eh;
        double s2 = v * p_.omega * p_.omega * eh * (1.0 - eh) / p_.k +
                    p_.theta * p_.omega * p_.omega * (1.0 - eh) * (1.0 - eh) /
                        (2.0 * p_.k);
        double psi = s2 / (m * m);
        if (psi <= 1.5) {
            double b2 = 2.0 / psi - 1.0 +
                        std::sqrt(2.0 / psi * (2.0 / psi - 1.0));
            double a = m / (1.0 + b2);
            double z = rng.next_normal();
            double t = std::sqrt(b2) + z;
            return a * t * t;
        }
        double p = (psi - 1.0) / (psi + 1.0);
        double beta = (1.0 - p) / m;
        double u = rng.next_uniform();
        return u <= p ? 0.0 : std::log((1.0 - p) / (1.0 - u)) / beta;
    }

    HestonParams p_;
    int years_, spy_;
    std::uint64_t seed_;
    VarianceScheme scheme_;
};

// Materialized batch for algorithms that need all paths at once (the
// regression-based dynamic pricer).
struct ScenarioBatch {
    int years = 0;
    std::size_t n_paths = 0;
    std::vector<IntervalData> data;

    const IntervalData* path(std::size_t p) const {
        return data.data() + p * std::size_t(years);
    }

    static ScenarioBatch fill(const ScenarioGenerator& gen, std::size_t n) {
        ScenarioBatch b;
        b.years = gen.years();
        b.n_paths = n;
        b.data.resize(n * std::size_t(b.years));
        for (std::size_t p = 0; p < n; ++p)
            gen.path(p, b.data.data() + p * std::size_t(b.years));
        return b;
    }
};

} // namespace glwb
