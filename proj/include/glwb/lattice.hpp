// lattice.hpp -- recombining quadrinomial trees matching the first three
// conditional moments: the general Gaussian-transition construction, the
// Heston variance tree (with probability repair and a two-moment fallback)
// and the exact Hull-White OU tree.  Levels can be truncated to the nodes
// whose reach probability from the root exceeds a threshold.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "models.hpp"

namespace glwb {

struct NodeTransition {
    std::array<std::int32_t, 4> succ{}; // positions within the next level's band
    std::array<double, 4> p{};
};

class Lattice {
  public:
    struct Level {
        int lo = 0, hi = -1;             // raw-index band kept at this level
        std::vector<double> value;       // factor value per band position
        std::vector<NodeTransition> trans; // empty on the last level
    };

    int steps() const { return int(levels_.size()) - 1; }
    double dt() const { return h_; }
    const Level& level(int n) const { return levels_[std::size_t(n)]; }
    int band_size(int n) const {
        const Level& L = levels_[std::size_t(n)];
        return L.hi - L.lo + 1;
    }
    double value(int n, int pos) const {
        return levels_[std::size_t(n)].value[std::size_t(pos)];
    }
    const NodeTransition& transition(int n, int pos) const {
        return levels_[std::size_t(n)].trans[std::size_t(pos)];
    }
    // Root is always position 0 of level 0.
    long fallback_count() const { return fallback_count_; }
    long repair_count() const { return repair_count_; }

    // General three-moment tree for a process with Gaussian transitions:
    // node values G0 + (j - 1.5 n) * sdev, j = 0..3n; `mean_fn(g)` is the
    // conditional mean of the next value given the current value g, and
    // `sdev` the (constant) conditional standard deviation per step.
    static Lattice gaussian(double g0, double sdev,
                            const std::function<double(double)>& mean_fn,
                            int N, double T, double cut_threshold = 0.0) {
        if (!(sdev > 0.0)) throw std::invalid_argument("lattice: sdev <= 0");
        Lattice lat;
        lat.h_ = T / N;
        lat.levels_.resize(std::size_t(N) + 1);
        auto raw_value = [&](int n, int j) { return g0 + (j - 1.5 * n) * sdev; };

        std::vector<double> reach{1.0};
        lat.levels_[0].lo = lat.levels_[0].hi = 0;
        lat.levels_[0].value = {g0};
        for (int n = 0; n < N; ++n) {
            Level& L = lat.levels_[std::size_t(n)];
            const int count = L.hi - L.lo + 1;
            L.trans.resize(std::size_t(count));
            const int next_max = 3 * (n + 1);
            std::vector<double> next_reach(std::size_t(next_max) + 1, 0.0);
            for (int pos = 0; pos < count; ++pos) {
                const double mu = mean_fn(L.value[std::size_t(pos)]);
                // first next-level node with value >= mu
                int jA = int(std::ceil((mu - g0) / sdev + 1.5 * (n + 1) - 1e-12));
                if (jA < 2 || jA + 1 > next_max)
                    throw std::runtime_error("lattice: mean outside next level span");
                const double gA = raw_value(n + 1, jA);
                const double d = gA - mu; // in [0, sdev)
                if (d < -1e-9 * sdev || d >= sdev * (1.0 + 1e-9))
                    throw std::runtime_error("lattice: bracketing violated");
                const double s = sdev, s3 = s * s * s;
                NodeTransition t;
                t.succ = {std::int32_t(jA), std::int32_t(jA - 1),
                          std::int32_t(jA + 1), std::int32_t(jA - 2)};
                t.p[0] = d * ((d - s) * (d - s) + s * s) / (2.0 * s3);       // A
                t.p[1] = (s - d) * (d * d + s * s) / (2.0 * s3);             // B
                t.p[2] = (s - d) * ((d - s) * (d - s) + 2.0 * s * s) / (6.0 * s3); // C
                t.p[3] = d * (2.0 * s * s + d * d) / (6.0 * s3);             // D
                for (int b = 0; b < 4; ++b)
                    next_reach[std::size_t(t.succ[std::size_t(b)])] +=
                        reach[std::size_t(pos)] * t.p[std::size_t(b)];
                L.trans[std::size_t(pos)] = t;
            }
            lat.finish_level(n, next_reach, reach, cut_threshold,
                             [&](int j) { return raw_value(n + 1, j); });
        }
        return lat;
    }

    // Degenerate single-node chain for a deterministic factor (e.g. a
    // Hull-White model with zero rate volatility).
    static Lattice constant(double value, int N, double T) {
        Lattice lat;
        lat.h_ = T / N;
        lat.levels_.resize(std::size_t(N) + 1);
        for (int n = 0; n <= N; ++n) {
            Level& L = lat.levels_[std::size_t(n)];
            L.lo = L.hi = 0;
            L.value = {value};
            if (n < N) {
                NodeTransition t;
                t.succ = {0, 0, 0, 0};
                t.p = {1.0, 0.0, 0.0, 0.0};
                L.trans = {t};
            }
        }
        return lat;
    }

    static Lattice hull_white(const HullWhiteParams& p, int N, double T,
                              double cut_threshold = 0.0) {
        const double h = T / N;
        const double H = std::exp(-p.k * h);
        const double K = std::sqrt((1.0 - std::exp(-2.0 * p.k * h)) / (2.0 * p.k));
        return gaussian(0.0, K, [H](double x) { return x * H; }, N, T,
                        cut_threshold);
    }

    static Lattice heston(const HestonParams& p, int N, double T,
                          double cut_threshold = 0.0) {
        if (!(p.omega > 0.0)) throw std::invalid_argument("lattice: omega <= 0");
        Lattice lat;
        lat.h_ = T / N;
        const double h = lat.h_;
        const double s = p.omega * std::sqrt(h) / 2.0; // sqrt-variance spacing
        const double sq0 = std::sqrt(p.V0);
        lat.levels_.resize(std::size_t(N) + 1);

        auto shift = [&](int n) {
            return std::max(0, int(std::floor(1.5 * n - sq0 / s)));
        };
        auto raw_value = [&](int n, int j) {
            double sv = sq0 + (j + shift(n) - 1.5 * n) * s;
            return sv > 0.0 ? sv * sv : 0.0;
        };

        std::vector<double> reach{1.0};
        lat.levels_[0].lo = lat.levels_[0].hi = 0;
        lat.levels_[0].value = {p.V0};
        for (int n = 0; n < N; ++n) {
            Level& L = lat.levels_[std::size_t(n)];
            const int count = L.hi - L.lo + 1;
            L.trans.resize(std::size_t(count));
            const int jn1 = shift(n + 1);
            const int next_max = 3 * (n + 1) - jn1;
            if (next_max < 3)
                throw std::runtime_error("lattice: too few nodes per level; "
                                         "increase the number of steps");
            auto next_value = [&](int j) { return raw_value(n + 1, j); };
            std::vector<double> next_reach(std::size_t(next_max) + 1, 0.0);
            for (int pos = 0; pos < count; ++pos) {
                CirMoments m = heston_moments(p, L.value[std::size_t(pos)], h);
                NodeTransition t = lat.heston_transition(m, sq0, s, n + 1, jn1,
                                                         next_max, next_value);
                for (int b = 0; b < 4; ++b)
                    next_reach[std::size_t(t.succ[std::size_t(b)])] +=
                        reach[std::size_t(pos)] * t.p[std::size_t(b)];
                L.trans[std::size_t(pos)] = t;
            }
            lat.finish_level(n, next_reach, reach, cut_threshold,
                             [&](int j) { return raw_value(n + 1, j); });
        }
        return lat;
    }

  private:
    double h_ = 0.0;
    std::vector<Level> levels_;
    long fallback_count_ = 0;
    long repair_count_ = 0;

    // Applies reach-probability cutting to level n+1, remaps this level's
    // successor indices into the kept band, and stores the next level values.
    template <typename ValueFn>
    void finish_level(int n, const std::vector<double>& next_reach,
                      std::vector<double>& reach, double cut_threshold,
                      ValueFn&& next_value) {
        int lo = 0, hi = int(next_reach.size()) - 1;
        if (cut_threshold > 0.0) {
            while (lo < hi && next_reach[std::size_t(lo)] < cut_threshold) ++lo;
            while (hi > lo && next_reach[std::size_t(hi)] < cut_threshold) --hi;
        }
        Level& nxt = levels_[std::size_t(n) + 1];
        nxt.lo = lo;
        nxt.hi = hi;
        nxt.value.resize(std::size_t(hi - lo) + 1);
        for (int j = lo; j <= hi; ++j)
            nxt.value[std::size_t(j - lo)] = next_value(j);
        Level& cur = levels_[std::size_t(n)];
        for (NodeTransition& t : cur.trans)
            for (int b = 0; b < 4; ++b) {
                int j = int(t.succ[std::size_t(b)]);
                j = std::min(std::max(j, lo), hi); // nearest kept node
                t.succ[std::size_t(b)] = std::int32_t(j - lo);
            }
        reach.assign(next_reach.begin() + lo, next_reach.begin() + hi + 1);
    }

    // Solves for probabilities over 4 distinct node values matching
    // (1, M1, M2, M3); returns false if any probability is materially
    // negative.
    static bool solve_four(const std::array<double, 4>& w, const CirMoments& m,
                           std::array<double, 4>& p) {
        // 4x4 Gaussian elimination on the Vandermonde system.
        double a[4][5];
        for (int c = 0; c < 4; ++c) {
            a[0][c] = 1.0;
            a[1][c] = w[std::size_t(c)];
            a[2][c] = w[std::size_t(c)] * w[std::size_t(c)];
            a[3][c] = a[2][c] * w[std::size_t(c)];
        }
        a[0][4] = 1.0; a[1][4] = m.m1; a[2][4] = m.m2; a[3][4] = m.m3;
        for (int col = 0; col < 4; ++col) {
            int piv = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
            if (std::abs(a[piv][col]) < 1e-300) return false;
            if (piv != col)
                for (int c = col; c < 5; ++c) std::swap(a[piv][c], a[col][c]);
            for (int r = 0; r < 4; ++r) {
                if (r == col) continue;
                double f = a[r][col] / a[col][col];
                for (int c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
            }
        }
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) {
            p[std::size_t(i)] = a[i][4] / a[i][i];
            if (p[std::size_t(i)] < -1e-10) return false;
            if (p[std::size_t(i)] < 0.0) p[std::size_t(i)] = 0.0;
            sum += p[std::size_t(i)];
        }
        for (auto& x : p) x /= sum;
        return true;
    }

    template <typename ValueFn>
    NodeTransition heston_transition(const CirMoments& m, double sq0, double s,
                                     int next_level, int jn1, int next_max,
                                     ValueFn&& raw_value) {
        // First node at the next level with value >= M1 (values increase with j).
        int gA = int(std::ceil((std::sqrt(m.m1) - sq0) / s +
                               1.5 * next_level - 1e-12));
        int jA = gA - jn1;
        jA = std::min(std::max(jA, 0), next_max);
        // Candidate window ordered by value: D < B < A < C.
        int base = jA - 2;
        base = std::min(std::max(base, 0), std::max(0, next_max - 3));
        const int iD = base, iB = base + 1, iA = base + 2, iC = base + 3;
        const int iE = iC + 1; // first node above C
        const int iF = iD - 1; // first node below D

        auto attempt = [&](int a, int b, int c, int d, NodeTransition& t) {
            std::array<int, 4> idx{a, b, c, d};
            for (int x : idx)
                if (x < 0 || x > next_max) return false;
            std::array<double, 4> w;
            for (int i = 0; i < 4; ++i)
                w[std::size_t(i)] = raw_value(idx[std::size_t(i)]);
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    if (w[std::size_t(i)] == w[std::size_t(j)]) return false;
            std::array<double, 4> p;
            if (!solve_four(w, m, p)) return false;
            for (int i = 0; i < 4; ++i) {
                t.succ[std::size_t(i)] = std::int32_t(idx[std::size_t(i)]);
                t.p[std::size_t(i)] = p[std::size_t(i)];
            }
            return true;
        };

        NodeTransition t;
        // Deterministic repair order: original, then single replacements
        // (A->E, B->F, C->E, D->F), then the four pairs.  When no node exists
        // below D, the D replacement goes upward (D->E) instead.
        const int dRep = (iF >= 0) ? iF : iE; // D->F, or D->E at the floor
        const std::array<std::array<int, 4>, 9> combos{{
            {iA, iB, iC, iD},
            {iE, iB, iC, iD},
            {iA, iF, iC, iD},
            {iA, iB, iE, iD},
            {iA, iB, iC, dRep},
            {iE, iF, iC, iD},
            {iE, iB, iC, dRep},
            {iA, iF, iE, iD},
            {iA, iB, iE, dRep},
        }};
        for (std::size_t c = 0; c < combos.size(); ++c) {
            if (attempt(combos[c][0], combos[c][1], combos[c][2], combos[c][3], t)) {
                if (c > 0) ++repair_count_;
                return t;
            }
        }
        // Extended repair: near the clamped floor the conditional law is so
        // skewed that both lower nodes must move down while the top extends
        // up; widen the window deterministically before giving up on the
        // third moment.
        for (int f = iD - 1; f >= 0; --f)
            for (int e = iE; e <= std::min(next_max, iE + 4); ++e)
                for (auto& mid : {std::array<int, 2>{iA, iC},
                                  std::array<int, 2>{iB, iC},
                                  std::array<int, 2>{iB, iA}})
                    if (attempt(mid[0], f, mid[1], e, t)) {
                        ++repair_count_;
                        return t;
                    }
        // Two-moment fallback on the original window (always well defined:
        // M1 lies in (value(B), value(A)] which is inside both pairs' spans).
        ++fallback_count_;
        const double wA = raw_value(iA), wB = raw_value(iB);
        const double wC = raw_value(iC), wD = raw_value(iD);
        double pAB = (m.m1 - wB) / (wA - wB);
        pAB = std::min(std::max(pAB, 0.0), 1.0);
        double pCD = (m.m1 - wD) / (wC - wD);
        pCD = std::min(std::max(pCD, 0.0), 1.0);
        t.succ = {std::int32_t(iA), std::int32_t(iB), std::int32_t(iC),
                  std::int32_t(iD)};
        t.p = {0.625 * pAB, 0.625 * (1.0 - pAB), 0.375 * pCD,
               0.375 * (1.0 - pCD)};
        return t;
    }
};

} // namespace glwb
