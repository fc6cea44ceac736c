// numerics.hpp -- small numerical kernels shared by the pricing engines:
// tridiagonal (Thomas) solves, inverse normal CDF, linear interpolation on
// monotone grids, and a least-squares fit used by the regression pricer.
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace glwb {

// Solves a tridiagonal system in place.  `lower[0]` and `upper[n-1]` are
// ignored.  The right-hand side `rhs` is overwritten with the solution.
// Scratch must have size >= n.
inline void solve_tridiagonal(const double* lower, const double* diag,
                              const double* upper, double* rhs,
                              std::size_t n, double* scratch) {
    double* c = scratch; // modified upper coefficients
    double piv = diag[0];
    if (piv == 0.0) throw std::runtime_error("tridiagonal: zero pivot");
    c[0] = upper[0] / piv;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i] * c[i - 1];
        if (piv == 0.0) throw std::runtime_error("tridiagonal: zero pivot");
        c[i] = upper[i] / piv;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] -= c[i] * rhs[i + 1];
}

// Acklam's rational approximation to the inverse standard normal CDF with a
// single Halley refinement; accurate to ~1e-15 over (0,1).
inline double inverse_normal_cdf(double p) {
    assert(p > 0.0 && p < 1.0);
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step against erfc for full double precision.
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x -= u / (1.0 + x * u / 2.0);
    return x;
}

// Linear interpolation of y(x) on a strictly increasing grid; clamps outside.
inline double interp_linear(const std::vector<double>& x,
                            const std::vector<double>& y, double xi) {
    if (xi <= x.front()) return y.front();
    if (xi >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), xi);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    double w = (xi - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

// Interpolation on a uniform grid [x0, x0 + (n-1)dx]; clamps outside.
inline double interp_uniform(double x0, double dx, const double* y,
                             std::size_t n, double xi) {
    double u = (xi - x0) / dx;
    if (u <= 0.0) return y[0];
    if (u >= double(n - 1)) return y[n - 1];
    std::size_t i = static_cast<std::size_t>(u);
    double w = u - double(i);
    return y[i] + w * (y[i + 1] - y[i]);
}

// Ordinary least squares via normal equations with column equilibration and
// a tiny ridge; adequate for the low-degree polynomial bases used here.
inline std::vector<double> least_squares(const std::vector<double>& X, // row-major n x k
                                         const std::vector<double>& y,
                                         std::size_t n, std::size_t k) {
    std::vector<double> scale(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += X[i * k + j] * X[i * k + j];
        scale[j] = s > 0.0 ? 1.0 / std::sqrt(s) : 1.0;
    }
    std::vector<double> G(k * k, 0.0), b(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double xp = X[i * k + p] * scale[p];
            b[p] += xp * y[i];
            for (std::size_t q = p; q < k; ++q)
                G[p * k + q] += xp * X[i * k + q] * scale[q];
        }
    }
    for (std::size_t p = 0; p < k; ++p) {
        G[p * k + p] += 1e-10;
        for (std::size_t q = 0; q < p; ++q) G[p * k + q] = G[q * k + p];
    }
    // Cholesky solve.
    std::vector<double> L(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = G[i * k + j];
            for (std::size_t m = 0; m < j; ++m) s -= L[i * k + m] * L[j * k + m];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("least_squares: not SPD");
                L[i * k + i] = std::sqrt(s);
            } else {
                L[i * k + j] = s / L[j * k + j];
            }
        }
    }
    std::vector<double> z(k);
    for (std::size_t i = 0; i < k; ++i) {
        double s = b[i];
        for (std::size_t m = 0; m < i; ++m) s -= L[i * k + m] * z[m];
        z[i] = s / L[i * k + i];
    }
    std::vector<double> beta(k);
    for (std::size_t i = k; i-- > 0;) {
        double s = z[i];
        for (std::size_t m = i + 1; m < k; ++m) s -= L[m * k + i] * beta[m];
        beta[i] = s / L[i * k + i];
    }
    for (std::size_t j = 0; j < k; ++j) beta[j] *= scale[j];
    return beta;
}

} // namespace glwb
