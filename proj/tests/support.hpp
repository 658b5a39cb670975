#pragma once

// Shared fixtures and reference implementations for the test suites. The
// reference code takes its own route: long double complex arithmetic and
// dense sign scans instead of the scaled sweep.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "lovewave/dispersion.hpp"
#include "lovewave/medium.hpp"

namespace testkit {

using lovewave::Medium;

inline Medium medium_a() { return lovewave::make_medium_from_velocity({1000, 10000}, {1, 1}, {100}); }
inline Medium medium_b() { return lovewave::make_medium_from_velocity({1000, 1818, 10000}, {1, 1, 1}, {100, 100}); }
inline Medium medium_b_swapped() {
    return lovewave::make_medium_from_velocity({1818, 1000, 10000}, {1, 1, 1}, {100, 100});
}

// Cutoff spacing of a single layer over a half-space.
inline double n1_cutoff(int ell, double c1, double c2, double h) {
    return (ell - 1) * std::numbers::pi * c1 * c2 / (h * std::sqrt(c2 * c2 - c1 * c1));
}

// Reduced dispersion function of one layer over a half-space, written out by hand.
inline double n1_dispersion(double mu1, double mu2, double c1, double c2, double h, double omega, double y) {
    const double e = std::sqrt(y * y - 1.0 / (c2 * c2));
    const double s1 = 1.0 / (c1 * c1);
    if (y * y < s1) {
        const double a = std::sqrt(s1 - y * y);
        return mu2 * e * std::cos(omega * a * h) - mu1 * a * std::sin(omega * a * h);
    }
    const double a = std::sqrt(y * y - s1);
    return mu2 * e * std::cosh(omega * a * h) + mu1 * a * std::sinh(omega * a * h);
}

// Dispersion function through complex 2x2 transfer matrices in long double.
// Only usable where nothing overflows; returns the unscaled value.
inline long double complex_dispersion(const Medium& m, double omega, double y) {
    using cl = std::complex<long double>;
    const long double w = omega, yy = y;
    cl p = 1.0L, q = 0.0L;
    for (int j = 0; j < m.n; ++j) {
        const long double s = m.slowness[j];
        const cl nu = std::conj(std::sqrt(cl((yy - s) * (yy + s), 0.0L)));
        const cl x = w * nu * static_cast<long double>(m.thickness[j]);
        const long double mu = m.mu[j];
        cl np, nq;
        if (std::abs(nu) == 0.0L) {
            np = p + q * w * static_cast<long double>(m.thickness[j]) / mu;
            nq = q;
        } else {
            np = std::cosh(x) * p + std::sinh(x) / (mu * nu) * q;
            nq = mu * nu * std::sinh(x) * p + std::cosh(x) * q;
        }
        p = np;
        q = nq;
    }
    const long double s = m.slowness[m.n];
    const long double e = std::sqrt(std::max(0.0L, (yy - s) * (yy + s)));
    return static_cast<long double>(m.mu[m.n]) * e * p.real() + q.real();
}

// Counts sign changes of the reference dispersion function on a uniform
// slowness grid. Exact when the grid resolves every root.
inline int dense_root_count(const Medium& m, double omega, double y_lo, double y_hi, int nodes) {
    int count = 0;
    long double prev = complex_dispersion(m, omega, y_lo);
    for (int i = 1; i <= nodes; ++i) {
        const double y = y_lo + (y_hi - y_lo) * i / nodes;
        const long double v = complex_dispersion(m, omega, y);
        if ((prev < 0) != (v < 0) && v != 0) ++count;
        if (v != 0) prev = v;
    }
    return count;
}

// Counting-law prediction, summed directly.
inline double weyl_sum(const Medium& m, double omega, double y) {
    double acc = 0.0;
    for (int j = 0; j < m.n; ++j) {
        const double s = m.slowness[j];
        if (y < s) acc += std::sqrt(s * s - y * y) * m.thickness[j];
    }
    return omega * acc / std::numbers::pi;
}

// Small seeded generator for property tests.
struct Gen {
    std::mt19937_64 eng;
    explicit Gen(std::uint64_t seed) : eng(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    }
    int integer(int lo, int hi) { return lo + static_cast<int>(eng() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    // Valid medium with n layers, at least one layer slower than the half-space.
    Medium medium(int n) {
        std::vector<double> c, rho, t;
        for (int j = 0; j < n; ++j) {
            c.push_back(uniform(500.0, 4000.0));
            rho.push_back(uniform(1.0, 3.0));
            t.push_back(uniform(10.0, 200.0));
        }
        c.push_back(uniform(4500.0, 8000.0));
        rho.push_back(uniform(1.0, 3.0));
        return lovewave::make_medium_from_velocity(c, rho, t);
    }

    // Slowness strictly inside (1/c_inf, 1/c_min).
    double slowness(const Medium& m) {
        return uniform(m.y_min() + 1e-6 * (m.y_max() - m.y_min()), m.y_max() - 1e-6 * (m.y_max() - m.y_min()));
    }
};

// Zero counts of omega -> f(omega, y) for two layers both oscillatory at y,
// over consecutive windows of length pi/m anchored where the coefficient of
// the fast oscillation vanishes. m and M are the smaller and larger of the
// two layer phases per unit omega.
struct WindowCounts {
    double m = 0.0, big_m = 0.0;
    std::vector<double> starts;
    std::vector<int> counts;
};

inline WindowCounts window_zero_counts(const Medium& med, double y, double omega_from, int windows) {
    WindowCounts out;
    const double a1 = std::sqrt(med.slowness[0] * med.slowness[0] - y * y);
    const double a2 = std::sqrt(med.slowness[1] * med.slowness[1] - y * y);
    const double e3 = std::sqrt(y * y - med.slowness[2] * med.slowness[2]);
    const double p1 = a1 * med.thickness[0], p2 = a2 * med.thickness[1];
    const double g1 = med.mu[0] * a1, g2 = med.mu[1] * a2, g3 = med.mu[2] * e3;
    const bool top_fast = p1 >= p2;
    out.m = std::min(p1, p2);
    out.big_m = std::max(p1, p2);
    // anchors solve tan(omega m) = -gamma
    const double gamma = top_fast ? g2 / g3 : g2 * g2 / (g1 * g3);
    const double period = std::numbers::pi / out.m;
    const double shift = (std::numbers::pi - std::atan(gamma)) / out.m;
    double start = shift + period * std::ceil((omega_from - shift) / period);
    auto sign_at = [&](double w) { return lovewave::dispersion_value(med, w, y).sign; };
    const double step = period / (64.0 * (out.big_m / out.m + 1.0));
    for (int k = 0; k < windows; ++k, start += period) {
        // prev == 0 right after an exact zero, so it is not counted twice
        int prev = sign_at(start);
        int zeros = prev == 0 ? 1 : 0;
        const int nodes = static_cast<int>(std::ceil(period / step));
        for (int i = 1; i <= nodes; ++i) {
            const int s = sign_at(start + period * i / nodes);
            if (i == nodes && s == 0) break;  // belongs to the next window
            if (s == 0 || (prev != 0 && s != prev)) ++zeros;
            prev = s;
        }
        out.starts.push_back(start);
        out.counts.push_back(zeros);
    }
    return out;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testkit
