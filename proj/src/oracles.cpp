#include "lovewave/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include <Eigen/Dense>
#include <lapacke.h>

#include "lovewave/branch.hpp"
#include "lovewave/dispersion.hpp"
#include "rng.hpp"

namespace lovewave {

namespace {

using cd = std::complex<double>;

// Log magnitude and unit phase of a complex product, so that large and small
// factors can be combined without overflow.
struct LogComplex {
    double log_abs = 0.0;
    cd phase{1.0, 0.0};

    void mul(cd z) {
        const double a = std::abs(z);
        log_abs += std::log(a);
        phase *= z / a;
    }
    void div(cd z) {
        const double a = std::abs(z);
        log_abs -= std::log(a);
        phase *= a / z;
    }
};

}  // namespace

DeterminantValue determinant_oracle_scaled(const Medium& m, double omega, double k) {
    if (!(omega > 0.0)) throw OutOfRange("omega must be positive");
    const double y = k / omega;
    if (!(y > m.y_min() && y < m.y_max())) {
        throw OutOfRange("slowness " + format_number(y) + " outside (1/c_inf, 1/c_min)");
    }
    const int n = m.n;
    std::vector<cd> nu(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double s = m.slowness[j];
        if (std::abs(y - s) <= 1e-12 * s) {
            throw DegeneratePoint("lateral wavenumber of layer " + std::to_string(j + 1) + " vanishes");
        }
        // nonpositive imaginary part in oscillatory layers
        nu[j] = omega * std::conj(std::sqrt(cd((y - s) * (y + s), 0.0)));
    }

    const int size = 2 * n;
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(size, size);
    // Row pair b matches phi and mu phi' at the bottom of layer b.
    mat(0, 0) = 2.0 * std::cosh(nu[0] * m.thickness[0]);
    mat(1, 0) = 2.0 * m.mu[0] * nu[0] * std::sinh(nu[0] * m.thickness[0]);
    for (int lay = 1; lay < n; ++lay) {
        const cd a = m.mu[lay] * nu[lay];
        const double top = m.depth[lay], bottom = m.depth[lay + 1];
        const int c = 2 * lay - 1;
        mat(2 * lay - 2, c) = -std::exp(-nu[lay] * top);
        mat(2 * lay - 2, c + 1) = -std::exp(nu[lay] * top);
        mat(2 * lay - 1, c) = a * std::exp(-nu[lay] * top);
        mat(2 * lay - 1, c + 1) = -a * std::exp(nu[lay] * top);
        mat(2 * lay, c) = std::exp(-nu[lay] * bottom);
        mat(2 * lay, c + 1) = std::exp(nu[lay] * bottom);
        mat(2 * lay + 1, c) = -a * std::exp(-nu[lay] * bottom);
        mat(2 * lay + 1, c + 1) = a * std::exp(nu[lay] * bottom);
    }
    const double stack = m.bottom();
    mat(size - 2, size - 1) = -std::exp(-nu[n] * stack);
    mat(size - 1, size - 1) = m.mu_inf() * nu[n] * std::exp(-nu[n] * stack);

    if (!mat.allFinite()) throw NumericalError("determinant entries overflow at omega " + format_number(omega));
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
    const Eigen::MatrixXcd& lu_u = lu.matrixLU();
    LogComplex det;
    double spread = 0.0;
    for (int i = 0; i < size; ++i) {
        const cd d = lu_u(i, i);
        if (d == 0.0) {
            DeterminantValue z;
            return z;
        }
        det.mul(d);
        double row = 0.0;
        for (int j = i; j < size; ++j) row = std::max(row, std::abs(lu_u(i, j)));
        spread += row / std::abs(d);
    }
    det.phase *= lu.permutationP().determinant();

    // e^{nu_inf H} / (2^n prod_{layers 2..n} mu nu), then / omega
    det.log_abs += nu[n].real() * stack - n * std::numbers::ln2 - std::log(omega);
    for (int lay = 1; lay < n; ++lay) det.div(m.mu[lay] * nu[lay]);

    DeterminantValue out;
    out.log_scale = det.log_abs;
    out.value = det.phase.real();
    out.imag_ratio = std::abs(det.phase.imag()) / spread;
    if (out.imag_ratio > 1e-8) {
        throw NonRealResult("determinant has imaginary part " + format_number(out.imag_ratio) +
                            " relative to its rounding scale");
    }
    return out;
}

double determinant_oracle(const Medium& m, double omega, double k) {
    const DeterminantValue d = determinant_oracle_scaled(m, omega, k);
    return d.value * std::exp(d.log_scale);
}

namespace {

// Integral over [a, b] of a property that is constant on each layer.
double layer_integral(const Medium& m, const std::vector<double>& prop, double a, double b,
                      const std::function<double(double)>& g) {
    double acc = 0.0;
    for (int j = 0; j <= m.n && a < b; ++j) {
        const double top = m.depth[j];
        const double bottom = j < m.n ? m.depth[j + 1] : b;
        const double lo = std::max(a, top), hi = std::min(b, bottom);
        if (hi > lo) acc += (hi - lo) * g(prop[j]);
    }
    return acc;
}

}  // namespace

std::vector<double> fd_eigen_oracle(const Medium& m, double omega, const FdOptions& opts) {
    if (!(omega > 0.0)) throw OutOfRange("omega must be positive");
    if (!(opts.depth_factor >= 3.0)) throw ConfigError("depth_factor must be at least 3");
    if (opts.grid_points < 2000) throw ConfigError("grid_points must be at least 2000");
    if (!(opts.y_margin > 0.0)) throw ConfigError("y_margin must be positive");

    const double stack = m.bottom();
    const double s_inf = m.y_min();
    const double y_floor = s_inf * (1.0 + opts.y_margin);
    const double nu_floor = omega * std::sqrt((y_floor - s_inf) * (y_floor + s_inf));
    const double depth = opts.depth_factor / nu_floor;

    const int cells_top = opts.grid_points / 2;
    const int cells_deep = opts.grid_points - cells_top;
    const double h = stack / cells_top;
    // Stretch the half-space cells geometrically, starting from the layer spacing.
    double beta = 0.0;
    if (depth / cells_deep > h) {
        auto first_cell = [&](double b) { return depth * std::expm1(b / cells_deep) / std::expm1(b); };
        double lo = 1e-12, hi = 700.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (first_cell(mid) > h ? lo : hi) = mid;
        }
        beta = 0.5 * (lo + hi);
    }
    std::vector<double> z(opts.grid_points + 1);
    for (int i = 0; i <= cells_top; ++i) z[i] = h * i;
    for (int i = 1; i <= cells_deep; ++i) {
        const double s = static_cast<double>(i) / cells_deep;
        z[cells_top + i] = stack + (beta > 0.0 ? depth * std::expm1(beta * s) / std::expm1(beta) : depth * s);
    }

    // Unknowns at z[0..N-1]; phi(z[N]) = 0.
    const int cells = opts.grid_points;
    std::vector<double> stiff(cells);  // harmonic-mean mu over each cell, divided by its width
    for (int i = 0; i < cells; ++i) {
        // harmonic mean over the cell is width / int(1/mu), so mean / width = 1 / int(1/mu)
        stiff[i] = 1.0 / layer_integral(m, m.mu, z[i], z[i + 1], [](double v) { return 1.0 / v; });
    }
    std::vector<double> diag(cells), off(cells - 1);
    for (int i = 0; i < cells; ++i) {
        const double a = i > 0 ? 0.5 * (z[i] + z[i - 1]) : 0.0;
        const double b = 0.5 * (z[i] + z[i + 1]);
        const double mass_rho = layer_integral(m, m.rho, a, b, [](double v) { return v; });
        const double mass_mu = layer_integral(m, m.mu, a, b, [](double v) { return v; });
        const double k_ii = (i > 0 ? stiff[i - 1] : 0.0) + stiff[i] - omega * omega * mass_rho;
        diag[i] = k_ii / mass_mu;
        if (i + 1 < cells) {
            const double b2 = 0.5 * (z[i + 1] + z[i + 2]);
            const double mass_next = layer_integral(m, m.mu, b, b2, [](double v) { return v; });
            off[i] = -stiff[i] / std::sqrt(mass_mu * mass_next);
        }
    }

    // lambda = -k^2 over (-omega^2 / c_min^2, -omega^2 / c_inf^2)
    const double vl = -std::pow(omega * m.y_max(), 2);
    const double vu = -std::pow(omega * s_inf, 2);
    lapack_int found = 0, nsplit = 0;
    std::vector<double> w(cells);
    std::vector<lapack_int> iblock(cells), isplit(cells);
    const lapack_int info = LAPACKE_dstebz('V', 'E', cells, vl, vu, 0, 0, 2.0 * LAPACKE_dlamch('S'), diag.data(), off.data(), &found,
                                           &nsplit, w.data(), iblock.data(), isplit.data());
    if (info != 0) throw NumericalError("tridiagonal eigensolver failed with code " + std::to_string(info));
    std::vector<double> ks;
    for (lapack_int i = 0; i < found; ++i) {
        if (w[i] > vl && w[i] < vu) ks.push_back(std::sqrt(-w[i]));
    }
    std::sort(ks.begin(), ks.end(), std::greater<>());
    return ks;
}

Medium random_medium(int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("a medium needs at least one layer");
    std::mt19937_64 gen(seed);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * detail::unit_uniform(gen); };
    std::vector<double> c, rho, thickness;
    for (int j = 0; j < n; ++j) {
        c.push_back(draw(800.0, 4000.0));
        rho.push_back(draw(1500.0, 3000.0));
        thickness.push_back(draw(20.0, 200.0));
    }
    c.push_back(draw(4500.0, 6000.0));
    rho.push_back(draw(1500.0, 3000.0));
    return make_medium_from_velocity(c, rho, thickness);
}

double oracle_deviation(const Medium& m, double omega, double y) {
    const DeterminantValue d = determinant_oracle_scaled(m, omega, omega * y);
    const PQState s = pq_state(m, omega, y);
    const double a = m.mu_inf() * lateral_wavenumber(m, m.n, y).magnitude * s.p;
    const double f = a + s.q;
    const double det = d.value * std::exp(d.log_scale - s.log_scale);
    return std::abs(det - f) / (std::abs(a) + std::abs(s.q));
}

EquivalenceSummary oracle_equivalence(const Medium& m, int samples, std::uint64_t seed, double omega_min,
                                      double omega_max) {
    if (samples < 1) throw ConfigError("need at least one sample");
    if (!(omega_min > 0.0 && omega_max >= omega_min)) throw ConfigError("bad omega range");
    std::mt19937_64 gen(seed);
    EquivalenceSummary out;
    int attempts = 0;
    while (out.samples < samples) {
        if (++attempts > 100 * samples) throw DegeneratePoint("could not draw enough generic points");
        const double w = omega_min + (omega_max - omega_min) * detail::unit_uniform(gen);
        const double y = m.y_min() + (m.y_max() - m.y_min()) * detail::unit_uniform(gen);
        if (!(y > m.y_min() && y < m.y_max())) continue;
        double dev = 0.0;
        try {
            dev = oracle_deviation(m, w, y);
        } catch (const DegeneratePoint&) {
            ++out.degenerate_skipped;
            continue;
        }
        ++out.samples;
        if (!(dev <= out.max_deviation)) {
            out.max_deviation = dev;
            out.worst_omega = w;
            out.worst_y = y;
        }
    }
    return out;
}

}  // namespace lovewave
