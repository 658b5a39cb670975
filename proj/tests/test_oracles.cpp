#include <doctest.h>

#include <cmath>

#include "lovewave/branch.hpp"
#include "lovewave/dispersion.hpp"
#include "lovewave/oracles.hpp"
#include "lovewave/spectral.hpp"
#include "support.hpp"

using namespace lovewave;
using testkit::rel;

namespace {

// Determinant scaled back to the unnormalized dispersion function.
double unscaled(const DeterminantValue& d) { return d.value * std::exp(d.log_scale); }

double max_fd_error(const Medium& m, double omega, int points) {
    FdOptions o;
    o.grid_points = points;
    const std::vector<double> fd = fd_eigen_oracle(m, omega, o);
    const std::vector<double> ys = roots_at_omega(m, omega);
    REQUIRE(fd.size() == ys.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) worst = std::max(worst, rel(fd[i], omega * ys[i]));
    return worst;
}

}  // namespace

TEST_CASE("determinant of one layer in closed form") {
    testkit::Gen gen(211);
    for (int trial = 0; trial < 200; ++trial) {
        const Medium m = gen.medium(1);
        const double omega = gen.uniform(1.0, 100.0);
        const double y = gen.slowness(m);
        const double ref = testkit::n1_dispersion(m.mu[0], m.mu[1], m.c[0], m.c[1], m.thickness[0], omega, y);
        const double e = std::sqrt(y * y - m.slowness[1] * m.slowness[1]);
        const double a = std::sqrt(std::abs(y * y - m.slowness[0] * m.slowness[0]));
        const double size = m.mu[1] * e * std::cosh(omega * a * m.thickness[0]) +
                            m.mu[0] * a * std::abs(std::sinh(omega * a * m.thickness[0]));
        const double size_osc = m.mu[1] * e + m.mu[0] * a;
        const double det = unscaled(determinant_oracle_scaled(m, omega, omega * y));
        const double scale = y < m.slowness[0] ? size_osc : size;
        CHECK(std::abs(det - ref) <= 1e-10 * scale);
    }
}

TEST_CASE("determinant matches the dispersion function for several layers") {
    for (int n = 1; n <= 5; ++n) {
        const Medium m = random_medium(n, 1000 + n);
        const EquivalenceSummary s = oracle_equivalence(m, 100, 17 * n);
        CHECK(s.samples == 100);
        CHECK(s.max_deviation < 1e-8);
    }
    testkit::Gen gen(223);
    for (int trial = 0; trial < 100; ++trial) {
        const Medium m = gen.medium(gen.integer(1, 5));
        const double omega = gen.uniform(1.0, 150.0), y = gen.slowness(m);
        double dev = 0.0;
        try {
            dev = oracle_deviation(m, omega, y);
        } catch (const DegeneratePoint&) {
            continue;
        }
        CHECK(dev < 1e-8);
        // the two routes agree in sign wherever the value is not tiny
        const DispersionValue v = dispersion_value(m, omega, y);
        const double det = determinant_oracle(m, omega, omega * y);
        if (std::abs(v.value) > 1e-6) CHECK((det > 0) == (v.sign > 0));
    }
}

TEST_CASE("determinant input checks") {
    const Medium b = testkit::medium_b();
    CHECK_THROWS_AS(determinant_oracle(b, 100.0, 100.0 / 1818.0), DegeneratePoint);
    CHECK_THROWS_AS(determinant_oracle(b, 100.0, 100.0 * 2e-3), OutOfRange);
    CHECK_THROWS_AS(determinant_oracle(b, 100.0, 100.0 * 1e-4), OutOfRange);
    CHECK_THROWS_AS(determinant_oracle(b, 0.0, 0.1), OutOfRange);
    // cosh of the evanescent layers runs past the double range
    CHECK_THROWS_AS(determinant_oracle(b, 1e6, 1e6 * 9e-4), NumericalError);
    CHECK(determinant_oracle_scaled(b, 100.0, 100.0 * 5e-4).imag_ratio < 1.0);
}

TEST_CASE("finite differences reproduce the one-layer roots") {
    const Medium a = testkit::medium_a();
    FdOptions o;
    const std::vector<double> fd = fd_eigen_oracle(a, 100.0, o);
    const std::vector<double> ys = roots_at_omega(a, 100.0);
    REQUIRE(ys.size() == 4);
    REQUIRE(fd.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(rel(fd[i], 100.0 * ys[i]) < 1e-3);
    for (std::size_t i = 1; i < 4; ++i) CHECK(fd[i] < fd[i - 1]);
}

TEST_CASE("finite differences converge at second order") {
    const Medium a = testkit::medium_a();
    const double e1 = max_fd_error(a, 100.0, 4000);
    const double e2 = max_fd_error(a, 100.0, 8000);
    const double e3 = max_fd_error(a, 100.0, 16000);
    CHECK(e1 / e2 >= 3.0);
    CHECK(e1 / e2 <= 5.0);
    CHECK(e2 / e3 >= 3.0);
    CHECK(e2 / e3 <= 5.0);
}

TEST_CASE("finite-difference count on two layers") {
    const Medium b = testkit::medium_b();
    const std::vector<double> fd = fd_eigen_oracle(b, 200.0);
    CHECK(static_cast<int>(fd.size()) == mode_count(b, 200.0, b.y_min()));
    const std::vector<double> ys = roots_at_omega(b, 200.0);
    REQUIRE(fd.size() == ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) CHECK(rel(fd[i], 200.0 * ys[i]) < 1e-2);
}

TEST_CASE("finite-difference options") {
    const Medium a = testkit::medium_a();
    FdOptions o;
    o.grid_points = 100;
    CHECK_THROWS_AS(fd_eigen_oracle(a, 100.0, o), ConfigError);
    o = FdOptions{};
    o.depth_factor = 1.0;
    CHECK_THROWS_AS(fd_eigen_oracle(a, 100.0, o), ConfigError);
    o = FdOptions{};
    o.y_margin = 0.0;
    CHECK_THROWS_AS(fd_eigen_oracle(a, 100.0, o), ConfigError);
    CHECK_THROWS_AS(fd_eigen_oracle(a, 0.0), OutOfRange);
}

TEST_CASE("random media") {
    const Medium m1 = random_medium(3, 42), m2 = random_medium(3, 42), m3 = random_medium(3, 43);
    CHECK(m1.mu == m2.mu);
    CHECK(m1.thickness == m2.thickness);
    CHECK(m1.mu != m3.mu);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Medium m = random_medium(4, seed);
        for (int j = 0; j < m.n; ++j) {
            CHECK(m.c[j] >= 800.0);
            CHECK(m.c[j] <= 4000.0);
            CHECK(m.thickness[j] >= 20.0);
            CHECK(m.thickness[j] <= 200.0);
        }
        CHECK(m.c_inf >= 4500.0);
        CHECK(m.rho[0] >= 1500.0);
    }
    CHECK_THROWS_AS(random_medium(0, 1), ConfigError);
    CHECK_THROWS_AS(oracle_equivalence(m1, 0, 1), ConfigError);
    CHECK_THROWS_AS(oracle_equivalence(m1, 10, 1, 5.0, 1.0), ConfigError);
}
