#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "lovewave/branch.hpp"
#include "lovewave/dispersion.hpp"
#include "lovewave/spectral.hpp"
#include "support.hpp"

using namespace lovewave;
using testkit::rel;

namespace {

const BranchSet& trace_a() {
    static const BranchSet b = trace_branches(testkit::medium_a(), make_omega_grid(0.25, 1800, 0.25));
    return b;
}

const BranchSet& trace_b() {
    static const BranchSet b = trace_branches(testkit::medium_b(), make_omega_grid(0.25, 1800, 0.25));
    return b;
}

// Cutoff index: number of branches of one layer over a half-space at 1/c_inf.
int n1_count(double omega) {
    return static_cast<int>(std::floor(omega * std::sqrt(1e-6 - 1e-8) * 100.0 / std::numbers::pi)) + 1;
}

void check_branch_invariants(const BranchSet& b, const Medium& m) {
    std::size_t violations = 0;
    for (const Branch& br : b.branches) {
        for (std::size_t i = 0; i < br.y.size(); ++i) {
            if (!(br.y[i] >= m.y_min() && br.y[i] < m.y_max())) ++violations;
            if (i > 0 && !(br.y[i] > br.y[i - 1])) ++violations;
            if (i > 0 && !(br.omega[i] > br.omega[i - 1])) ++violations;
        }
    }
    for (std::size_t i = 0; i < b.omega_grid.size(); ++i) {
        const std::vector<double> ys = b.slownesses_at(i);
        if (static_cast<int>(ys.size()) != b.counts[i]) ++violations;
        for (std::size_t l = 1; l < ys.size(); ++l) {
            if (!(ys[l] < ys[l - 1])) ++violations;
        }
    }
    // rank is the branch identity: branch l holds the l-th largest root
    for (std::size_t l = 1; l < b.branches.size(); ++l) {
        const Branch& up = b.branches[l - 1];
        const Branch& lo = b.branches[l];
        const std::size_t off = up.omega.size() - lo.omega.size();
        for (std::size_t i = 0; i < lo.y.size(); ++i) {
            if (up.omega[off + i] != lo.omega[i] || !(lo.y[i] < up.y[off + i])) ++violations;
        }
    }
    CHECK(violations == 0);
}

}  // namespace

TEST_CASE("root counts of one layer") {
    const Medium a = testkit::medium_a();
    CHECK(roots_at_omega(a, 15.0).size() == 1);
    CHECK(roots_at_omega(a, 100.0).size() == 4);
    CHECK(roots_at_omega(a, 1000.0).size() == 32);
    for (double w : {15.0, 100.0, 1000.0}) CHECK(static_cast<int>(roots_at_omega(a, w).size()) == n1_count(w));
}

TEST_CASE("roots satisfy the tangent form") {
    const Medium a = testkit::medium_a();
    const std::vector<double> roots = roots_at_omega(a, 100.0);
    REQUIRE(roots.size() == 4);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const double lo = i + 1 < roots.size() ? 0.5 * (roots[i] + roots[i + 1]) : a.y_min() * (1 + 1e-9);
        const double hi = i > 0 ? 0.5 * (roots[i] + roots[i - 1]) : a.y_max() * (1 - 1e-9);
        const double y = refine_root(a, 100.0, {lo, hi});
        CHECK(rel(y, roots[i]) < 1e-11);
        const double e = std::sqrt(y * y - 1e-8), q = std::sqrt(1e-6 - y * y);
        const double lhs = std::tan(100.0 * 100.0 * q);
        const double rhs = 1e8 / 1e6 * e / q;
        CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("bracket errors") {
    const Medium a = testkit::medium_a();
    const std::vector<double> roots = roots_at_omega(a, 100.0);
    // two roots inside: equal signs at the ends
    CHECK_THROWS_AS(refine_root(a, 100.0, {roots[2] * 0.999999, roots[1] * 1.000001}), BadBracket);
    // order of the bracket ends does not matter
    const double lo = 0.5 * (roots[1] + roots[2]), hi = 0.5 * (roots[0] + roots[1]);
    CHECK(refine_root(a, 100.0, {hi, lo}) == doctest::Approx(roots[1]).epsilon(1e-12));
}

TEST_CASE("bracket across a layer slowness still converges") {
    const Medium b = testkit::medium_b();
    const double s = b.slowness[1];
    bool found = false;
    for (double w = 10.0; w < 400.0 && !found; w += 1.0) {
        const std::vector<double> r = roots_at_omega(b, w);
        for (std::size_t i = 0; i < r.size() && !found; ++i) {
            const double lo = i + 1 < r.size() ? 0.5 * (r[i] + r[i + 1]) : b.y_min() * (1 + 1e-9);
            const double hi = i > 0 ? 0.5 * (r[i] + r[i - 1]) : b.y_max() * (1 - 1e-9);
            if (!(lo < s && s < hi) || std::abs(r[i] - s) < 1e-6 * s) continue;
            found = true;
            const double y = refine_root(b, w, {lo, hi});
            CHECK(rel(y, r[i]) < 1e-11);
            const DispersionValue d = dispersion_value(b, w, y);
            const PQState st = pq_state(b, w, y);
            const double size = std::abs(b.mu_inf() * lateral_wavenumber(b, b.n, y).magnitude * st.p) + std::abs(st.q);
            CHECK(std::abs(d.value) < 1e-8 * size);
        }
    }
    CHECK(found);
}

TEST_CASE("cutoffs of one layer") {
    const Medium a = testkit::medium_a();
    const std::vector<double> cut = cutoff_frequencies(a, 20);
    REQUIRE(cut.size() == 20);
    CHECK(cut[0] == 0.0);
    CHECK(cut[1] == doctest::Approx(31.574194169982775).epsilon(1e-10));
    CHECK(cut[2] == doctest::Approx(63.14838833996555).epsilon(1e-10));
    for (int l = 2; l <= 20; ++l) CHECK(rel(cut[l - 1], testkit::n1_cutoff(l, 1000, 10000, 100)) < 1e-9);

    // zeros in omega at 1/c_inf are p pi / (|nu_1| H)
    const double nu = std::sqrt(1e-6 - 1e-8);
    for (int p = 1; p < 20; ++p) CHECK(rel(cut[p], p * std::numbers::pi / (nu * 100.0)) < 1e-9);

    const std::vector<double> upto = cutoffs_up_to(a, 100.0);
    CHECK(upto.size() == 4);
    CHECK(cutoffs_up_to(a, 0.0) == std::vector<double>{0.0});
    CHECK_THROWS_AS(cutoff_frequencies(a, 0), ConfigError);
}

TEST_CASE("two-layer cutoffs are where the root count steps up") {
    const Medium b = testkit::medium_b();
    const std::vector<double> cut = cutoffs_up_to(b, 400.0);
    REQUIRE(cut.size() > 5);
    for (std::size_t l = 1; l < cut.size(); ++l) {
        CHECK(roots_at_omega(b, cut[l] - 0.25).size() == l);
        CHECK(roots_at_omega(b, cut[l] + 0.25).size() == l + 1);
    }
}

TEST_CASE("scan options validation") {
    RootScanOptions o;
    CHECK_NOTHROW(o.validate());
    o.phase_safety = 1.0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    o = {};
    o.refine_tol = 0.0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    o = {};
    o.y_margin = 0.5;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    CHECK_THROWS_AS(roots_at_omega(testkit::medium_a(), 0.0), OutOfRange);
}

TEST_CASE("omega grids") {
    const std::vector<double> g = make_omega_grid(0.25, 1800, 0.25);
    CHECK(g.size() == 7200);
    CHECK(g.front() == 0.25);
    CHECK(g.back() == 1800.0);
    CHECK(make_omega_grid(1, 1, 1).size() == 1);
    CHECK_THROWS_AS(make_omega_grid(0, 10, 1), ConfigError);
    CHECK_THROWS_AS(make_omega_grid(1, 10, 0), ConfigError);
    CHECK_THROWS_AS(make_omega_grid(10, 1, 1), ConfigError);
    CHECK_THROWS_AS(trace_branches(testkit::medium_a(), {1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(trace_branches(testkit::medium_a(), {0.0, 1.0}), ConfigError);
}

TEST_CASE("one-layer trace to 1800") {
    const BranchSet& b = trace_a();
    // 1800 |nu_1| H / pi = 57.006..., so 58 branches are present
    CHECK(b.size() == 58);
    CHECK(static_cast<std::size_t>(n1_count(1800.0)) == b.size());
    check_branch_invariants(b, testkit::medium_a());
    for (std::size_t l = 0; l < b.size(); ++l) {
        CHECK(b.cutoff_observed[l]);
        CHECK(rel(b.cutoffs[l], testkit::n1_cutoff(static_cast<int>(l) + 1, 1000, 10000, 100)) < 1e-9 * (l + 1));
    }
    CHECK(b.cutoffs[0] == 0.0);
    for (std::size_t i = 0; i < b.omega_grid.size(); i += 97) {
        CHECK(b.counts[i] == mode_count(testkit::medium_a(), b.omega_grid[i], 1e-4 * (1 + 1e-9)));
    }
}

TEST_CASE("two-layer trace to 1800") {
    const BranchSet& b = trace_b();
    check_branch_invariants(b, testkit::medium_b());
    CHECK(std::abs(static_cast<double>(b.size()) - testkit::weyl_sum(testkit::medium_b(), 1800.0, 1e-4)) <= 2.0);
    // slownesses pile up below 1/1000 and below 1/1818
    const std::vector<double> ys = b.slownesses_at(b.omega_grid.size() - 1);
    int near_top = 0, near_mid = 0;
    for (double y : ys) {
        if (y > 0.98e-3) ++near_top;
        if (y > 0.98 / 1818.0 && y < 1.0 / 1818.0) ++near_mid;
    }
    CHECK(near_top >= 8);
    CHECK(near_mid >= 4);
}

TEST_CASE("roots are simple and stay off the top endpoint") {
    testkit::Gen gen(61);
    RootScanOptions opts;
    for (int trial = 0; trial < 40; ++trial) {
        const Medium m = gen.medium(gen.integer(1, 4));
        const double omega = gen.uniform(1.0, 300.0);
        const std::vector<double> r = roots_at_omega(m, omega, opts);
        for (std::size_t i = 0; i < r.size(); ++i) {
            CHECK(r[i] < m.y_max() * (1 - opts.y_margin));
            CHECK(r[i] > m.y_min() * (1 + opts.y_margin));
            if (i > 0) CHECK(r[i - 1] - r[i] > 10.0 * opts.refine_tol * r[i - 1]);
        }
        // root count agrees with a dense sign scan of an independent evaluation
        if (omega < 80.0) {
            CHECK(static_cast<int>(r.size()) ==
                  testkit::dense_root_count(m, omega, m.y_min() * (1 + opts.y_margin), m.y_max() * (1 - opts.y_margin), 40000));
        }
    }
}

TEST_CASE("branch and cutoff CSV") {
    const BranchSet b = trace_branches(testkit::medium_a(), make_omega_grid(10, 100, 10));
    std::ostringstream bs, cs;
    write_branches_csv(bs, b);
    write_cutoffs_csv(cs, b);
    std::istringstream in(bs.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "ell,omega,y,k");
    int prev_ell = 0;
    double prev_w = 0.0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.find("nan") == std::string::npos);
        CHECK(line.find("inf") == std::string::npos);
        int ell = 0;
        double w = 0.0, y = 0.0, k = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &ell, &w, &y, &k) == 4);
        CHECK((ell > prev_ell || (ell == prev_ell && w > prev_w)));
        CHECK(k == doctest::Approx(w * y).epsilon(1e-15));
        prev_ell = ell;
        prev_w = w;
        ++rows;
    }
    std::size_t expected = 0;
    for (const Branch& br : b.branches) expected += br.y.size();
    CHECK(rows == expected);
    CHECK(cs.str().rfind("ell,omega_ell\n1,0\n2,31.57419416998", 0) == 0);
}

TEST_CASE("numbers print with round-trip precision") {
    testkit::Gen gen(67);
    for (int i = 0; i < 1000; ++i) {
        const double v = gen.log_uniform(1e-300, 1e300) * (gen.integer(0, 1) ? 1 : -1);
        CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
    }
    CHECK(format_number(0.25) == "0.25");
}
