#include "lovewave/branch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "lovewave/dispersion.hpp"

namespace lovewave {

namespace {

constexpr int kMaxSplitDepth = 60;

// A point of a one-parameter scan: the cumulative root count and the sign
// of the dispersion function there.
struct Probe {
    double x = 0.0;
    int count = 0;
    DispersionValue f;
};

double true_ratio(const DispersionValue& a, const DispersionValue& b) {
    // f_a / f_b without forming either value
    return a.value / b.value * std::exp(a.log_scale - b.log_scale);
}

// Bisection on a sign change followed by one secant step.
double bisect_secant(const std::function<DispersionValue(double)>& f, double lo, double hi,
                     DispersionValue flo, DispersionValue fhi, double rel_tol) {
    if (flo.sign == 0) return lo;
    if (fhi.sign == 0) return hi;
    if (flo.sign == fhi.sign) throw BadBracket("dispersion function has equal signs at both ends");
    for (int it = 0; it < 200; ++it) {
        const double width = hi - lo;
        if (width <= rel_tol * std::max(std::abs(lo), std::abs(hi))) break;
        const double mid = lo + 0.5 * width;
        if (mid <= lo || mid >= hi) break;
        const DispersionValue fm = f(mid);
        if (fm.sign == 0) return mid;
        if (fm.sign == flo.sign) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    // secant through the final bracket: x = lo - f_lo (hi - lo) / (f_hi - f_lo)
    const double r = true_ratio(flo, fhi);  // f_lo / f_hi < 0
    const double t = r / (r - 1.0);
    double x = lo + t * (hi - lo);
    if (!(x > lo && x < hi)) x = lo + 0.5 * (hi - lo);
    return x;
}

// Resolves every root in a cell whose exact root count is known from the
// phase angle; cells holding several roots are split until each is bracketed.
class CellSolver {
public:
    CellSolver(std::function<Probe(double)> probe, std::function<DispersionValue(double)> value,
               double rel_tol)
        : probe_(std::move(probe)), value_(std::move(value)), rel_tol_(rel_tol) {}

    void solve(const Probe& a, const Probe& b, std::vector<double>& roots, int depth = 0) {
        const int c = std::abs(a.count - b.count);
        if (c == 0) return;
        if ((a.f.sign == 0 || b.f.sign == 0) && depth < kMaxSplitDepth) {
            // Step off exact zeros; a root that sits on an endpoint owned by
            // this cell shows up as a drop in the count.
            const Probe a2 = a.f.sign == 0 ? probe_(std::nextafter(a.x, b.x)) : a;
            const Probe b2 = b.f.sign == 0 ? probe_(std::nextafter(b.x, a.x)) : b;
            const int lost = c - std::abs(a2.count - b2.count);
            for (int i = 0; i < lost; ++i) roots.push_back(a.f.sign == 0 ? a.x : b.x);
            solve(a2, b2, roots, depth + 1);
            return;
        }
        const bool opposite = a.f.sign * b.f.sign < 0;
        if (c == 1 && opposite) {
            roots.push_back(bisect_secant(value_, a.x, b.x, a.f, b.f, rel_tol_));
            return;
        }
        const double mid = a.x + 0.5 * (b.x - a.x);
        if (depth >= kMaxSplitDepth || mid <= a.x || mid >= b.x) {
            // Roots closer than floating resolution: report them at the midpoint.
            for (int i = 0; i < c; ++i) roots.push_back(mid);
            return;
        }
        const Probe m = probe_(mid);
        solve(a, m, roots, depth + 1);
        solve(m, b, roots, depth + 1);
    }

private:
    std::function<Probe(double)> probe_;
    std::function<DispersionValue(double)> value_;
    double rel_tol_;
};

// Move x off an exact layer slowness so grid nodes never hit the degenerate matrix.
double avoid_layer_slowness(const Medium& m, double x, double lo, double hi) {
    for (int j = 0; j < m.n; ++j) {
        if (x == m.slowness[j]) {
            const double up = std::nextafter(x, hi);
            x = up < hi ? up : std::nextafter(x, lo);
        }
    }
    return x;
}

// Slowness nodes between y_lo and y_hi with bounded phase increments.
std::vector<double> phase_nodes(const Medium& m, double omega, double y_lo, double y_hi,
                                double safety) {
    const double phi_lo = oscillatory_phase(m, omega, y_lo);
    const double phi_hi = oscillatory_phase(m, omega, y_hi);
    const int cells = std::max(4, static_cast<int>(std::ceil((phi_lo - phi_hi) * safety / M_PI)));
    std::vector<double> nodes;
    nodes.reserve(cells + 1);
    nodes.push_back(y_lo);
    double left = y_lo;
    for (int i = 1; i < cells; ++i) {
        const double target = phi_lo - (phi_lo - phi_hi) * i / cells;
        double lo = left, hi = y_hi;
        for (int it = 0; it < 60 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (oscillatory_phase(m, omega, mid) > target) lo = mid; else hi = mid;
        }
        double node = avoid_layer_slowness(m, 0.5 * (lo + hi), y_lo, y_hi);
        if (node > nodes.back() && node < y_hi) {
            nodes.push_back(node);
            left = node;
        }
    }
    nodes.push_back(y_hi);
    return nodes;
}

}  // namespace

void RootScanOptions::validate() const {
    if (!(phase_safety >= 2.0)) throw ConfigError("phase_safety must be at least 2");
    if (!(refine_tol > 0.0)) throw ConfigError("refine_tol must be positive");
    if (!(y_margin >= 0.0 && y_margin < 0.5)) throw ConfigError("y_margin must lie in [0, 0.5)");
}

double refine_root(const Medium& m, double omega, std::pair<double, double> bracket, double refine_tol) {
    auto f = [&](double y) { return dispersion_value(m, omega, y); };
    double lo = std::min(bracket.first, bracket.second);
    double hi = std::max(bracket.first, bracket.second);
    const DispersionValue flo = f(lo), fhi = f(hi);
    if (flo.sign == fhi.sign) throw BadBracket("dispersion function has equal signs at both ends");
    return bisect_secant(f, lo, hi, flo, fhi, refine_tol);
}

std::vector<double> roots_in_interval(const Medium& m, double omega, double y_lo, double y_hi,
                                      const RootScanOptions& opts) {
    opts.validate();
    if (!(omega > 0.0)) throw OutOfRange("omega must be positive");
    std::vector<double> roots;
    if (!(y_lo < y_hi)) return roots;
    auto value = [&](double y) { return dispersion_value(m, omega, y); };
    auto probe = [&](double y) {
        return Probe{y, oscillation_count(m, omega, y), dispersion_value(m, omega, y)};
    };
    CellSolver solver(probe, value, opts.refine_tol);

    const std::vector<double> nodes = phase_nodes(m, omega, y_lo, y_hi, opts.phase_safety);
    Probe left = probe(nodes.front());
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        Probe right = probe(nodes[i]);
        solver.solve(left, right, roots);
        left = right;
    }
    if (left.f.sign == 0) roots.push_back(left.x);
    std::sort(roots.begin(), roots.end(), std::greater<>());
    return roots;
}

std::vector<double> roots_at_omega(const Medium& m, double omega, const RootScanOptions& opts) {
    const double y_lo = m.y_min() * (1.0 + opts.y_margin);
    const double y_hi = m.y_max() * (1.0 - opts.y_margin);
    return roots_in_interval(m, omega, y_lo, y_hi, opts);
}

namespace {

// Cutoffs in (0, omega_max], or the first `limit` of them when limit > 0.
std::vector<double> scan_cutoffs(const Medium& m, double omega_max, int limit,
                                 const RootScanOptions& opts) {
    opts.validate();
    const double y = m.y_min();
    std::vector<double> cut{0.0};
    if (limit == 1) return cut;
    const double rate = oscillatory_phase(m, 1.0, y);  // phase per unit omega
    const double step = M_PI / (opts.phase_safety * rate);
    auto value = [&](double w) { return dispersion_value(m, w, y); };
    auto probe = [&](double w) { return Probe{w, oscillation_count(m, w, y), value(w)}; };
    CellSolver solver(probe, value, opts.refine_tol);
    // At omega = 0 the count is exactly one: the fundamental branch starts there.
    Probe left{0.0, 1, value(0.0)};
    for (long i = 1;; ++i) {
        double w = step * static_cast<double>(i);
        if (omega_max > 0.0 && w > omega_max) w = omega_max;
        Probe right = probe(w);
        std::vector<double> found;
        solver.solve(left, right, found);
        std::sort(found.begin(), found.end());
        for (double r : found) {
            cut.push_back(r);
            if (limit > 0 && static_cast<int>(cut.size()) == limit) return cut;
        }
        left = right;
        if (omega_max > 0.0 && w >= omega_max) break;
    }
    return cut;
}

}  // namespace

std::vector<double> cutoff_frequencies(const Medium& m, int l_max, const RootScanOptions& opts) {
    if (l_max < 1) throw ConfigError("l_max must be at least 1");
    return scan_cutoffs(m, 0.0, l_max, opts);
}

std::vector<double> cutoffs_up_to(const Medium& m, double omega_max, const RootScanOptions& opts) {
    if (!(omega_max > 0.0)) return {0.0};
    return scan_cutoffs(m, omega_max, 0, opts);
}

std::vector<double> BranchSet::slownesses_at(std::size_t i) const {
    std::vector<double> out;
    const double w = omega_grid.at(i);
    for (const Branch& br : branches) {
        auto it = std::lower_bound(br.omega.begin(), br.omega.end(), w);
        if (it != br.omega.end() && *it == w) out.push_back(br.y[it - br.omega.begin()]);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

BranchSet trace_branches(const Medium& m, const std::vector<double>& omega_grid,
                         const RootScanOptions& opts) {
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
        if (!(omega_grid[i] > 0.0) || (i > 0 && !(omega_grid[i] > omega_grid[i - 1]))) {
            throw ConfigError("omega grid must be positive and strictly increasing");
        }
    }
    BranchSet b;
    b.omega_grid = omega_grid;
    const double y_inf = m.y_min();
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
        const double w = omega_grid[i];
        const std::vector<double> roots = roots_at_omega(m, w, opts);
        const int count = static_cast<int>(roots.size());
        if (!b.counts.empty() && count < b.counts.back()) {
            throw GridTooCoarse("root count dropped from " + std::to_string(b.counts.back()) + " to " +
                                std::to_string(count) + " at omega " + format_number(w));
        }
        b.counts.push_back(count);
        while (static_cast<int>(b.branches.size()) < count) {
            const int ell = static_cast<int>(b.branches.size()) + 1;
            // bisection in omega on the count of roots at or above 1/c_inf
            double cutoff = 0.0;
            if (oscillation_count(m, 0.0, y_inf) < ell) {
                double hi = w, lo = 0.0;
                for (std::size_t k = i; k-- > 0;) {
                    if (oscillation_count(m, omega_grid[k], y_inf) < ell) {
                        lo = omega_grid[k];
                        break;
                    }
                    hi = omega_grid[k];
                }
                for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    if (oscillation_count(m, mid, y_inf) >= ell) hi = mid; else lo = mid;
                }
                cutoff = hi;
            }
            b.branches.emplace_back();
            b.cutoffs.push_back(cutoff);
            b.cutoff_observed.push_back(true);
        }
        for (int l = 0; l < count; ++l) {
            b.branches[l].omega.push_back(w);
            b.branches[l].y.push_back(roots[l]);
        }
    }
    return b;
}

std::vector<double> make_omega_grid(double omega_min, double omega_max, double step) {
    if (!(step > 0.0) || !(omega_min > 0.0) || omega_max < omega_min) {
        throw ConfigError("omega grid needs 0 < omega_min <= omega_max and step > 0");
    }
    std::vector<double> grid;
    const long count = static_cast<long>(std::floor((omega_max - omega_min) / step + 1e-9));
    for (long i = 0; i <= count; ++i) grid.push_back(omega_min + step * static_cast<double>(i));
    return grid;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_branches_csv(std::ostream& out, const BranchSet& b) {
    out << "ell,omega,y,k\n";
    for (std::size_t l = 0; l < b.branches.size(); ++l) {
        const Branch& br = b.branches[l];
        for (std::size_t i = 0; i < br.omega.size(); ++i) {
            out << l + 1 << ',' << format_number(br.omega[i]) << ',' << format_number(br.y[i]) << ','
                << format_number(br.omega[i] * br.y[i]) << '\n';
        }
    }
}

void write_cutoffs_csv(std::ostream& out, const BranchSet& b) {
    out << "ell,omega_ell\n";
    for (std::size_t l = 0; l < b.cutoffs.size(); ++l) {
        out << l + 1 << ',' << format_number(b.cutoffs[l]) << '\n';
    }
}

}  // namespace lovewave
