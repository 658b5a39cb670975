#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "lovewave/medium.hpp"

namespace lovewave {

struct RootScanOptions {
    double phase_safety = 4.0;  // nodes per pi of oscillatory phase
    double refine_tol = 1e-12;  // relative bracket width in y
    double y_margin = 1e-9;     // relative offset from both ends of the slowness range

    void validate() const;
};

// All roots of y -> f(omega, y) strictly inside the slowness range, descending.
std::vector<double> roots_at_omega(const Medium& m, double omega, const RootScanOptions& opts = {});

// Roots on the closed interval [y_lo, y_hi], descending. A root sitting exactly
// on y_lo is included.
std::vector<double> roots_in_interval(const Medium& m, double omega, double y_lo, double y_hi,
                                      const RootScanOptions& opts = {});

double refine_root(const Medium& m, double omega, std::pair<double, double> bracket,
                   double refine_tol = 1e-12);

// First l_max cutoff frequencies, ascending, starting with 0.
std::vector<double> cutoff_frequencies(const Medium& m, int l_max, const RootScanOptions& opts = {});
// All cutoff frequencies not exceeding omega_max.
std::vector<double> cutoffs_up_to(const Medium& m, double omega_max, const RootScanOptions& opts = {});

struct Branch {
    std::vector<double> omega;
    std::vector<double> y;
};

struct BranchSet {
    std::vector<double> omega_grid;
    std::vector<Branch> branches;       // branch l + 1 at index l
    std::vector<double> cutoffs;        // one per branch
    std::vector<bool> cutoff_observed;  // false when the cutoff lies before the data
    // Number of branches present at each grid node.
    std::vector<int> counts;

    std::size_t size() const { return branches.size(); }
    double max_omega() const { return omega_grid.empty() ? 0.0 : omega_grid.back(); }
    // Slownesses of every branch at grid node i, descending.
    std::vector<double> slownesses_at(std::size_t i) const;
};

BranchSet trace_branches(const Medium& m, const std::vector<double>& omega_grid,
                         const RootScanOptions& opts = {});

std::vector<double> make_omega_grid(double omega_min, double omega_max, double step);

void write_branches_csv(std::ostream& out, const BranchSet& b);
void write_cutoffs_csv(std::ostream& out, const BranchSet& b);

// 17 significant digits, the only numeric output format.
std::string format_number(double v);

}  // namespace lovewave
