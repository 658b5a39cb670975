#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lovewave/branch.hpp"
#include "lovewave/medium.hpp"

namespace lovewave {

struct Sample {
    double omega = 0.0;
    double k = 0.0;
    int label = 0;  // branch number starting at 1; 0 when unlabeled
};

struct DispersionDataset {
    std::vector<Sample> samples;
    std::optional<double> noise_sigma;

    bool labeled() const;
};

void validate_dataset(const DispersionDataset& d);
void write_dataset_csv(std::ostream& out, const DispersionDataset& d);
DispersionDataset read_dataset_csv(std::istream& in);

// Groups samples into branches, by label when present and by rank otherwise.
// Cutoffs are placed midway between the last node without and the first node
// with the branch; branches present from the first node have no observed cutoff.
BranchSet branch_set_from_dataset(const DispersionDataset& d);

struct ParameterEstimate {
    std::string name;
    double value = 0.0;
    std::string rule;
    double spread = 0.0;  // uncertainty proxy, same units as value
};

struct InversionReport {
    std::optional<Medium> medium;  // set when every parameter is known
    std::vector<ParameterEstimate> parameters;
    std::optional<double> residual;  // rms of the normalized dispersion function at the samples
    std::vector<std::string> notes;

    const ParameterEstimate* find(const std::string& name) const;
    double value(const std::string& name) const;  // throws when absent
};

void write_report(std::ostream& out, const InversionReport& r);

struct Extremes {
    double c_min = 0.0;
    double c_inf = 0.0;
    double tail_fit_rms = 0.0;  // rms misfit of the 1/omega^2 tail model, in slowness
    double c_inf_rel_error = 0.0;  // standard error of the median, relative
};

Extremes recover_extremes(const BranchSet& b);

InversionReport invert_single_layer(const BranchSet& b, double rho1);

enum class LayerOrdering { SlowOnTop, SlowBuried, Indistinguishable };

struct SpacingTest {
    std::vector<double> zeros;  // omega values where branches cross the slowness
    double cv = 0.0;            // coefficient of variation of consecutive spacings
    bool monotone_decreasing = false;
};

SpacingTest zero_spacing_test(const BranchSet& b, double y);

struct DoubleLayerOptions {
    double cv_threshold = 0.02;
};

InversionReport invert_double_layer(const BranchSet& b, const DoubleLayerOptions& opts = {});

double alt_thickness_estimate(const BranchSet& b, double c1);

struct FreeParameters {
    std::vector<bool> c;          // n + 1
    std::vector<bool> rho;        // n + 1
    std::vector<bool> thickness;  // n

    static FreeParameters none(int n);
    static FreeParameters all(int n);
    int count() const;
};

struct RefineOptions {
    int max_omegas = 48;       // distinct frequencies used in the misfit
    int max_iterations = 400;
    double tolerance = 1e-12;  // relative spread of simplex values at convergence
    double seed_step = 0.02;   // relative size of the initial simplex
};

struct RefineResult {
    Medium medium;
    double residual = 0.0;  // sum of squared wavenumber misfits
    double initial_residual = 0.0;
    int iterations = 0;
    int evaluations = 0;
    std::vector<double> history;  // best residual after each iteration
};

RefineResult least_squares_refine(const Medium& guess, const DispersionDataset& data,
                                  const FreeParameters& free, const RefineOptions& opts = {});

DispersionDataset synthesize_observations(const Medium& m, const std::vector<double>& omega_grid,
                                          double noise_sigma, std::uint64_t seed,
                                          const RootScanOptions& opts = {});

// Rms of the dispersion function at the samples, each value normalized by the
// size of its two terms.
double dispersion_residual(const Medium& m, const DispersionDataset& d);
double dispersion_residual(const Medium& m, const BranchSet& b);

}  // namespace lovewave
