#pragma once

#include <iosfwd>
#include <vector>

#include "lovewave/branch.hpp"
#include "lovewave/medium.hpp"

namespace lovewave {

// Number of roots of f(omega, .) on [y, 1/c_min). y may equal 1/c_inf.
int mode_count(const Medium& m, double omega, double y, const RootScanOptions& opts = {});

struct WeylPrediction {
    double value = 0.0;
    bool proven = false;
};

WeylPrediction weyl_prediction(const Medium& m, double omega, double y);

// pi (N(omega, y - 1/omega) - N(omega, y)) / sqrt(2 omega). Throws OutOfRange
// when the shifted slowness falls to or below 1/c_inf.
double accumulation_statistic(const Medium& m, double omega, double y,
                              const RootScanOptions& opts = {});

struct Level {
    double slowness = 0.0;   // accumulation slowness 1/c
    double thickness = 0.0;  // total thickness of the layers sharing this velocity
    double weight = 0.0;     // thickness * sqrt(slowness)
    double floor = 0.0;      // highest branch of the cluster at the largest omega
};

struct LevelOptions {
    double top_decade = 10.0;  // fit uses omega in [omega_max / top_decade, omega_max]
    int fit_nodes = 40;        // grid nodes sampled from that range
    double min_share = 0.05;   // levels carrying less thickness than this share are dropped
};

// Accumulation levels of the branch slownesses, descending in slowness.
std::vector<Level> detect_levels(const BranchSet& b, const LevelOptions& opts = {});

struct WeylRow {
    double omega = 0.0;
    double y = 0.0;
    int count = 0;
    WeylPrediction prediction;
    double rel_error = 0.0;
};

std::vector<WeylRow> weyl_table(const Medium& m, double y, const std::vector<double>& omegas,
                                const RootScanOptions& opts = {});
void write_weyl_csv(std::ostream& out, const std::vector<WeylRow>& rows);

}  // namespace lovewave
