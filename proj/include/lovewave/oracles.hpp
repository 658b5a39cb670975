#pragma once

#include <cstdint>
#include <vector>

#include "lovewave/medium.hpp"

namespace lovewave {

// Boundary-matching determinant, rescaled so it is comparable with the
// dispersion function: value * exp(log_scale) equals mu_inf nu_inf P + Q for
// unit-free (P, Q), i.e. dispersion_value times its own exp(log_scale).
struct DeterminantValue {
    double value = 0.0;
    double log_scale = 0.0;
    double imag_ratio = 0.0;  // |imaginary part| over the rounding scale of the LU
};

// Throws OutOfRange unless k / omega lies in (1/c_inf, 1/c_min), DegeneratePoint
// when a lateral wavenumber vanishes, NonRealResult when the determinant is
// not real to rounding accuracy.
DeterminantValue determinant_oracle_scaled(const Medium& m, double omega, double k);
double determinant_oracle(const Medium& m, double omega, double k);

struct FdOptions {
    double depth_factor = 8.0;  // decay lengths of the slowest admissible mode below the stack
    int grid_points = 8000;     // half in the layers, half in the stretched half-space
    double y_margin = 1e-9;     // slowest decay taken at 1/c_inf * (1 + y_margin)
};

// Finite-difference wavenumbers in (omega/c_inf, omega/c_min), descending.
std::vector<double> fd_eigen_oracle(const Medium& m, double omega, const FdOptions& opts = {});

// Random valid medium with n layers: layer velocities in [800, 4000] m/s,
// half-space velocity in [4500, 6000] m/s, thickness in [20, 200] m,
// density in [1500, 3000] kg/m^3. Deterministic for a given seed.
Medium random_medium(int n, std::uint64_t seed);

struct EquivalenceSummary {
    int samples = 0;
    int degenerate_skipped = 0;
    double max_deviation = 0.0;  // relative to the size of the two dispersion terms
    double worst_omega = 0.0;
    double worst_y = 0.0;
};

// Compares the determinant with the dispersion function at random generic
// points, omega uniform in [omega_min, omega_max] and slowness uniform in
// (1/c_inf, 1/c_min).
EquivalenceSummary oracle_equivalence(const Medium& m, int samples, std::uint64_t seed,
                                      double omega_min = 1.0, double omega_max = 200.0);

// Relative deviation of the determinant from the dispersion function at one point.
double oracle_deviation(const Medium& m, double omega, double y);

}  // namespace lovewave
