#pragma once

#include <array>
#include <vector>

#include "lovewave/medium.hpp"

namespace lovewave {

// Row-major 2x2: {a, b, c, d} = [[a, b], [c, d]].
using Mat2 = std::array<double, 4>;

// Layer matrix with a positive factor exp(log_factor) pulled out, so that
// large evanescent arguments do not overflow.
struct ScaledMat2 {
    Mat2 m{};
    double log_factor = 0.0;
};

ScaledMat2 layer_matrix_scaled(const Medium& m, int j, double omega, double y);
// Unscaled matrix for layer j in 0..n-1; overflows to inf for huge arguments.
Mat2 layer_matrix(const Medium& m, int j, double omega, double y);

// (P, Q) = exp(log_scale) * (p, q); (p, q) is kept near unit size.
struct PQState {
    double p = 1.0;
    double q = 0.0;
    double log_scale = 0.0;
};

PQState pq_state(const Medium& m, double omega, double y);
// State at the top of every layer: entry j is the state entering layer j,
// entry n is the state at the top of the half-space.
std::vector<PQState> pq_profile(const Medium& m, double omega, double y);

struct DispersionValue {
    double value = 0.0;
    double log_scale = 0.0;
    int sign = 0;
};

DispersionValue dispersion_value(const Medium& m, double omega, double y);

// Phase-angle count of roots of y' -> f(omega, y') on [y, 1/c_min). Exact up
// to rounding; independent of any grid.
int oscillation_count(const Medium& m, double omega, double y);

// Total oscillatory phase omega * sum |nu_j(y)| T_j over oscillatory layers.
double oscillatory_phase(const Medium& m, double omega, double y);

}  // namespace lovewave
