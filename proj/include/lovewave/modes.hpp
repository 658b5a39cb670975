#pragma once

#include <iosfwd>
#include <vector>

#include "lovewave/medium.hpp"

namespace lovewave {

// One finite layer of a mode. The shape inside the layer is fixed by the
// state (phi, mu phi') at one end; layers below the matching interface are
// anchored at their bottom so evaluation never runs against the decay.
struct ModeLayer {
    double top = 0.0;
    double thickness = 0.0;
    double mu = 0.0;
    double rho = 0.0;
    WaveKind kind = WaveKind::Zero;
    double nu = 0.0;  // omega * |lateral wavenumber|, 1/m
    double phi_top = 0.0;
    double stress_top = 0.0;  // mu phi' at the top
    double phi_bottom = 0.0;
    double stress_bottom = 0.0;
    bool anchor_bottom = false;
};

struct ModeShape {
    double omega = 0.0;
    double k = 0.0;
    double y = 0.0;
    std::vector<ModeLayer> layers;  // n finite layers
    double half_space_top = 0.0;
    double a_inf = 0.0;  // phi at the top of the half-space
    double decay = 0.0;  // phi = a_inf exp(-decay (z - half_space_top))
    double mu_inf = 0.0;
    double rho_inf = 0.0;
    bool non_l2 = false;       // decay == 0: a cutoff point, not a Love wave
    int match_interface = 0;   // layer index whose top joins the two sweeps
    double match_residual = 0.0;

    double phi(double z) const;
    double stress(double z) const;  // mu phi'
};

// Throws OutOfRange when k / omega is outside [1/c_inf, 1/c_min) and
// NotOnBranch when the two sweeps disagree by more than on_branch_tol and
// no root lies within 1e-13 relative of k / omega.
ModeShape mode_shape(const Medium& m, double omega, double k, double on_branch_tol = 1e-6);

struct ModeDiagnostics {
    double phi_jump = 0.0;     // max interface jump of phi, relative to max |phi| at interfaces
    double stress_jump = 0.0;  // same for mu phi'
    double surface_phi = 0.0;  // |phi(0) - 1|
    double surface_stress = 0.0;  // |mu phi'(0)| relative to the stress scale
    double ode_residual = 0.0;  // max over 100 depths per layer, relative
    double decay_rate = 0.0;    // decay recomputed from the medium
    double decay_error = 0.0;   // relative mismatch of the stored decay
    double decay_ratio_error = 0.0;  // phi(H + d) / phi(H) against exp(-decay d)
    bool non_l2 = false;
    // Only meaningful for L2 modes; zero otherwise.
    double rayleigh_error = 0.0;  // relative defect of the energy identity
    double quotient = 0.0;        // omega^2 |sqrt(rho) phi|^2 / (k^2 |sqrt(mu) phi|^2)
};

ModeDiagnostics mode_residuals(const ModeShape& ms, const Medium& m, double omega, double k);

// Integrals over depth of mu phi'^2, rho phi^2 and mu phi^2, summed over layers
// and the half-space, in closed form.
struct ModeIntegrals {
    double mu_dphi2 = 0.0;
    double rho_phi2 = 0.0;
    double mu_phi2 = 0.0;
};

ModeIntegrals mode_integrals(const ModeShape& ms);

void write_mode_csv(std::ostream& out, const ModeShape& ms, const std::vector<double>& depths);

}  // namespace lovewave
