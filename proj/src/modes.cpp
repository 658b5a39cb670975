#include "lovewave/modes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lovewave/branch.hpp"
#include "lovewave/dispersion.hpp"

namespace lovewave {

namespace {

// a cosh(x) + b sinh(x) without overflowing in the intermediate terms.
double comb_hyp(double a, double b, double x) {
    if (std::abs(x) <= 20.0) return a * std::cosh(x) + b * std::sinh(x);
    const double s = x > 0.0 ? 1.0 : -1.0;
    const double big = 0.5 * (a + s * b);
    const double small = 0.5 * (a - s * b);
    const double grow = big == 0.0 ? 0.0 : std::copysign(std::exp(std::abs(x) + std::log(std::abs(big))), big);
    return grow + small * std::exp(-std::abs(x));
}

struct State {
    double phi = 0.0;
    double stress = 0.0;
};

// Solution in a layer after a depth offset t from the anchor state.
State advance(WaveKind kind, double nu, double mu, const State& s, double t) {
    switch (kind) {
        case WaveKind::Evanescent: {
            const double b = mu * nu;
            return {comb_hyp(s.phi, s.stress / b, nu * t), comb_hyp(s.stress, s.phi * b, nu * t)};
        }
        case WaveKind::Oscillatory: {
            const double b = mu * nu;
            const double cs = std::cos(nu * t), sn = std::sin(nu * t);
            return {s.phi * cs + s.stress / b * sn, -s.phi * b * sn + s.stress * cs};
        }
        case WaveKind::Zero:
            break;
    }
    return {s.phi + s.stress * t / mu, s.stress};
}

State eval_layer(const ModeLayer& lay, double t_from_top) {
    if (lay.anchor_bottom) {
        return advance(lay.kind, lay.nu, lay.mu, {lay.phi_bottom, lay.stress_bottom}, t_from_top - lay.thickness);
    }
    return advance(lay.kind, lay.nu, lay.mu, {lay.phi_top, lay.stress_top}, t_from_top);
}

// sinh(x)/x, sin(x)/x and the third-order remainders (sinh x - x)/x^3, (x - sin x)/x^3
double sinhc(double x) { return std::abs(x) < 1e-8 ? 1.0 : std::sinh(x) / x; }
double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 : std::sin(x) / x; }

double sinh_rem(double x) {
    if (std::abs(x) < 0.5) {
        const double x2 = x * x;
        return 1.0 / 6 + x2 * (1.0 / 120 + x2 * (1.0 / 5040 + x2 * (1.0 / 362880 + x2 / 39916800)));
    }
    return (std::sinh(x) - x) / (x * x * x);
}

double sin_rem(double x) {
    if (std::abs(x) < 0.5) {
        const double x2 = x * x;
        return 1.0 / 6 - x2 * (1.0 / 120 - x2 * (1.0 / 5040 - x2 * (1.0 / 362880 - x2 / 39916800)));
    }
    return (x - std::sin(x)) / (x * x * x);
}

struct Squares {
    double phi2 = 0.0;   // integral of phi^2
    double dphi2 = 0.0;  // integral of phi'^2
};

// Integrals over [0, T] of the solution with phi(0) = p, phi'(0) = g.
Squares layer_squares(WaveKind kind, double nu, double p, double g, double thick) {
    Squares r;
    const double u = nu * thick;
    switch (kind) {
        case WaveKind::Zero: {
            const double end = p + g * thick;
            r.phi2 = thick * (p * p + p * end + end * end) / 3.0;
            r.dphi2 = g * g * thick;
            break;
        }
        case WaveKind::Oscillatory: {
            const double s = sinc(u);
            r.phi2 = p * p * thick * (1.0 + sinc(2.0 * u)) / 2.0 + p * g * thick * thick * s * s + g * g * 2.0 * thick * thick * thick * sin_rem(2.0 * u);
            r.dphi2 = p * p * std::pow(nu, 4) * 2.0 * thick * thick * thick * sin_rem(2.0 * u) - p * g * u * u * s * s +
                      g * g * thick * (1.0 + sinc(2.0 * u)) / 2.0;
            break;
        }
        case WaveKind::Evanescent: {
            if (u <= 1.0) {
                const double s = sinhc(u);
                r.phi2 = p * p * thick * (1.0 + sinhc(2.0 * u)) / 2.0 + p * g * thick * thick * s * s +
                         g * g * 2.0 * thick * thick * thick * sinh_rem(2.0 * u);
                r.dphi2 = p * p * std::pow(nu, 4) * 2.0 * thick * thick * thick * sinh_rem(2.0 * u) + p * g * u * u * s * s +
                          g * g * thick * (1.0 + sinhc(2.0 * u)) / 2.0;
            } else {
                // phi = grow e^{nu t} + shrink e^{-nu t}
                const double beta = g / nu;
                const double grow = 0.5 * (p + beta), shrink = 0.5 * (p - beta);
                const double up = grow == 0.0 ? 0.0 : std::exp(2.0 * u + 2.0 * std::log(std::abs(grow))) * -std::expm1(-2.0 * u) / (2.0 * nu);
                const double down = shrink * shrink * -std::expm1(-2.0 * u) / (2.0 * nu);
                r.phi2 = up + 2.0 * grow * shrink * thick + down;
                r.dphi2 = nu * nu * (up - 2.0 * grow * shrink * thick + down);
            }
            break;
        }
    }
    return r;
}

struct Scaled {
    State s;
    double log_scale = 0.0;
};

void renormalize(Scaled& v) {
    const double big = std::max(std::abs(v.s.phi), std::abs(v.s.stress));
    if (big == 0.0 || !std::isfinite(big)) return;
    int e = 0;
    std::frexp(big, &e);
    v.s.phi = std::ldexp(v.s.phi, -e);
    v.s.stress = std::ldexp(v.s.stress, -e);
    v.log_scale += e * std::log(2.0);
}

}  // namespace

double ModeShape::phi(double z) const {
    if (z >= half_space_top) return a_inf * std::exp(-decay * (z - half_space_top));
    for (const ModeLayer& lay : layers) {
        if (z < lay.top + lay.thickness) return eval_layer(lay, std::max(0.0, z - lay.top)).phi;
    }
    return a_inf;
}

double ModeShape::stress(double z) const {
    if (z >= half_space_top) return -mu_inf * decay * a_inf * std::exp(-decay * (z - half_space_top));
    for (const ModeLayer& lay : layers) {
        if (z < lay.top + lay.thickness) return eval_layer(lay, std::max(0.0, z - lay.top)).stress;
    }
    return 0.0;
}

ModeShape mode_shape(const Medium& m, double omega, double k, double on_branch_tol) {
    if (!(omega > 0.0)) throw OutOfRange("omega must be positive");
    const double y = k / omega;
    if (!(y >= m.y_min() && y < m.y_max())) {
        throw OutOfRange("slowness " + format_number(y) + " outside [1/c_inf, 1/c_min)");
    }
    ModeShape ms;
    ms.omega = omega;
    ms.k = k;
    ms.y = y;
    ms.mu_inf = m.mu_inf();
    ms.rho_inf = m.rho[m.n];
    ms.half_space_top = m.bottom();
    ms.decay = omega * lateral_wavenumber(m, m.n, y).magnitude;
    ms.non_l2 = ms.decay == 0.0;

    int deepest = -1;
    for (int j = 0; j < m.n; ++j) {
        ms.layers.push_back({});
        ModeLayer& lay = ms.layers.back();
        const LateralWavenumber w = lateral_wavenumber(m, j, y);
        lay.top = m.depth[j];
        lay.thickness = m.thickness[j];
        lay.mu = m.mu[j];
        lay.rho = m.rho[j];
        lay.kind = w.kind;
        lay.nu = omega * w.magnitude;
        if (w.kind == WaveKind::Oscillatory) deepest = j;
    }
    // Below the deepest oscillatory layer everything is evanescent, so those
    // layers are filled by sweeping up from the half-space.
    const int joint = deepest + 1;
    ms.match_interface = joint;

    const std::vector<PQState> fwd = pq_profile(m, omega, y);
    auto forward_state = [&](int j) {
        const double f = std::exp(fwd[j].log_scale);
        return State{fwd[j].p * f, omega * fwd[j].q * f};
    };

    std::vector<Scaled> up(m.n + 1);  // state at the top of each layer from the upward sweep
    up[m.n].s = {1.0, -ms.mu_inf * ms.decay};
    for (int j = m.n - 1; j >= joint; --j) {
        const ModeLayer& lay = ms.layers[j];
        up[j] = up[j + 1];
        up[j].s = advance(lay.kind, lay.nu, lay.mu, up[j + 1].s, -lay.thickness);
        renormalize(up[j]);
    }

    const State fwd_at = forward_state(joint);
    const State& up_at = up[joint].s;
    const double mu_ref = joint < m.n ? m.mu[joint] : m.mu_inf();
    const double w = 1.0 / (mu_ref * omega * y);
    const double fp = fwd_at.phi, fs = fwd_at.stress * w, bp = up_at.phi, bs = up_at.stress * w;
    const double bb = bp * bp + bs * bs, ff = fp * fp + fs * fs;
    if (!(bb > 0.0 && ff > 0.0)) throw NotOnBranch("degenerate state at the matching interface");
    ms.match_residual = std::abs(fp * bs - fs * bp) / std::sqrt(ff * bb);
    // A mode trapped under an evanescent barrier moves the residual by a lot per
    // ulp of y; accept the point when the root is bracketed that tightly.
    auto bracketed = [&]() {
        const double top = std::nextafter(m.y_max(), 0.0);
        const int lo = dispersion_value(m, omega, std::max(m.y_min(), y * (1.0 - 1e-13))).sign;
        const int hi = dispersion_value(m, omega, std::min(top, y * (1.0 + 1e-13))).sign;
        return lo * hi <= 0;
    };
    if (!(ms.match_residual <= on_branch_tol) && !bracketed()) {
        throw NotOnBranch("dispersion residual " + format_number(ms.match_residual) + " at omega " +
                          format_number(omega) + ", k " + format_number(k));
    }
    const double sigma = (fp * bp + fs * bs) / bb;
    auto upward = [&](int j) {
        const double f = sigma * std::exp(up[j].log_scale - up[joint].log_scale);
        return State{up[j].s.phi * f, up[j].s.stress * f};
    };

    for (int j = 0; j < m.n; ++j) {
        ModeLayer& lay = ms.layers[j];
        if (j < joint) {
            const State top = forward_state(j), bottom = j + 1 < joint ? forward_state(j + 1) : fwd_at;
            lay.phi_top = top.phi;
            lay.stress_top = top.stress;
            lay.phi_bottom = bottom.phi;
            lay.stress_bottom = bottom.stress;
        } else {
            const State top = upward(j), bottom = upward(j + 1);
            lay.phi_top = top.phi;
            lay.stress_top = top.stress;
            lay.phi_bottom = bottom.phi;
            lay.stress_bottom = bottom.stress;
            lay.anchor_bottom = true;
        }
    }
    ms.a_inf = joint < m.n ? upward(m.n).phi : sigma;
    return ms;
}

ModeIntegrals mode_integrals(const ModeShape& ms) {
    ModeIntegrals r;
    for (const ModeLayer& lay : ms.layers) {
        // a bottom-anchored layer is integrated upward from its bottom
        const double p = lay.anchor_bottom ? lay.phi_bottom : lay.phi_top;
        const double g = lay.anchor_bottom ? -lay.stress_bottom / lay.mu : lay.stress_top / lay.mu;
        const Squares s = layer_squares(lay.kind, lay.nu, p, g, lay.thickness);
        r.mu_dphi2 += lay.mu * s.dphi2;
        r.rho_phi2 += lay.rho * s.phi2;
        r.mu_phi2 += lay.mu * s.phi2;
    }
    if (ms.decay > 0.0) {
        const double a2 = ms.a_inf * ms.a_inf;
        r.mu_dphi2 += ms.mu_inf * ms.decay * a2 / 2.0;
        r.rho_phi2 += ms.rho_inf * a2 / (2.0 * ms.decay);
        r.mu_phi2 += ms.mu_inf * a2 / (2.0 * ms.decay);
    } else {
        const double inf = std::numeric_limits<double>::infinity();
        r.rho_phi2 = inf;
        r.mu_phi2 = inf;
    }
    return r;
}

ModeDiagnostics mode_residuals(const ModeShape& ms, const Medium& m, double omega, double k) {
    ModeDiagnostics d;
    d.non_l2 = ms.non_l2;
    const int n = static_cast<int>(ms.layers.size());

    double phi_scale = std::abs(ms.a_inf), stress_scale = std::abs(ms.mu_inf * ms.decay * ms.a_inf);
    for (const ModeLayer& lay : ms.layers) {
        phi_scale = std::max({phi_scale, std::abs(lay.phi_top), std::abs(lay.phi_bottom)});
        stress_scale = std::max({stress_scale, std::abs(lay.stress_top), std::abs(lay.stress_bottom)});
    }
    if (phi_scale == 0.0) phi_scale = 1.0;
    if (stress_scale == 0.0) stress_scale = 1.0;

    for (int j = 0; j < n; ++j) {
        const State left = eval_layer(ms.layers[j], ms.layers[j].thickness);
        const State right = j + 1 < n ? eval_layer(ms.layers[j + 1], 0.0)
                                      : State{ms.a_inf, -ms.mu_inf * ms.decay * ms.a_inf};
        d.phi_jump = std::max(d.phi_jump, std::abs(left.phi - right.phi) / phi_scale);
        d.stress_jump = std::max(d.stress_jump, std::abs(left.stress - right.stress) / stress_scale);
    }
    if (n > 0) {
        const State surface = eval_layer(ms.layers[0], 0.0);
        d.surface_phi = std::abs(surface.phi - 1.0);
        d.surface_stress = std::abs(surface.stress) / stress_scale;
    }

    // -(mu phi')' + (mu k^2 - rho omega^2) phi = 0 inside each layer.
    const int samples = 100;
    auto ode_check = [&](double mu, double rho, double nu, WaveKind kind, auto&& phi_at, double span) {
        double worst = 0.0, peak = 0.0;
        const double curvature = kind == WaveKind::Evanescent ? nu * nu : kind == WaveKind::Oscillatory ? -nu * nu : 0.0;
        for (int i = 0; i < samples; ++i) {
            const double phi = phi_at(span * i / (samples - 1));
            const double second = curvature * phi;
            const double rhs = (mu * k * k - rho * omega * omega) * phi / mu;
            worst = std::max(worst, std::abs(second - rhs));
            peak = std::max(peak, std::abs(phi));
        }
        const double scale = (k * k + rho * omega * omega / mu) * peak;
        return scale > 0.0 ? worst / scale : 0.0;
    };
    for (const ModeLayer& lay : ms.layers) {
        d.ode_residual = std::max(d.ode_residual, ode_check(lay.mu, lay.rho, lay.nu, lay.kind,
                                                            [&](double t) { return eval_layer(lay, t).phi; }, lay.thickness));
    }
    const double tail_span = ms.decay > 0.0 ? 5.0 / ms.decay : std::max(1.0, ms.half_space_top);
    d.ode_residual = std::max(d.ode_residual,
                              ode_check(ms.mu_inf, ms.rho_inf, ms.decay, ms.decay > 0.0 ? WaveKind::Evanescent : WaveKind::Zero,
                                        [&](double t) { return ms.phi(ms.half_space_top + t); }, tail_span));

    const double y = k / omega;
    const double s_inf = m.slowness[m.n];
    d.decay_rate = omega * std::sqrt(std::max(0.0, y * y - s_inf * s_inf));
    d.decay_error = d.decay_rate > 0.0 ? std::abs(ms.decay - d.decay_rate) / d.decay_rate : std::abs(ms.decay);
    const double step = ms.decay > 0.0 ? 1.0 / ms.decay : 1.0 / (omega * y);
    const double top = ms.phi(ms.half_space_top);
    if (top != 0.0) {
        const double expected = std::exp(-d.decay_rate * step);
        d.decay_ratio_error = std::abs(ms.phi(ms.half_space_top + step) / top - expected) / expected;
    }

    if (!ms.non_l2) {
        const ModeIntegrals ints = mode_integrals(ms);
        const double lhs = ints.mu_dphi2 - omega * omega * ints.rho_phi2;
        const double rhs = -k * k * ints.mu_phi2;
        const double scale = std::max({ints.mu_dphi2, omega * omega * ints.rho_phi2, k * k * ints.mu_phi2});
        d.rayleigh_error = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
        d.quotient = omega * omega * ints.rho_phi2 / (k * k * ints.mu_phi2);
    }
    return d;
}

void write_mode_csv(std::ostream& out, const ModeShape& ms, const std::vector<double>& depths) {
    out << "z,phi,mu_dphi\n";
    for (double z : depths) {
        if (!(z >= 0.0) || !std::isfinite(z)) throw ConfigError("depths must be finite and nonnegative");
        out << format_number(z) << ',' << format_number(ms.phi(z)) << ',' << format_number(ms.stress(z)) << '\n';
    }
}

}  // namespace lovewave
