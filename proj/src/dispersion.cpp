#include "lovewave/dispersion.hpp"

#include <cmath>
#include <numbers>

namespace lovewave {

namespace {

constexpr double kLargeArgument = 20.0;

double wrap_angle(double a) {
    // into (-pi, pi]
    double r = std::remainder(a, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

// Keep max(|p|, |q|) inside [1/2, 2] using exact power-of-two scaling.
void rescale(PQState& s) {
    double big = std::max(std::abs(s.p), std::abs(s.q));
    if (big >= 0.5 && big <= 2.0) return;
    if (big == 0.0 || !std::isfinite(big)) return;
    int e = 0;
    std::frexp(big, &e);
    s.p = std::ldexp(s.p, -e);
    s.q = std::ldexp(s.q, -e);
    s.log_scale += e * std::numbers::ln2;
}

PQState apply(const ScaledMat2& mat, const PQState& s) {
    PQState out;
    out.p = mat.m[0] * s.p + mat.m[1] * s.q;
    out.q = mat.m[2] * s.p + mat.m[3] * s.q;
    out.log_scale = s.log_scale + mat.log_factor;
    rescale(out);
    return out;
}

}  // namespace

ScaledMat2 layer_matrix_scaled(const Medium& m, int j, double omega, double y) {
    const double thick = m.thickness.at(j);
    const double mu = m.mu[j];
    const LateralWavenumber w = lateral_wavenumber(m, j, y);
    ScaledMat2 out;
    switch (w.kind) {
        case WaveKind::Evanescent: {
            const double b = mu * w.magnitude;
            const double x = omega * w.magnitude * thick;
            if (x > kLargeArgument) {
                const double e = std::exp(-2.0 * x);
                const double ch = 0.5 * (1.0 + e);
                const double sh = 0.5 * (1.0 - e);
                out.m = {ch, sh / b, b * sh, ch};
                out.log_factor = x;
            } else {
                const double ch = std::cosh(x);
                const double sh = std::sinh(x);
                out.m = {ch, sh / b, b * sh, ch};
            }
            break;
        }
        case WaveKind::Oscillatory: {
            const double b = mu * w.magnitude;
            const double x = omega * w.magnitude * thick;
            const double cs = std::cos(x);
            const double sn = std::sin(x);
            out.m = {cs, sn / b, -b * sn, cs};
            break;
        }
        case WaveKind::Zero:
            out.m = {1.0, omega * thick / mu, 0.0, 1.0};
            break;
    }
    return out;
}

Mat2 layer_matrix(const Medium& m, int j, double omega, double y) {
    ScaledMat2 s = layer_matrix_scaled(m, j, omega, y);
    const double f = std::exp(s.log_factor);
    return {s.m[0] * f, s.m[1] * f, s.m[2] * f, s.m[3] * f};
}

std::vector<PQState> pq_profile(const Medium& m, double omega, double y) {
    std::vector<PQState> states;
    states.reserve(m.n + 1);
    PQState s;
    states.push_back(s);
    for (int j = 0; j < m.n; ++j) {
        s = apply(layer_matrix_scaled(m, j, omega, y), s);
        states.push_back(s);
    }
    return states;
}

PQState pq_state(const Medium& m, double omega, double y) {
    PQState s;
    for (int j = 0; j < m.n; ++j) s = apply(layer_matrix_scaled(m, j, omega, y), s);
    return s;
}

DispersionValue dispersion_value(const Medium& m, double omega, double y) {
    const LateralWavenumber w = lateral_wavenumber(m, m.n, y);
    if (w.kind == WaveKind::Oscillatory) {
        throw OutOfRange("slowness below the half-space slowness");
    }
    const PQState s = pq_state(m, omega, y);
    DispersionValue d;
    d.value = m.mu_inf() * w.magnitude * s.p + s.q;
    d.log_scale = s.log_scale;
    d.sign = (d.value > 0.0) - (d.value < 0.0);
    return d;
}

double oscillatory_phase(const Medium& m, double omega, double y) {
    double phase = 0.0;
    for (int j = 0; j < m.n; ++j) {
        if (y < m.slowness[j]) phase += lateral_wavenumber(m, j, y).magnitude * m.thickness[j];
    }
    return omega * phase;
}

int oscillation_count(const Medium& m, double omega, double y) {
    const LateralWavenumber w_inf = lateral_wavenumber(m, m.n, y);
    if (w_inf.kind == WaveKind::Oscillatory) {
        throw OutOfRange("slowness below the half-space slowness");
    }
    // Angle of the (P, Q) vector, continuous in depth. In an oscillatory layer
    // it advances by the layer phase up to a quadrant-preserving distortion;
    // in the other layers the net turn is less than half a revolution.
    double theta = std::numbers::pi / 2.0;
    PQState s;
    for (int j = 0; j < m.n; ++j) {
        const double start = std::atan2(s.p, s.q);
        s = apply(layer_matrix_scaled(m, j, omega, y), s);
        const double end = std::atan2(s.p, s.q);
        const LateralWavenumber w = lateral_wavenumber(m, j, y);
        if (w.kind == WaveKind::Oscillatory) {
            const double x = omega * w.magnitude * m.thickness[j];
            theta += x + wrap_angle(end - start - x);
        } else {
            theta += wrap_angle(end - start);
        }
    }
    const double target = std::numbers::pi / 2.0 + std::atan(m.mu_inf() * w_inf.magnitude);
    const double turns = std::floor((theta - target) / std::numbers::pi);
    return turns < 0.0 ? 0 : static_cast<int>(turns) + 1;
}

}  // namespace lovewave
