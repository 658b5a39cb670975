#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lovewave/errors.hpp"

namespace lovewave {

// One layer as written in a config file. Exactly one of mu / c is given.
struct LayerSpec {
    std::optional<double> mu;
    std::optional<double> c;
    double rho = 0.0;
    std::optional<double> thickness;
};

struct MediumDescription {
    int n = 0;
    std::vector<LayerSpec> layers;  // n + 1 entries, last one is the half-space
};

// Layered half-space. Layers are indexed 0..n; index n is the half-space.
struct Medium {
    int n = 0;
    std::vector<double> mu;         // n + 1
    std::vector<double> rho;        // n + 1
    std::vector<double> thickness;  // n
    std::vector<double> c;          // n + 1, sqrt(mu / rho)
    std::vector<double> slowness;   // n + 1, 1 / c
    std::vector<double> depth;      // n + 1, top of each layer; depth[0] = 0
    double c_min = 0.0;             // smallest velocity over all layers
    double c_inf = 0.0;             // half-space velocity

    int layers() const { return n + 1; }
    double mu_inf() const { return mu[n]; }
    double bottom() const { return depth[n]; }
    double y_min() const { return slowness[n]; }  // 1 / c_inf
    double y_max() const { return 1.0 / c_min; }  // 1 / c_min
};

Medium validate_medium(const MediumDescription& raw);

// Shorthand for (mu, rho, thickness) triples; runs full validation.
Medium make_medium(const std::vector<double>& mu, const std::vector<double>& rho,
                   const std::vector<double>& thickness);
Medium make_medium_from_velocity(const std::vector<double>& c, const std::vector<double>& rho,
                                 const std::vector<double>& thickness);

// JSON config: {"n": 1, "layers": [{"c": 1000, "rho": 1, "thickness": 100}, {"mu": 1e8, "rho": 1}]}
MediumDescription parse_medium_config(const std::string& text);
Medium load_medium(const std::string& path);
std::string medium_to_json(const Medium& m);

struct OrderedProfile {
    std::vector<double> c_tilde;  // nondecreasing
    std::vector<double> t_tilde;  // thickness of the layer in each slot; NaN for the half-space
    std::vector<int> sigma;       // 0-based original layer index of each slot
};

OrderedProfile ordered_profile(const Medium& m);

enum class WaveKind { Evanescent, Oscillatory, Zero };

struct LateralWavenumber {
    WaveKind kind = WaveKind::Zero;
    double magnitude = 0.0;  // |sqrt(y^2 - 1/c^2)|
};

LateralWavenumber lateral_wavenumber(const Medium& m, int j, double y);
// Same rule for a bare layer slowness s = 1 / c.
LateralWavenumber lateral_wavenumber_at(double s, double y);

}  // namespace lovewave
