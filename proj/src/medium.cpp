#include "lovewave/medium.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace lovewave {

namespace {

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw NonPositiveParameter(what + " must be positive and finite");
    }
}

}  // namespace

Medium validate_medium(const MediumDescription& raw) {
    if (raw.n < 1) throw NonPositiveParameter("n must be at least 1");
    if (static_cast<int>(raw.layers.size()) != raw.n + 1) {
        throw ConfigError("expected " + std::to_string(raw.n + 1) + " layers, got " +
                          std::to_string(raw.layers.size()));
    }
    Medium m;
    m.n = raw.n;
    for (int j = 0; j <= raw.n; ++j) {
        const LayerSpec& spec = raw.layers[j];
        const std::string tag = "layer " + std::to_string(j + 1);
        if (spec.mu.has_value() == spec.c.has_value()) {
            throw ConfigError(tag + ": give exactly one of mu or c");
        }
        require_positive(spec.rho, tag + " rho");
        double mu = 0.0;
        if (spec.mu) {
            require_positive(*spec.mu, tag + " mu");
            mu = *spec.mu;
        } else {
            require_positive(*spec.c, tag + " c");
            mu = spec.rho * *spec.c * *spec.c;
        }
        m.mu.push_back(mu);
        m.rho.push_back(spec.rho);
        if (j < raw.n) {
            if (!spec.thickness) throw ConfigError(tag + ": finite layer needs a thickness");
            require_positive(*spec.thickness, tag + " thickness");
            m.thickness.push_back(*spec.thickness);
        } else if (spec.thickness) {
            throw ConfigError("half-space layer must not have a thickness");
        }
    }
    m.depth.assign(m.n + 1, 0.0);
    for (int j = 1; j <= m.n; ++j) m.depth[j] = m.depth[j - 1] + m.thickness[j - 1];
    for (int j = 0; j <= m.n; ++j) {
        m.c.push_back(std::sqrt(m.mu[j] / m.rho[j]));
        m.slowness.push_back(1.0 / m.c.back());
    }
    m.c_min = *std::min_element(m.c.begin(), m.c.end());
    m.c_inf = m.c[m.n];
    if (!(m.c_min < m.c_inf)) {
        throw NoLoveWaves("minimum velocity " + std::to_string(m.c_min) +
                          " is not below the half-space velocity " + std::to_string(m.c_inf));
    }
    return m;
}

Medium make_medium(const std::vector<double>& mu, const std::vector<double>& rho,
                   const std::vector<double>& thickness) {
    MediumDescription d;
    d.n = static_cast<int>(thickness.size());
    if (mu.size() != thickness.size() + 1 || rho.size() != mu.size()) {
        throw ConfigError("inconsistent layer array sizes");
    }
    for (std::size_t j = 0; j < mu.size(); ++j) {
        LayerSpec spec;
        spec.mu = mu[j];
        spec.rho = rho[j];
        if (j < thickness.size()) spec.thickness = thickness[j];
        d.layers.push_back(spec);
    }
    return validate_medium(d);
}

Medium make_medium_from_velocity(const std::vector<double>& c, const std::vector<double>& rho,
                                 const std::vector<double>& thickness) {
    MediumDescription d;
    d.n = static_cast<int>(thickness.size());
    if (c.size() != thickness.size() + 1 || rho.size() != c.size()) {
        throw ConfigError("inconsistent layer array sizes");
    }
    for (std::size_t j = 0; j < c.size(); ++j) {
        LayerSpec spec;
        spec.c = c[j];
        spec.rho = rho[j];
        if (j < thickness.size()) spec.thickness = thickness[j];
        d.layers.push_back(spec);
    }
    return validate_medium(d);
}

MediumDescription parse_medium_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed medium document: ") + e.what());
    }
    MediumDescription d;
    try {
        d.n = doc.at("n").get<int>();
        for (const auto& layer : doc.at("layers")) {
            LayerSpec spec;
            if (layer.contains("mu")) spec.mu = layer.at("mu").get<double>();
            if (layer.contains("c")) spec.c = layer.at("c").get<double>();
            spec.rho = layer.at("rho").get<double>();
            if (layer.contains("thickness")) spec.thickness = layer.at("thickness").get<double>();
            d.layers.push_back(spec);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad medium document: ") + e.what());
    }
    return d;
}

Medium load_medium(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open medium file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return validate_medium(parse_medium_config(ss.str()));
}

std::string medium_to_json(const Medium& m) {
    nlohmann::json doc;
    doc["n"] = m.n;
    doc["layers"] = nlohmann::json::array();
    for (int j = 0; j <= m.n; ++j) {
        nlohmann::json spec;
        spec["mu"] = m.mu[j];
        spec["rho"] = m.rho[j];
        if (j < m.n) spec["thickness"] = m.thickness[j];
        doc["layers"].push_back(spec);
    }
    return doc.dump(2);
}

OrderedProfile ordered_profile(const Medium& m) {
    OrderedProfile p;
    p.sigma.resize(m.n + 1);
    std::iota(p.sigma.begin(), p.sigma.end(), 0);
    std::stable_sort(p.sigma.begin(), p.sigma.end(),
                     [&](int a, int b) { return m.c[a] < m.c[b]; });
    for (int idx : p.sigma) {
        p.c_tilde.push_back(m.c[idx]);
        p.t_tilde.push_back(idx < m.n ? m.thickness[idx] : std::numeric_limits<double>::quiet_NaN());
    }
    return p;
}

LateralWavenumber lateral_wavenumber_at(double s, double y) {
    LateralWavenumber w;
    if (y > s) {
        w.kind = WaveKind::Evanescent;
        w.magnitude = std::sqrt((y - s) * (y + s));
    } else if (y < s) {
        w.kind = WaveKind::Oscillatory;
        w.magnitude = std::sqrt((s - y) * (s + y));
    } else {
        w.kind = WaveKind::Zero;
        w.magnitude = 0.0;
    }
    return w;
}

LateralWavenumber lateral_wavenumber(const Medium& m, int j, double y) {
    return lateral_wavenumber_at(m.slowness.at(j), y);
}

}  // namespace lovewave
