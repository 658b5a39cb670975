#include "lovewave/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lovewave/dispersion.hpp"
#include "lovewave/spectral.hpp"
#include "rng.hpp"

namespace lovewave {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    const double mean = s / static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += (x - mean) * (x - mean);
    return {mean, std::sqrt(q / static_cast<double>(v.size()))};
}

double normalized_dispersion(const Medium& m, double omega, double y) {
    if (y < m.y_min()) return 1.0;
    const PQState s = pq_state(m, omega, y);
    const double a = m.mu_inf() * lateral_wavenumber(m, m.n, y).magnitude * s.p;
    const double denom = std::abs(a) + std::abs(s.q);
    return denom > 0.0 ? std::abs(a + s.q) / denom : 0.0;
}

}  // namespace

bool DispersionDataset::labeled() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.label > 0; });
}

void validate_dataset(const DispersionDataset& d) {
    if (d.samples.empty()) throw InsufficientData("dataset has no samples");
    bool any_label = false, all_label = true;
    for (const Sample& s : d.samples) {
        if (!(s.omega > 0.0) || !std::isfinite(s.omega)) throw NonPositiveParameter("sample omega must be positive");
        if (!(s.k > 0.0) || !std::isfinite(s.k)) throw NonPositiveParameter("sample k must be positive");
        if (s.label < 0) throw ConfigError("branch labels start at 1");
        any_label = any_label || s.label > 0;
        all_label = all_label && s.label > 0;
    }
    if (any_label && !all_label) throw ConfigError("either every sample or no sample carries a label");
    if (d.noise_sigma && *d.noise_sigma < 0.0) throw NonPositiveParameter("noise sigma must be nonnegative");
    if (!all_label) return;
    // Noise may legitimately swap the order of close branches, so ordering is
    // only enforced on data known to be noise-free. Files carry no sigma.
    const bool check_order = d.noise_sigma && *d.noise_sigma == 0.0;
    std::map<double, std::vector<std::pair<int, double>>> by_omega;
    for (const Sample& s : d.samples) by_omega[s.omega].push_back({s.label, s.k});
    for (auto& [w, v] : by_omega) {
        std::sort(v.begin(), v.end());
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (v[i].first == v[i - 1].first) {
                throw ConfigError("label " + std::to_string(v[i].first) + " repeats at omega " + format_number(w));
            }
            if (check_order && !(v[i].second < v[i - 1].second)) {
                throw ConfigError("labels at omega " + format_number(w) + " do not follow descending wavenumber");
            }
        }
    }
}

void write_dataset_csv(std::ostream& out, const DispersionDataset& d) {
    const bool lab = d.labeled();
    out << (lab ? "omega,k,ell\n" : "omega,k\n");
    for (const Sample& s : d.samples) {
        out << format_number(s.omega) << ',' << format_number(s.k);
        if (lab) out << ',' << s.label;
        out << '\n';
    }
}

DispersionDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty dataset file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool with_label = false;
    if (line == "omega,k,ell") {
        with_label = true;
    } else if (line != "omega,k") {
        throw ConfigError("dataset header must be omega,k[,ell]");
    }
    DispersionDataset d;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        Sample s;
        try {
            s.omega = std::stod(a);
            s.k = std::stod(b);
            if (with_label) {
                if (!std::getline(ss, c, ',')) throw std::invalid_argument("missing label");
                s.label = std::stoi(c);
                if (s.label < 1) throw std::invalid_argument("label");
            }
        } catch (const std::exception&) {
            throw ConfigError("malformed dataset row " + std::to_string(row));
        }
        d.samples.push_back(s);
    }
    validate_dataset(d);
    return d;
}

BranchSet branch_set_from_dataset(const DispersionDataset& d) {
    validate_dataset(d);
    BranchSet b;
    std::vector<double> grid;
    for (const Sample& s : d.samples) grid.push_back(s.omega);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    b.omega_grid = grid;

    // (omega, y) pairs per branch number
    std::map<int, std::vector<std::pair<double, double>>> rows;
    if (d.labeled()) {
        for (const Sample& s : d.samples) rows[s.label].push_back({s.omega, s.k / s.omega});
    } else {
        std::map<double, std::vector<double>> by_omega;
        for (const Sample& s : d.samples) by_omega[s.omega].push_back(s.k / s.omega);
        for (auto& [w, ys] : by_omega) {
            std::sort(ys.begin(), ys.end(), std::greater<>());
            for (std::size_t r = 0; r < ys.size(); ++r) rows[static_cast<int>(r) + 1].push_back({w, ys[r]});
        }
    }
    const int count = rows.empty() ? 0 : rows.rbegin()->first;
    b.branches.resize(count);
    b.cutoffs.assign(count, 0.0);
    b.cutoff_observed.assign(count, false);
    for (auto& [label, pts] : rows) {
        std::sort(pts.begin(), pts.end());
        Branch& br = b.branches[label - 1];
        for (const auto& [w, y] : pts) {
            br.omega.push_back(w);
            br.y.push_back(y);
        }
        const std::size_t first = std::lower_bound(grid.begin(), grid.end(), pts.front().first) - grid.begin();
        if (first == 0) {
            b.cutoffs[label - 1] = grid.front();
        } else {
            b.cutoffs[label - 1] = 0.5 * (grid[first - 1] + grid[first]);
            b.cutoff_observed[label - 1] = true;
        }
    }
    b.counts.assign(grid.size(), 0);
    for (const Branch& br : b.branches) {
        for (double w : br.omega) {
            b.counts[std::lower_bound(grid.begin(), grid.end(), w) - grid.begin()] += 1;
        }
    }
    return b;
}

const ParameterEstimate* InversionReport::find(const std::string& name) const {
    for (const auto& p : parameters) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

double InversionReport::value(const std::string& name) const {
    const ParameterEstimate* p = find(name);
    if (!p) throw std::out_of_range("report has no parameter " + name);
    return p->value;
}

void write_report(std::ostream& out, const InversionReport& r) {
    nlohmann::ordered_json doc;
    doc["parameters"] = nlohmann::ordered_json::array();
    for (const auto& p : r.parameters) {
        nlohmann::ordered_json e;
        e["parameter"] = p.name;
        e["value"] = p.value;
        e["rule"] = p.rule;
        e["spread"] = p.spread;
        doc["parameters"].push_back(e);
    }
    if (r.residual) doc["residual"] = *r.residual;
    doc["notes"] = r.notes;
    if (r.medium) doc["medium"] = nlohmann::ordered_json::parse(medium_to_json(*r.medium));
    out << doc.dump(2) << '\n';
}

double dispersion_residual(const Medium& m, const DispersionDataset& d) {
    double acc = 0.0;
    for (const Sample& s : d.samples) {
        const double v = normalized_dispersion(m, s.omega, s.k / s.omega);
        acc += v * v;
    }
    return d.samples.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(d.samples.size()));
}

double dispersion_residual(const Medium& m, const BranchSet& b) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const Branch& br : b.branches) {
        for (std::size_t i = 0; i < br.omega.size(); i += 7) {  // thinned; neighbours are nearly identical
            const double v = normalized_dispersion(m, br.omega[i], br.y[i]);
            acc += v * v;
            ++count;
        }
    }
    return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

Extremes recover_extremes(const BranchSet& b) {
    const Branch* first = b.branches.empty() ? nullptr : &b.branches.front();
    bool enough = false;
    for (const Branch& br : b.branches) enough = enough || br.y.size() >= 20;
    if (!enough || first->y.size() < 3) throw InsufficientData("need a branch with at least 20 samples");

    // 1/c_inf: median over branches of the first slowness, taken just above the
    // cutoff. The branch minimum would be biased low by noise.
    // A branch leaves 1/c_inf quadratically, so a first sample a uniform
    // fraction of a step past the cutoff sits (y1 - y0) / 6 too high on average.
    std::vector<double> starts, lifts;
    for (const Branch& br : b.branches) {
        if (br.y.empty()) continue;
        double lift = 0.0;
        if (br.y.size() > 1 && br.omega[1] - br.omega[0] < 1.5 * (br.omega.back() - br.omega[0]) / (br.omega.size() - 1)) {
            lift = (br.y[1] - br.y[0]) / 6.0;
        }
        starts.push_back(br.y.front() - lift);
        lifts.push_back(lift);
    }
    Extremes ex;
    const double y_inf = median(starts);
    ex.c_inf = 1.0 / y_inf;
    if (starts.size() > 1) {
        std::vector<double> dev;
        for (double y : starts) dev.push_back(std::abs(y - y_inf));
        const double spread = 1.4826 * median(dev);
        const double se = 1.2533 * spread / std::sqrt(static_cast<double>(starts.size()));
        // the correction is only right on average; half of it counts as error
        const double model = 0.5 * std::abs(median(lifts));
        ex.c_inf_rel_error = std::hypot(se, model) / y_inf;
    }

    // 1/c_min: tail model y1(omega) = A - a / omega^2 over the top decade of branch 1.
    const double w_top = first->omega.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < first->omega.size(); ++i) {
        if (first->omega[i] < w_top / 10.0) continue;
        const double x = 1.0 / (first->omega[i] * first->omega[i]);
        sx += x; sy += first->y[i]; sxx += x * x; sxy += x * first->y[i];
        ++cnt;
    }
    if (cnt < 3) throw InsufficientData("branch 1 tail too short");
    const double nn = static_cast<double>(cnt);
    const double det = nn * sxx - sx * sx;
    const double slope = det != 0.0 ? (nn * sxy - sx * sy) / det : 0.0;
    const double intercept = (sy - slope * sx) / nn;
    double rss = 0.0;
    for (std::size_t i = 0; i < first->omega.size(); ++i) {
        if (first->omega[i] < w_top / 10.0) continue;
        const double x = 1.0 / (first->omega[i] * first->omega[i]);
        rss += std::pow(first->y[i] - intercept - slope * x, 2);
    }
    ex.c_min = 1.0 / intercept;
    ex.tail_fit_rms = std::sqrt(rss / nn);
    return ex;
}

double alt_thickness_estimate(const BranchSet& b, double c1) {
    if (b.omega_grid.empty()) throw InsufficientData("empty branch set");
    const std::size_t last = b.omega_grid.size() - 1;
    const double w = b.omega_grid[last];
    const std::vector<double> ys = b.slownesses_at(last);
    if (ys.size() < 2) throw InsufficientData("need two branches at the largest omega");
    // Adjacent pairs whose slownesses lie in the upper half of the observed
    // range, where the limit behind the formula is already reached.
    const double mid = 0.5 * (ys.front() + ys.back());
    std::vector<double> est;
    for (std::size_t l = 0; l + 1 < ys.size(); ++l) {
        if (ys.size() > 3 && ys[l + 1] < mid) break;
        const double base = w * w / (c1 * c1);
        const double a0 = std::sqrt(std::max(0.0, base - std::pow(w * ys[l], 2)));
        const double a1 = std::sqrt(std::max(0.0, base - std::pow(w * ys[l + 1], 2)));
        if (a1 - a0 > 0.0) est.push_back(std::numbers::pi / (a1 - a0));
    }
    if (est.empty()) throw InsufficientData("branches do not separate at the largest omega");
    return mean_std(est).first;
}

InversionReport invert_single_layer(const BranchSet& b, double rho1) {
    if (!(rho1 > 0.0)) throw NonPositiveParameter("rho1 must be positive");
    std::vector<std::pair<int, double>> cuts;
    for (std::size_t l = 0; l < b.cutoffs.size(); ++l) {
        if (b.cutoff_observed[l]) cuts.push_back({static_cast<int>(l), b.cutoffs[l]});
    }
    if (cuts.size() < 2) throw InsufficientData("need at least two observed cutoffs");
    const Extremes ex = recover_extremes(b);
    const double c1 = ex.c_min, c2 = ex.c_inf;
    if (!(c1 < c2)) throw UnresolvedLevels("recovered layer velocity is not below the half-space velocity");

    InversionReport r;
    r.parameters.push_back({"c1", c1, "branch-1 tail fit y = 1/c1 - a/omega^2", ex.tail_fit_rms * c1 * c1});
    r.parameters.push_back({"c2", c2, "median first slowness of the branches", ex.c_inf_rel_error * c2});

    // Cutoffs are equally spaced in the branch index; a line through all of
    // them averages the half-step placement error of each one.
    bool consecutive = false;
    for (std::size_t i = 1; i < cuts.size(); ++i) consecutive = consecutive || cuts[i].first == cuts[i - 1].first + 1;
    if (!consecutive) throw InsufficientData("no consecutive pair of observed cutoffs");
    double mx = 0.0, my = 0.0;
    for (const auto& [l, w] : cuts) {
        mx += l;
        my += w;
    }
    const double cn = static_cast<double>(cuts.size());
    mx /= cn;
    my /= cn;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [l, w] : cuts) {
        sxx += (l - mx) * (l - mx);
        sxy += (l - mx) * (w - my);
    }
    const double gap = sxy / sxx;
    double rss = 0.0;
    for (const auto& [l, w] : cuts) rss += std::pow(w - my - gap * (l - mx), 2);
    // residual scatter, floored at the placement error of a midpoint cutoff
    const double step = b.omega_grid.size() > 1 ? (b.omega_grid.back() - b.omega_grid.front()) / (b.omega_grid.size() - 1) : 0.0;
    const double scatter = std::max(cuts.size() > 2 ? std::sqrt(rss / (cn - 2.0)) : 0.0, step / std::sqrt(12.0));
    const double gap_se = scatter / std::sqrt(sxx);
    const double factor = c1 * c2 / std::sqrt((c2 - c1) * (c2 + c1)) * std::numbers::pi;
    const double h = factor / gap;
    r.parameters.push_back({"h", h, "cutoff spacing, least-squares slope over the branch index", h * gap_se / gap});

    // rho2 from the branch relation at samples away from both ill-conditioned
    // ends, preferring the samples where slowness errors are amplified least.
    const double s1 = 1.0 / (c1 * c1), s2 = 1.0 / (c2 * c2);
    const double rel_y = std::max(ex.tail_fit_rms * c1, 1e-16);
    const double rel_h = gap_se / gap;
    const double rel_c2 = ex.c_inf_rel_error;
    struct Candidate {
        double omega, y, kappa;
        std::size_t branch;
    };
    std::vector<Candidate> pts;
    for (std::size_t l = 0; l < b.branches.size(); ++l) {
        const Branch& br = b.branches[l];
        if (br.y.size() < 3) continue;
        const double lo = *std::min_element(br.y.begin(), br.y.end());
        const double hi = *std::max_element(br.y.begin(), br.y.end());
        const double pad = 0.05 * (hi - lo);
        for (std::size_t i = 0; i < br.y.size(); ++i) {
            // score at a locally averaged slowness so the choice does not
            // follow the noise of the sample itself
            const std::size_t from = i >= 3 ? i - 3 : 0, to = std::min(br.y.size(), i + 4);
            double y = 0.0;
            for (std::size_t j = from; j < to; ++j) y += br.y[j];
            y /= static_cast<double>(to - from);
            if (y < lo + pad || y > hi - pad) continue;
            if (y > 1.0 / c1 - pad || y < 1.0 / c2 + pad) continue;
            const double a2 = s1 - y * y, e2 = y * y - s2;
            if (!(a2 > 0.0 && e2 > 0.0)) continue;
            const double a = std::sqrt(a2);
            const double phase = h * br.omega[i] * a;
            const double sc = std::abs(std::sin(phase) * std::cos(phase));
            if (sc == 0.0) continue;
            // predicted relative error of rho2 from the scatter in y and the
            // uncertainty of the h and c2 estimates
            const double kappa = rel_y * y * y * (1.0 / a2 + 1.0 / e2 + h * br.omega[i] / (a * sc)) +
                                 rel_h * h * br.omega[i] * a / sc + rel_c2 * 2.0 * s2 / e2;
            pts.push_back({br.omega[i], br.y[i], kappa, l});
        }
    }
    std::sort(pts.begin(), pts.end(), [](const Candidate& p, const Candidate& q) { return p.kappa < q.kappa; });
    const std::size_t want = 100;
    const double min_separation = 1.0;  // rad/s between samples of one branch
    std::vector<Candidate> chosen;
    for (const Candidate& p : pts) {
        if (chosen.size() == want) break;
        const bool close = std::any_of(chosen.begin(), chosen.end(), [&](const Candidate& q) {
            return q.branch == p.branch && std::abs(q.omega - p.omega) < min_separation;
        });
        if (!close) chosen.push_back(p);
    }
    // inverse-variance weighted mean, the score standing in for the relative error
    double wsum = 0.0, wv = 0.0;
    std::size_t used = 0;
    for (const Candidate& p : chosen) {
        const double a2 = s1 - p.y * p.y, e2 = p.y * p.y - s2;
        const double v = rho1 * (c1 * c1) / (c2 * c2) * std::sqrt(a2 / e2) * std::tan(h * p.omega * std::sqrt(a2));
        if (!std::isfinite(v)) continue;
        const double wt = 1.0 / (p.kappa * p.kappa);
        wsum += wt;
        wv += wt * v;
        ++used;
    }
    if (used < 10) throw InsufficientData("fewer than 10 usable samples for rho2");
    const double rho2 = wv / wsum;
    r.parameters.push_back({"rho2", rho2,
                            "branch relation solved for rho2, weighted mean over the " + std::to_string(used) +
                                " best-conditioned samples",
                            rho2 / std::sqrt(wsum)});
    r.parameters.push_back({"rho1", rho1, "given", 0.0});
    r.parameters.push_back({"mu1", rho1 * c1 * c1, "rho1 c1^2", 0.0});
    r.parameters.push_back({"mu2", rho2 * c2 * c2, "rho2 c2^2", 0.0});
    try {
        const double h_alt = alt_thickness_estimate(b, c1);
        r.parameters.push_back({"h_alt", h_alt, "adjacent-branch limit at the largest omega", std::abs(h_alt - h)});
    } catch (const InsufficientData& e) {
        r.notes.push_back(std::string("alternative thickness unavailable: ") + e.what());
    }
    try {
        r.medium = make_medium({rho1 * c1 * c1, rho2 * c2 * c2}, {rho1, rho2}, {h});
        r.residual = dispersion_residual(*r.medium, b);
    } catch (const Error& e) {
        r.notes.push_back(std::string("recovered parameters do not form a valid medium: ") + e.what());
    }
    return r;
}

SpacingTest zero_spacing_test(const BranchSet& b, double y) {
    SpacingTest t;
    for (const Branch& br : b.branches) {
        for (std::size_t i = 0; i + 1 < br.y.size(); ++i) {
            if (br.y[i] < y && y <= br.y[i + 1]) {
                const double f = (y - br.y[i]) / (br.y[i + 1] - br.y[i]);
                t.zeros.push_back(br.omega[i] + f * (br.omega[i + 1] - br.omega[i]));
                break;
            }
        }
    }
    std::sort(t.zeros.begin(), t.zeros.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < t.zeros.size(); ++i) gaps.push_back(t.zeros[i] - t.zeros[i - 1]);
    if (gaps.size() >= 2) {
        const auto [mean, sd] = mean_std(gaps);
        t.cv = sd / mean;
    }
    t.monotone_decreasing = gaps.size() >= 3;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        if (!(gaps[i] < gaps[i - 1])) t.monotone_decreasing = false;
    }
    return t;
}

InversionReport invert_double_layer(const BranchSet& b, const DoubleLayerOptions& opts) {
    const Extremes ex = recover_extremes(b);
    const std::vector<Level> levels = detect_levels(b);
    if (levels.size() > 2) {
        throw UnresolvedLevels(std::to_string(levels.size()) + " accumulation levels found, expected at most 2");
    }
    InversionReport r;
    const double c3 = ex.c_inf;
    r.parameters.push_back({"c3", c3, "median first slowness of the branches", ex.c_inf_rel_error * ex.c_inf});
    const double c_top = ex.c_min;
    if (levels.size() == 1) {
        r.parameters.push_back({"c1", c_top, "branch-1 tail fit; single accumulation level", 0.0});
        r.parameters.push_back({"c2", c_top, "single accumulation level: both layers share c1", 0.0});
        r.parameters.push_back({"t1_plus_t2", levels[0].thickness, "weight of the single level", 0.0});
        r.notes.push_back("one level: layer order and the split of thickness are not identifiable");
        return r;
    }
    const double c_second = 1.0 / levels[1].slowness;
    const double t_top = levels[0].thickness, t_second = levels[1].thickness;
    // The crossing pattern changes sharply on one side of the level, so scan the
    // window the level estimate cannot resolve and keep the most regular one.
    const double probe_lo = levels[1].floor;
    const double probe_hi = 2.0 * levels[1].slowness - levels[1].floor;
    SpacingTest test;
    double probe_y = levels[1].slowness;
    bool found = false;
    const int probes = 21;
    for (int i = 0; i < probes; ++i) {
        const double y = probe_lo + (probe_hi - probe_lo) * i / (probes - 1);
        const SpacingTest t = zero_spacing_test(b, y);
        if (t.zeros.size() < 4) continue;
        if (!found || t.cv < test.cv) {
            test = t;
            probe_y = y;
            found = true;
        }
    }
    if (!found) throw AmbiguousOrdering("fewer than 4 crossings of the second level");
    const bool equidistant = test.cv < opts.cv_threshold;
    if (equidistant && test.monotone_decreasing) {
        throw AmbiguousOrdering("spacings pass the variation test but decrease monotonically");
    }
    std::ostringstream why;
    why << "crossings of y = " << format_number(probe_y) << ": " << test.zeros.size()
        << " zeros, spacing cv " << format_number(test.cv)
        << (test.monotone_decreasing ? ", monotone decreasing" : "");
    r.notes.push_back(why.str());
    const std::string level_rule = "accumulation level and counting-law weight";
    if (equidistant) {
        // the faster of the two layers sits on top; the slow layer is buried
        r.notes.push_back("ordering: low-velocity layer buried");
        r.parameters.push_back({"c1", c_second, level_rule + " (second level, equidistant crossings)", 0.0});
        r.parameters.push_back({"t1", t_second, level_rule, 0.0});
        r.parameters.push_back({"c2", c_top, "branch-1 tail fit", 0.0});
        r.parameters.push_back({"t2", t_top, level_rule, 0.0});
    } else {
        r.notes.push_back("ordering: low-velocity layer on top");
        r.parameters.push_back({"c1", c_top, "branch-1 tail fit", 0.0});
        r.parameters.push_back({"t1", t_top, level_rule, 0.0});
        r.parameters.push_back({"c2", c_second, level_rule + " (second level, unequal crossings)", 0.0});
        r.parameters.push_back({"t2", t_second, level_rule, 0.0});
    }
    r.notes.push_back("densities are not identified here; use least-squares refinement");
    try {
        const Medium unit = make_medium_from_velocity({r.value("c1"), r.value("c2"), c3}, {1.0, 1.0, 1.0},
                                                      {r.value("t1"), r.value("t2")});
        r.residual = dispersion_residual(unit, b);
        r.notes.push_back("residual evaluated with unit densities");
    } catch (const Error& e) {
        r.notes.push_back(std::string("recovered velocities do not form a valid medium: ") + e.what());
    }
    return r;
}

FreeParameters FreeParameters::none(int n) {
    FreeParameters f;
    f.c.assign(n + 1, false);
    f.rho.assign(n + 1, false);
    f.thickness.assign(n, false);
    return f;
}

FreeParameters FreeParameters::all(int n) {
    FreeParameters f;
    f.c.assign(n + 1, true);
    f.rho.assign(n + 1, true);
    f.thickness.assign(n, true);
    return f;
}

int FreeParameters::count() const {
    return static_cast<int>(std::count(c.begin(), c.end(), true) + std::count(rho.begin(), rho.end(), true) +
                            std::count(thickness.begin(), thickness.end(), true));
}

namespace {

struct Misfit {
    const DispersionDataset* data;
    std::vector<double> omegas;  // subset of distinct frequencies
    std::map<double, std::vector<const Sample*>> groups;
    RootScanOptions scan;

    double operator()(const Medium& m) const {
        double acc = 0.0;
        for (double w : omegas) {
            const std::vector<double> roots = roots_at_omega(m, w, scan);
            for (const Sample* s : groups.at(w)) {
                double k_model = w * m.y_min();
                if (s->label > 0) {
                    if (s->label <= static_cast<int>(roots.size())) k_model = w * roots[s->label - 1];
                } else if (!roots.empty()) {
                    double best = std::numeric_limits<double>::infinity();
                    for (double y : roots) {
                        if (std::abs(w * y - s->k) < std::abs(best - s->k)) best = w * y;
                    }
                    k_model = best;
                }
                acc += (k_model - s->k) * (k_model - s->k);
            }
        }
        return acc;
    }
};

}  // namespace

RefineResult least_squares_refine(const Medium& guess, const DispersionDataset& data,
                                  const FreeParameters& free, const RefineOptions& opts) {
    validate_dataset(data);
    const int n = guess.n;
    if (static_cast<int>(free.c.size()) != n + 1 || static_cast<int>(free.rho.size()) != n + 1 ||
        static_cast<int>(free.thickness.size()) != n) {
        throw ConfigError("parameter mask does not match the medium");
    }
    // Re-validate the guess; an inadmissible start cannot be repaired.
    try {
        make_medium(guess.mu, guess.rho, guess.thickness);
    } catch (const Error& e) {
        throw DivergedOrInfeasible(std::string("initial guess is not admissible: ") + e.what());
    }

    Misfit misfit;
    misfit.data = &data;
    for (const Sample& s : data.samples) misfit.groups[s.omega].push_back(&s);
    std::vector<double> distinct;
    for (const auto& [w, v] : misfit.groups) distinct.push_back(w);
    const std::size_t take = std::min<std::size_t>(distinct.size(), static_cast<std::size_t>(opts.max_omegas));
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t idx = take == 1 ? distinct.size() - 1 : i * (distinct.size() - 1) / (take - 1);
        if (misfit.omegas.empty() || misfit.omegas.back() != distinct[idx]) misfit.omegas.push_back(distinct[idx]);
    }

    // Free parameters live in log space, which keeps them positive.
    std::vector<double*> slots;
    std::vector<double> c = guess.c, rho = guess.rho, t = guess.thickness;
    for (int j = 0; j <= n; ++j) if (free.c[j]) slots.push_back(&c[j]);
    for (int j = 0; j <= n; ++j) if (free.rho[j]) slots.push_back(&rho[j]);
    for (int j = 0; j < n; ++j) if (free.thickness[j]) slots.push_back(&t[j]);
    const int dim = static_cast<int>(slots.size());

    RefineResult res;
    auto build = [&](const std::vector<double>& x) -> std::optional<Medium> {
        for (int i = 0; i < dim; ++i) *slots[i] = std::exp(x[i]);
        try {
            return make_medium_from_velocity(c, rho, t);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    auto cost = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const std::optional<Medium> m = build(x);
        return m ? misfit(*m) : std::numeric_limits<double>::infinity();
    };

    std::vector<double> x0(dim);
    for (int i = 0; i < dim; ++i) x0[i] = std::log(*slots[i]);
    res.initial_residual = cost(x0);
    if (!std::isfinite(res.initial_residual)) throw DivergedOrInfeasible("initial guess is not admissible");

    std::vector<std::vector<double>> simplex{x0};
    std::vector<double> fval{res.initial_residual};
    for (int i = 0; i < dim; ++i) {
        std::vector<double> x = x0;
        x[i] += std::log1p(opts.seed_step);
        simplex.push_back(x);
        fval.push_back(cost(x));
    }
    auto order = [&]() {
        std::vector<int> idx(simplex.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fval[a] < fval[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (int i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fval[i]);
        }
        simplex = s2;
        fval = f2;
    };

    for (int it = 0; dim > 0 && it < opts.max_iterations; ++it) {
        order();
        res.iterations = it + 1;
        res.history.push_back(fval[0]);
        if (!std::isfinite(fval[dim]) && !std::isfinite(fval[0])) {
            throw DivergedOrInfeasible("every simplex vertex is inadmissible");
        }
        const double spread = fval[dim] - fval[0];
        double size = 0.0;
        for (int i = 1; i <= dim; ++i) {
            for (int k = 0; k < dim; ++k) size = std::max(size, std::abs(simplex[i][k] - simplex[0][k]));
        }
        if (std::isfinite(spread) && spread <= opts.tolerance * (std::abs(fval[0]) + 1e-300) && size < 1e-10) break;
        if (size < 1e-13) break;

        std::vector<double> centroid(dim, 0.0);
        for (int i = 0; i < dim; ++i) {
            for (int k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / dim;
        }
        auto along = [&](double step) {
            std::vector<double> x(dim);
            for (int k = 0; k < dim; ++k) x[k] = centroid[k] + step * (simplex[dim][k] - centroid[k]);
            return x;
        };
        const std::vector<double> xr = along(-1.0);
        const double fr = cost(xr);
        if (fr < fval[0]) {
            const std::vector<double> xe = along(-2.0);
            const double fe = cost(xe);
            if (fe < fr) { simplex[dim] = xe; fval[dim] = fe; } else { simplex[dim] = xr; fval[dim] = fr; }
            continue;
        }
        if (fr < fval[dim - 1]) {
            simplex[dim] = xr;
            fval[dim] = fr;
            continue;
        }
        const bool outside = fr < fval[dim];
        const std::vector<double> xc = along(outside ? -0.5 : 0.5);
        const double fc = cost(xc);
        if (fc < (outside ? fr : fval[dim])) {
            simplex[dim] = xc;
            fval[dim] = fc;
            continue;
        }
        for (int i = 1; i <= dim; ++i) {
            for (int k = 0; k < dim; ++k) simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
            fval[i] = cost(simplex[i]);
        }
    }
    order();
    const std::optional<Medium> best = build(simplex[0]);
    if (!best) throw DivergedOrInfeasible("no admissible medium found");
    res.medium = *best;
    res.residual = fval[0];
    return res;
}

DispersionDataset synthesize_observations(const Medium& m, const std::vector<double>& omega_grid,
                                          double noise_sigma, std::uint64_t seed,
                                          const RootScanOptions& opts) {
    if (!(noise_sigma >= 0.0)) throw NonPositiveParameter("noise sigma must be nonnegative");
    const BranchSet b = trace_branches(m, omega_grid, opts);
    DispersionDataset d;
    d.noise_sigma = noise_sigma;
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < b.omega_grid.size(); ++i) {
        const double w = b.omega_grid[i];
        for (int l = 0; l < b.counts[i]; ++l) {
            const Branch& br = b.branches[l];
            const std::size_t at = i - (b.omega_grid.size() - br.omega.size());
            double k = w * br.y[at];
            if (noise_sigma > 0.0) k *= 1.0 + noise_sigma * detail::standard_normal(gen);
            d.samples.push_back({w, k, l + 1});
        }
    }
    return d;
}

}  // namespace lovewave
