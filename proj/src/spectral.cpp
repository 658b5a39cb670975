#include "lovewave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "lovewave/dispersion.hpp"

namespace lovewave {

int mode_count(const Medium& m, double omega, double y, const RootScanOptions& opts) {
    if (!(omega > 0.0)) throw OutOfRange("omega must be positive");
    if (y < m.y_min()) throw OutOfRange("slowness below 1/c_inf");
    const double top = m.y_max() * (1.0 - opts.y_margin);
    if (y >= top) return 0;
    return static_cast<int>(roots_in_interval(m, omega, y, top, opts).size());
}

WeylPrediction weyl_prediction(const Medium& m, double omega, double y) {
    if (y < m.y_min() || y >= m.y_max()) throw OutOfRange("slowness outside [1/c_inf, 1/c_min)");
    WeylPrediction w;
    w.value = oscillatory_phase(m, omega, y) / std::numbers::pi;
    if (m.n <= 2) {
        w.proven = true;
    } else {
        const OrderedProfile p = ordered_profile(m);
        const double c2 = p.c_tilde[1];
        w.proven = m.c_min < c2 && y >= 1.0 / c2;
    }
    return w;
}

double accumulation_statistic(const Medium& m, double omega, double y, const RootScanOptions& opts) {
    if (!(omega > 0.0)) throw OutOfRange("omega must be positive");
    const double shifted = y - 1.0 / omega;
    if (shifted <= m.y_min()) {
        throw OutOfRange("shifted slowness " + format_number(shifted) + " is not above 1/c_inf = " +
                         format_number(m.y_min()));
    }
    const int upper = mode_count(m, omega, y, opts);
    const int lower = mode_count(m, omega, shifted, opts);
    return std::numbers::pi * (lower - upper) / std::sqrt(2.0 * omega);
}

namespace {

struct RankSample {
    double scale;  // omega / pi
    double y;
    double rank;   // l - 1/2
};

struct CountFit {
    std::vector<double> thickness;
    double rss = std::numeric_limits<double>::infinity();
};

// Least-squares fit of branch ranks against the counting law
// rank ~ (omega/pi) sum_p t_p sqrt(L_p^2 - y^2)_+ + c.
CountFit fit_counting_law(const std::vector<RankSample>& data, const std::vector<double>& levels) {
    const int k = static_cast<int>(levels.size());
    Eigen::MatrixXd design(data.size(), k + 1);
    Eigen::VectorXd rhs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int p = 0; p < k; ++p) {
            const double lvl = levels[p];
            const double y = data[i].y;
            design(i, p) = y < lvl ? data[i].scale * std::sqrt((lvl - y) * (lvl + y)) : 0.0;
        }
        design(i, k) = 1.0;
        rhs(i) = data[i].rank;
    }
    const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
    CountFit fit;
    fit.thickness.assign(sol.data(), sol.data() + k);
    fit.rss = (design * sol - rhs).squaredNorm();
    return fit;
}

double golden_min(const std::function<double(double)>& f, double a, double b) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && b - a > 1e-14 * b; ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - g * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + g * (b - a); f2 = f(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

}  // namespace

std::vector<Level> detect_levels(const BranchSet& b, const LevelOptions& opts) {
    if (b.omega_grid.empty()) throw InsufficientData("empty branch set");
    const std::size_t last = b.omega_grid.size() - 1;
    const std::vector<double> ys = b.slownesses_at(last);  // descending
    const std::size_t count = ys.size();
    if (count < 10) {
        throw InsufficientData("only " + std::to_string(count) + " branches at the largest omega");
    }
    const double top = ys.front(), bottom = ys.back();
    const double range = top - bottom;
    const double h = range / (2.0 * std::sqrt(static_cast<double>(count)));

    // Gaussian kernel density of slownesses on a fine grid.
    const int grid = 2000;
    std::vector<double> gy(grid), dens(grid, 0.0);
    for (int i = 0; i < grid; ++i) {
        gy[i] = bottom + (range + h) * i / (grid - 1);
        for (double y : ys) dens[i] += std::exp(-0.5 * std::pow((gy[i] - y) / h, 2));
    }
    double mean = 0.0;
    for (int i = 0; i < grid; ++i) mean += dens[i];
    mean /= grid;

    // Each density peak is represented by the top member of its cluster: the
    // branch with the largest ratio of gap above to gap below.
    std::vector<double> ascending(ys.rbegin(), ys.rend());
    std::vector<std::size_t> tops;
    for (int i = 1; i + 1 < grid; ++i) {
        if (!(dens[i] > dens[i - 1] && dens[i] >= dens[i + 1] && dens[i] > mean)) continue;
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t t = 1; t < ascending.size(); ++t) {
            if (std::abs(ascending[t] - gy[i]) > 2.0 * h) continue;
            const double below = ascending[t] - ascending[t - 1];
            const double above = t + 1 < ascending.size() ? ascending[t + 1] - ascending[t]
                                                           : std::numeric_limits<double>::infinity();
            const double ratio = below > 0.0 ? above / below : std::numeric_limits<double>::infinity();
            if (ratio > best) {
                best = ratio;
                arg = t;
            }
        }
        if (best > 0.0 && std::find(tops.begin(), tops.end(), arg) == tops.end()) tops.push_back(arg);
    }
    if (tops.empty()) throw UnresolvedLevels("no accumulation of branch slownesses found");

    // Rank data over the top decade of omega.
    std::vector<std::size_t> nodes;
    const double w_lo = b.omega_grid[last] / opts.top_decade;
    std::size_t first = std::lower_bound(b.omega_grid.begin(), b.omega_grid.end(), w_lo) - b.omega_grid.begin();
    const std::size_t span = last - first;
    const int picks = std::max(1, std::min<int>(opts.fit_nodes, static_cast<int>(span) + 1));
    for (int k = 0; k < picks; ++k) {
        const std::size_t idx = picks == 1 ? last : first + span * k / (picks - 1);
        if (nodes.empty() || nodes.back() != idx) nodes.push_back(idx);
    }
    std::vector<RankSample> data;
    for (std::size_t idx : nodes) {
        const std::vector<double> at = b.slownesses_at(idx);
        for (std::size_t r = 0; r < at.size(); ++r) {
            data.push_back({b.omega_grid[idx] / std::numbers::pi, at[r], static_cast<double>(r) + 0.5});
        }
    }

    struct Candidate {
        double lo, hi, level;
    };
    std::vector<Candidate> cands;
    for (std::size_t t : tops) {
        const double y = ascending[t];
        const double above = t + 1 < ascending.size() ? ascending[t + 1] - y : y - ascending[t - 1];
        cands.push_back({y, y + 0.5 * above, y});
    }

    CountFit fit;
    for (int round = 0; round < 8; ++round) {
        std::vector<double> levels;
        for (const auto& c : cands) levels.push_back(c.level);
        // refine each level position with the others held fixed
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < cands.size(); ++p) {
                auto rss = [&](double lvl) {
                    std::vector<double> trial = levels;
                    trial[p] = lvl;
                    return fit_counting_law(data, trial).rss;
                };
                levels[p] = golden_min(rss, cands[p].lo, cands[p].hi);
            }
        }
        for (std::size_t p = 0; p < cands.size(); ++p) cands[p].level = levels[p];
        fit = fit_counting_law(data, levels);
        double total = 0.0;
        for (double t : fit.thickness) total += std::max(t, 0.0);
        std::size_t worst = 0;
        for (std::size_t p = 1; p < cands.size(); ++p) {
            if (fit.thickness[p] < fit.thickness[worst]) worst = p;
        }
        if (cands.size() > 1 && fit.thickness[worst] < opts.min_share * total) {
            cands.erase(cands.begin() + static_cast<long>(worst));
            continue;
        }
        break;
    }

    std::vector<Level> out;
    for (std::size_t p = 0; p < cands.size(); ++p) {
        if (!(fit.thickness[p] > 0.0)) continue;
        Level lvl;
        lvl.slowness = cands[p].level;
        lvl.thickness = fit.thickness[p];
        lvl.weight = lvl.thickness * std::sqrt(lvl.slowness);
        lvl.floor = cands[p].lo;
        out.push_back(lvl);
    }
    if (out.empty()) throw UnresolvedLevels("no level carries positive weight");
    std::sort(out.begin(), out.end(), [](const Level& a, const Level& c) { return a.slowness > c.slowness; });
    return out;
}

std::vector<WeylRow> weyl_table(const Medium& m, double y, const std::vector<double>& omegas,
                                const RootScanOptions& opts) {
    std::vector<WeylRow> rows;
    for (double w : omegas) {
        WeylRow r;
        r.omega = w;
        r.y = y;
        r.count = mode_count(m, w, y, opts);
        r.prediction = weyl_prediction(m, w, y);
        r.rel_error = r.prediction.value > 0.0 ? (r.count - r.prediction.value) / r.prediction.value : 0.0;
        rows.push_back(r);
    }
    return rows;
}

void write_weyl_csv(std::ostream& out, const std::vector<WeylRow>& rows) {
    out << "omega,y,count,prediction,proven,rel_error\n";
    for (const WeylRow& r : rows) {
        out << format_number(r.omega) << ',' << format_number(r.y) << ',' << r.count << ','
            << format_number(r.prediction.value) << ',' << (r.prediction.proven ? "true" : "false") << ','
            << format_number(r.rel_error) << '\n';
    }
}

}  // namespace lovewave
