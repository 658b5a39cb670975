#include "lovewave/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lovewave/branch.hpp"
#include "lovewave/inversion.hpp"
#include "lovewave/medium.hpp"
#include "lovewave/modes.hpp"
#include "lovewave/oracles.hpp"
#include "lovewave/spectral.hpp"

namespace lovewave::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr double kOracleTolerance = 1e-8;

struct Options {
    std::string medium;
    double omega_min = 0.0;  // 0 means one step
    double omega_max = 200.0;
    double omega_step = 0.25;
    double omega = 0.0;
    double y = 0.0;
    double k = 0.0;
    int branch = 0;
    double rho1 = 1.0;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string data;
    std::string mode = "n1";
    int layers = 3;
    int samples = 100;
    double z_max = 0.0;
    int z_points = 401;
};

std::vector<double> grid(const Options& o) {
    const double lo = o.omega_min > 0.0 ? o.omega_min : o.omega_step;
    return make_omega_grid(lo, o.omega_max, o.omega_step);
}

std::filesystem::path out_file(const Options& o, const std::string& name) {
    std::filesystem::create_directories(o.out);
    return std::filesystem::path(o.out) / name;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

// json would print non-finite numbers as null; refuse them instead
double finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NonRealResult(std::string("non-finite ") + what);
    return v;
}

int cmd_trace(const Options& o, std::ostream& out) {
    const Medium m = load_medium(o.medium);
    const BranchSet b = trace_branches(m, grid(o));
    auto bf = open_out(out_file(o, "branches.csv"));
    write_branches_csv(bf, b);
    auto cf = open_out(out_file(o, "cutoffs.csv"));
    write_cutoffs_csv(cf, b);
    out << "branches " << b.size() << '\n';
    return 0;
}

int cmd_count(const Options& o, std::ostream& out) {
    const Medium m = load_medium(o.medium);
    if (!(o.omega > 0.0)) throw OutOfRange("--omega must be positive");
    const int count = mode_count(m, o.omega, o.y);
    const WeylPrediction p = weyl_prediction(m, o.omega, o.y);
    json doc;
    doc["omega"] = o.omega;
    doc["y"] = o.y;
    doc["count"] = count;
    doc["prediction"] = finite(p.value, "prediction");
    doc["proven"] = p.proven;
    out << doc.dump(2) << '\n';
    return 0;
}

int cmd_weyl(const Options& o, std::ostream& out) {
    const Medium m = load_medium(o.medium);
    const std::vector<WeylRow> rows = weyl_table(m, o.y, grid(o));
    auto f = open_out(out_file(o, "weyl.csv"));
    write_weyl_csv(f, rows);
    out << "rows " << rows.size() << '\n';
    return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
    const Medium m = load_medium(o.medium);
    const DispersionDataset d = synthesize_observations(m, grid(o), o.noise, o.seed);
    auto f = open_out(out_file(o, "dataset.csv"));
    write_dataset_csv(f, d);
    out << "samples " << d.samples.size() << '\n';
    return 0;
}

InversionReport least_squares_report(const Options& o, const DispersionDataset& d) {
    if (o.medium.empty()) throw ConfigError("--mode ls needs a starting --medium");
    Medium guess = load_medium(o.medium);
    // density scale is not identifiable; the top layer density is held fixed
    std::vector<double> rho = guess.rho;
    rho[0] = o.rho1;
    guess = make_medium_from_velocity(guess.c, rho, guess.thickness);
    FreeParameters free = FreeParameters::all(guess.n);
    free.rho[0] = false;
    const RefineResult r = least_squares_refine(guess, d, free);

    InversionReport rep;
    const std::string rule = "least-squares wavenumber misfit";
    for (int j = 0; j <= r.medium.n; ++j) rep.parameters.push_back({"c" + std::to_string(j + 1), r.medium.c[j], rule, 0.0});
    for (int j = 0; j < r.medium.n; ++j) {
        rep.parameters.push_back({"t" + std::to_string(j + 1), r.medium.thickness[j], rule, 0.0});
    }
    for (int j = 0; j <= r.medium.n; ++j) {
        rep.parameters.push_back({"rho" + std::to_string(j + 1), r.medium.rho[j], j == 0 ? "given" : rule, 0.0});
    }
    rep.medium = r.medium;
    rep.residual = dispersion_residual(r.medium, d);
    rep.notes.push_back("iterations " + std::to_string(r.iterations) + ", misfit " + format_number(r.initial_residual) +
                        " -> " + format_number(r.residual));
    return rep;
}

int cmd_invert(const Options& o, std::ostream& out) {
    std::ifstream in(o.data, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + o.data);
    const DispersionDataset d = read_dataset_csv(in);
    InversionReport rep;
    if (o.mode == "n1") {
        rep = invert_single_layer(branch_set_from_dataset(d), o.rho1);
    } else if (o.mode == "n2") {
        rep = invert_double_layer(branch_set_from_dataset(d));
    } else {
        rep = least_squares_report(o, d);
    }
    for (const auto& p : rep.parameters) finite(p.value, p.name.c_str());
    auto f = open_out(out_file(o, "report.json"));
    write_report(f, rep);
    write_report(out, rep);
    return 0;
}

int cmd_mode(const Options& o, std::ostream& out) {
    const Medium m = load_medium(o.medium);
    if (!(o.omega > 0.0)) throw OutOfRange("--omega must be positive");
    double k = o.k;
    if (o.branch > 0) {
        const std::vector<double> roots = roots_at_omega(m, o.omega);
        if (o.branch > static_cast<int>(roots.size())) {
            throw OutOfRange("branch " + std::to_string(o.branch) + " does not exist at this omega (" +
                             std::to_string(roots.size()) + " branches)");
        }
        k = o.omega * roots[o.branch - 1];
    }
    const ModeShape ms = mode_shape(m, o.omega, k);
    const ModeDiagnostics dg = mode_residuals(ms, m, o.omega, k);

    const double z_max = o.z_max > 0.0 ? o.z_max : 2.0 * m.bottom();
    if (o.z_points < 2) throw ConfigError("--z-points must be at least 2");
    std::vector<double> depths(o.z_points);
    for (int i = 0; i < o.z_points; ++i) depths[i] = z_max * i / (o.z_points - 1);
    auto f = open_out(out_file(o, "mode.csv"));
    write_mode_csv(f, ms, depths);

    json doc;
    doc["omega"] = o.omega;
    doc["k"] = k;
    doc["y"] = ms.y;
    doc["non_l2"] = dg.non_l2;
    doc["match_residual"] = ms.match_residual;
    doc["phi_jump"] = dg.phi_jump;
    doc["stress_jump"] = dg.stress_jump;
    doc["surface_stress"] = dg.surface_stress;
    doc["ode_residual"] = dg.ode_residual;
    doc["decay_rate"] = dg.decay_rate;
    doc["decay_error"] = dg.decay_error;
    doc["rayleigh_error"] = dg.rayleigh_error;
    doc["quotient"] = dg.quotient;
    for (const auto& [key, v] : doc.items()) {
        if (v.is_number_float()) finite(v.get<double>(), key.c_str());
    }
    out << doc.dump(2) << '\n';
    return 0;
}

int cmd_oracle(const Options& o, std::ostream& out) {
    const Medium m = o.medium.empty() ? random_medium(o.layers, o.seed) : load_medium(o.medium);
    const double lo = o.omega_min > 0.0 ? o.omega_min : 1.0;
    const EquivalenceSummary s = oracle_equivalence(m, o.samples, o.seed, lo, o.omega_max);
    json doc;
    doc["layers"] = m.n;
    doc["samples"] = s.samples;
    doc["degenerate_skipped"] = s.degenerate_skipped;
    doc["max_deviation"] = s.max_deviation;
    doc["worst_omega"] = s.worst_omega;
    doc["worst_y"] = s.worst_y;
    doc["tolerance"] = kOracleTolerance;
    doc["pass"] = s.max_deviation < kOracleTolerance;
    out << doc.dump(2) << '\n';
    return s.max_deviation < kOracleTolerance ? 0 : 3;
}

void add_grid(CLI::App* sub, Options& o) {
    sub->add_option("--omega-min", o.omega_min, "first frequency (default: one step)");
    sub->add_option("--omega-max", o.omega_max, "last frequency")->capture_default_str();
    sub->add_option("--omega-step", o.omega_step, "frequency step")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Love-wave dispersion in layered half-spaces"};
    app.require_subcommand(1);

    auto* trace = app.add_subcommand("trace", "trace all branches on an omega grid");
    trace->add_option("--medium", o.medium, "medium config (JSON)")->required();
    add_grid(trace, o);
    trace->add_option("--out", o.out, "output directory");

    auto* count = app.add_subcommand("count", "mode count and its asymptotic prediction");
    count->add_option("--medium", o.medium)->required();
    count->add_option("--omega", o.omega)->required();
    count->add_option("--y", o.y, "slowness")->required();

    auto* weyl = app.add_subcommand("weyl", "mode count against prediction over an omega grid");
    weyl->add_option("--medium", o.medium)->required();
    weyl->add_option("--y", o.y)->required();
    add_grid(weyl, o);
    weyl->add_option("--out", o.out);

    auto* invert = app.add_subcommand("invert", "recover a medium from a dispersion dataset");
    invert->add_option("--data", o.data, "dataset CSV")->required();
    invert->add_option("--mode", o.mode)->check(CLI::IsMember({"n1", "n2", "ls"}))->capture_default_str();
    invert->add_option("--rho1", o.rho1, "density of the top layer")->capture_default_str();
    invert->add_option("--medium", o.medium, "starting medium for ls");
    invert->add_option("--out", o.out);

    auto* synth = app.add_subcommand("synth", "synthetic dataset from a medium");
    synth->add_option("--medium", o.medium)->required();
    add_grid(synth, o);
    synth->add_option("--noise", o.noise, "multiplicative noise sigma")->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", o.seed);
    synth->add_option("--out", o.out);

    auto* mode = app.add_subcommand("mode", "mode shape and residual report");
    mode->add_option("--medium", o.medium)->required();
    mode->add_option("--omega", o.omega)->required();
    auto* kopt = mode->add_option("--k", o.k, "wavenumber on a branch");
    auto* bopt = mode->add_option("--branch", o.branch, "branch number, 1 is the fundamental")->check(CLI::PositiveNumber);
    kopt->excludes(bopt);
    mode->add_option("--z-max", o.z_max, "deepest sample (default twice the stack)");
    mode->add_option("--z-points", o.z_points)->capture_default_str();
    mode->add_option("--out", o.out);

    auto* oracle = app.add_subcommand("oracle", "determinant against dispersion function at random points");
    oracle->add_option("--medium", o.medium, "medium config; random when absent");
    oracle->add_option("--layers", o.layers, "layers of the random medium")->check(CLI::Range(1, 50));
    oracle->add_option("--samples", o.samples)->check(CLI::PositiveNumber)->capture_default_str();
    oracle->add_option("--seed", o.seed);
    oracle->add_option("--omega-min", o.omega_min);
    oracle->add_option("--omega-max", o.omega_max)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }
    if (*mode && !*kopt && !*bopt) {
        err << "mode needs --k or --branch\n";
        return 1;
    }

    try {
        if (*trace) return cmd_trace(o, out);
        if (*count) return cmd_count(o, out);
        if (*weyl) return cmd_weyl(o, out);
        if (*invert) return cmd_invert(o, out);
        if (*synth) return cmd_synth(o, out);
        if (*mode) return cmd_mode(o, out);
        return cmd_oracle(o, out);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return e.numerical() ? 3 : 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << e.what() << '\n';
        return 2;
    }
}

}  // namespace lovewave::cli
