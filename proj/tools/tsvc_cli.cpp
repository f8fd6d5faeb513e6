#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "tsvc/csv.hpp"
#include "tsvc/dof.hpp"
#include "tsvc/mfp.hpp"
#include "tsvc/parallel.hpp"
#include "tsvc/selection.hpp"
#include "tsvc/simulation.hpp"
#include "tsvc/tree.hpp"

namespace {

using namespace tsvc;

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

struct FitArgs {
    std::string input;
    std::string response = "y";
    int smax = 5;
    int min_leaf = 14;
    double min_leaf_fraction = 0.14;
    std::string dof = "mfp";
    std::string dof_table;
    std::string lookup = "nearest";
    std::string out_model;
    std::string out_report;
    std::uint64_t seed = 1;
};

Dataset load_dataset(const std::string& path, const std::string& response) {
    const auto table = read_csv_file(path);
    const std::size_t ycol = table.column_index(response);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto p = static_cast<Eigen::Index>(table.header.size()) - 1;
    if (p < 1) throw Error(ErrorKind::InvalidDataset, "need at least one covariate column besides " + response);
    Vector y(n);
    Matrix X(n, p);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (c != ycol) names.push_back(table.header[c]);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        y[i] = table.number(row, ycol);
        Eigen::Index j = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c)
            if (c != ycol) X(i, j++) = table.number(row, c);
    }
    return Dataset(std::move(y), std::move(X), std::move(names));
}

DofMethod make_method(const FitArgs& a) {
    if (a.dof == "naive") return NaiveDof{};
    if (a.dof == "mfp") return MfpFormulaDof{};
    if (a.dof == "mc-table") {
        McTableDof method{parse_lookup_mode(a.lookup), nullptr};
        if (!a.dof_table.empty())
            method.table = std::make_shared<const DofTable>(DofTable::read_csv_file(a.dof_table));
        return method;
    }
    if (a.dof == "mc-custom") {
        if (a.dof_table.empty())
            throw Error(ErrorKind::InvalidArgument, "--dof mc-custom needs --dof-table (an mc-dof output)");
        return McCustomDof{DofTable::read_csv_file(a.dof_table)};
    }
    throw Error(ErrorKind::InvalidArgument, "unknown --dof '" + a.dof + "' (naive, mfp, mc-table, mc-custom)");
}

int cmd_fit(const FitArgs& a, int threads) {
    const auto method = make_method(a);
    const auto data = load_dataset(a.input, a.response);
    FitOptions options;
    options.min_leaf = a.min_leaf;
    options.min_leaf_fraction = a.min_leaf_fraction;
    options.threads = threads;
    options.min_leaf_for(data.n());

    const auto path = fit_path(data, a.smax, options);
    const auto report = prune_path(path, method);
    const auto& chosen = path.at(report.selected);
    const auto& row = report.rows[static_cast<std::size_t>(report.selected)];

    if (!a.out_model.empty()) {
        auto doc = model_to_json(chosen);
        doc["dof_method"] = report.dof_method;
        doc["dof"] = row.dof;
        doc["bic"] = row.bic;
        nlohmann::json rules = nlohmann::json::array();
        for (int s = 0; s < report.selected; ++s) rules.push_back(describe(path.rules[static_cast<std::size_t>(s)], data.names()));
        doc["splits_applied"] = rules;
        write_text(a.out_model, doc.dump(2) + "\n");
    }
    if (!a.out_report.empty()) {
        auto out = open_output(a.out_report);
        report.write_csv(out);
    }
    std::cout << "path length: " << path.longest() << " of " << a.smax << " splits\n";
    for (int s = 0; s < report.selected; ++s)
        std::cout << "  split " << s + 1 << ": " << describe(path.rules[static_cast<std::size_t>(s)], data.names()) << "\n";
    std::cout << "selected s = " << report.selected << "  dof = " << fixed(row.dof) << "  bic = " << fixed(row.bic)
              << "  (" << report.dof_method << ")\n";
    return 0;
}

struct McArgs {
    long n = 100;
    int p = 2;
    int smax = 5;
    int m = 100;
    int runs = 10;
    std::uint64_t seed = 1;
    int min_leaf = 14;
    double min_leaf_fraction = 0.14;
    std::string out;
};

int cmd_mc_dof(const McArgs& a, int threads) {
    FitOptions options;
    options.min_leaf = a.min_leaf;
    options.min_leaf_fraction = a.min_leaf_fraction;
    options.min_leaf_for(a.n);
    if (a.n < 2L * a.p + 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2p + 2");
    McDofConfig config;
    config.m = a.m;
    config.runs = a.runs;
    config.s_max = a.smax;
    config.seed = a.seed;
    config.threads = threads;
    const auto result = mc_dof(McDesign{a.n, a.p, std::nullopt}, tsvc_path_fitter(a.smax, options), config);
    if (!a.out.empty()) {
        auto out = open_output(a.out);
        result.write_csv(out);
    }
    result.write_csv(std::cout);
    if (result.early_stops > 0)
        std::cerr << "note: " << result.early_stops << " replicate paths stopped before s = " << a.smax << "\n";
    return 0;
}

struct DeriveArgs {
    std::string table;
    double alpha = 0.05;
    std::string out;
};

int cmd_derive_formula(const DeriveArgs& a) {
    const DofTable table = a.table.empty() ? DofTable::reference() : DofTable::read_csv_file(a.table);
    const auto fit = derive_dof_formula(table, a.alpha);
    if (!a.out.empty()) write_text(a.out, fit.to_json().dump(2) + "\n");
    std::cout << fit.formula() << "\n";
    std::cout << "R^2 = " << fixed(fit.r2) << "\n";
    for (const auto& t : fit.terms) std::cout << "  " << t.name << ": " << describe(t.form) << "\n";
    for (const auto& name : fit.excluded) std::cout << "  " << name << ": excluded\n";
    return 0;
}

struct SimArgs {
    int scenario = 1;
    int s_dgp = 0;
    long n = 100;
    int reps = 25;
    std::string dof = "naive,mfp";
    std::uint64_t seed = 1;
    std::optional<int> smax;
    int min_leaf = 14;
    double min_leaf_fraction = 0.14;
    bool override_settings = false;
    int mc_m = 100;
    int mc_runs = 10;
    std::string out;
    std::string raw_out;
};

int cmd_simulate(const SimArgs& a, int threads) {
    ScenarioConfig config;
    config.scenario = a.scenario;
    config.s_dgp = a.s_dgp;
    config.n = a.n;
    config.replications = a.reps;
    config.seed = a.seed;
    config.s_max = a.smax;
    config.min_leaf = a.min_leaf;
    config.min_leaf_fraction = a.min_leaf_fraction;
    config.approaches = parse_dof_approaches(a.dof);
    config.allow_override = a.override_settings;
    config.threads = threads;
    config.mc_m = a.mc_m;
    config.mc_runs = a.mc_runs;
    config.validate();

    const auto summary = run_simulation(config);
    if (!a.out.empty()) {
        auto out = open_output(a.out);
        summary.write_csv(out);
    }
    if (!a.raw_out.empty()) {
        auto out = open_output(a.raw_out);
        summary.write_raw_csv(out);
    }
    summary.write_csv(std::cout);
    return 0;
}

struct DofArgs {
    int s = 1;
    int p = 2;
    long n = 100;
    std::string approach = "mfp";
    std::string table;
    std::string lookup = "nearest";
};

int cmd_dof(const DofArgs& a) {
    FitArgs f;
    f.dof = a.approach;
    f.dof_table = a.table;
    f.lookup = a.lookup;
    std::cout << format_number(dof_for(make_method(f), a.p, a.n, a.s)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-structured varying coefficient models with search-aware degrees of freedom"};
    app.require_subcommand(1);
    int threads = 0;
    app.fallthrough();
    app.add_option("--threads", threads, "Worker threads (default: TSVC_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a TSVC path to a CSV file and prune it by BIC");
    fit_cmd->add_option("--input,-i", fit.input, "Input CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--response,-y", fit.response, "Response column")->capture_default_str();
    fit_cmd->add_option("--smax", fit.smax, "Maximum number of splits")->capture_default_str()->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--min-leaf", fit.min_leaf, "Minimum child size")->capture_default_str()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--min-leaf-fraction", fit.min_leaf_fraction, "Minimum child size as a fraction of n")
        ->capture_default_str()->check(CLI::Range(0.0, 0.49));
    fit_cmd->add_option("--dof", fit.dof, "naive, mfp, mc-table or mc-custom")->capture_default_str();
    fit_cmd->add_option("--dof-table", fit.dof_table, "DoF table CSV (p,n,s,dof,se) for mc-table / mc-custom")
        ->check(CLI::ExistingFile);
    fit_cmd->add_option("--lookup", fit.lookup, "mc-table lookup: exact or nearest")->capture_default_str();
    fit_cmd->add_option("--out-model", fit.out_model, "Write the selected model as JSON");
    fit_cmd->add_option("--out-report", fit.out_report, "Write the pruning report as CSV");
    fit_cmd->add_option("--seed", fit.seed, "Seed (fitting is deterministic; accepted for uniformity)");

    McArgs mc;
    auto* mc_cmd = app.add_subcommand("mc-dof", "Monte-Carlo degrees of freedom under a null DGP");
    mc_cmd->add_option("--n", mc.n, "Sample size")->capture_default_str()->check(CLI::PositiveNumber);
    mc_cmd->add_option("--p", mc.p, "Number of covariates")->capture_default_str()->check(CLI::Range(2, 1000));
    mc_cmd->add_option("--smax", mc.smax, "Maximum number of splits")->capture_default_str()->check(CLI::NonNegativeNumber);
    mc_cmd->add_option("--m", mc.m, "Replicates per run")->capture_default_str()->check(CLI::Range(2, 1000000));
    mc_cmd->add_option("--runs,-R", mc.runs, "Independent runs")->capture_default_str()->check(CLI::PositiveNumber);
    mc_cmd->add_option("--seed", mc.seed, "Seed")->capture_default_str();
    mc_cmd->add_option("--min-leaf", mc.min_leaf, "Minimum child size")->capture_default_str()->check(CLI::PositiveNumber);
    mc_cmd->add_option("--min-leaf-fraction", mc.min_leaf_fraction, "Minimum child size as a fraction of n")
        ->capture_default_str()->check(CLI::Range(0.0, 0.49));
    mc_cmd->add_option("--out,-o", mc.out, "Output CSV (p,n,s,dof,se)");

    DeriveArgs derive;
    auto* derive_cmd = app.add_subcommand("derive-formula", "Fit an MFP DoF surface to a DoF table");
    derive_cmd->add_option("--table", derive.table, "DoF table CSV (default: shipped reference grid)")
        ->check(CLI::ExistingFile);
    derive_cmd->add_option("--alpha", derive.alpha, "Significance level")->capture_default_str()
        ->check(CLI::Range(1e-12, 0.999999));
    derive_cmd->add_option("--out,-o", derive.out, "Output JSON");

    SimArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation scenario");
    sim_cmd->add_option("--scenario", sim.scenario, "1 (p=2), 2 (p=6), 3 (p=10) or 4 (p=4)")->required()
        ->check(CLI::Range(1, 4));
    sim_cmd->add_option("--s-dgp", sim.s_dgp, "True number of splits")->capture_default_str();
    sim_cmd->add_option("--n", sim.n, "Training sample size")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--reps", sim.reps, "Replications")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--dof", sim.dof, "Comma-separated: naive, mfp, mc-null, mc-dgp")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Seed")->capture_default_str();
    sim_cmd->add_option("--smax", sim.smax, "Maximum splits (default 5, scenario 4: 10)");
    sim_cmd->add_option("--min-leaf", sim.min_leaf, "Minimum child size")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--min-leaf-fraction", sim.min_leaf_fraction, "Minimum child size as a fraction of n")
        ->capture_default_str()->check(CLI::Range(0.0, 0.49));
    sim_cmd->add_flag("--override", sim.override_settings, "Allow n / smax outside the scenario settings");
    sim_cmd->add_option("--mc-m", sim.mc_m, "Monte-Carlo replicates for mc-null / mc-dgp")->capture_default_str();
    sim_cmd->add_option("--mc-runs", sim.mc_runs, "Monte-Carlo runs for mc-null / mc-dgp")->capture_default_str();
    sim_cmd->add_option("--out,-o", sim.out, "Summary CSV");
    sim_cmd->add_option("--raw-out", sim.raw_out, "Per-replicate CSV");

    DofArgs dof;
    auto* dof_cmd = app.add_subcommand("dof", "Print the DoF of a model with s splits");
    dof_cmd->add_option("--s", dof.s, "Number of splits")->required()->check(CLI::NonNegativeNumber);
    dof_cmd->add_option("--p", dof.p, "Number of covariates")->required()->check(CLI::PositiveNumber);
    dof_cmd->add_option("--n", dof.n, "Sample size")->required()->check(CLI::PositiveNumber);
    dof_cmd->add_option("--approach", dof.approach, "naive, mfp, mc-table or mc-custom")->capture_default_str();
    dof_cmd->add_option("--table", dof.table, "DoF table CSV")->check(CLI::ExistingFile);
    dof_cmd->add_option("--lookup", dof.lookup, "mc-table lookup: exact or nearest")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (threads == 0) threads = default_thread_count();

    try {
        if (*fit_cmd) return cmd_fit(fit, threads);
        if (*mc_cmd) return cmd_mc_dof(mc, threads);
        if (*derive_cmd) return cmd_derive_formula(derive);
        if (*sim_cmd) return cmd_simulate(sim, threads);
        if (*dof_cmd) return cmd_dof(dof);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return e.is_input_error() ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
