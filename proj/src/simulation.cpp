#include "tsvc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "tsvc/csv.hpp"
#include "tsvc/dof.hpp"
#include "tsvc/parallel.hpp"
#include "tsvc/random.hpp"
#include "tsvc/selection.hpp"

namespace tsvc {

std::string to_string(DofApproach approach) {
    switch (approach) {
        case DofApproach::Naive: return "naive";
        case DofApproach::MfpFormula: return "mfp";
        case DofApproach::McNull: return "mc-null";
        case DofApproach::McDgp: return "mc-dgp";
    }
    return "?";
}

DofApproach parse_dof_approach(const std::string& name) {
    for (auto a : {DofApproach::Naive, DofApproach::MfpFormula, DofApproach::McNull, DofApproach::McDgp})
        if (to_string(a) == name) return a;
    throw Error(ErrorKind::InvalidArgument, "unknown DoF approach '" + name + "' (naive, mfp, mc-null, mc-dgp)");
}

std::vector<DofApproach> parse_dof_approaches(const std::string& list) {
    std::vector<DofApproach> out;
    std::istringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto a = parse_dof_approach(item);
        if (std::find(out.begin(), out.end(), a) != out.end())
            throw Error(ErrorKind::InvalidArgument, "DoF approach '" + item + "' listed twice");
        out.push_back(a);
    }
    if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no DoF approach given");
    return out;
}

Eigen::Index ScenarioConfig::p() const {
    switch (scenario) {
        case 1: return 2;
        case 2: return 6;
        case 3: return 10;
        case 4: return 4;
    }
    throw Error(ErrorKind::InvalidArgument, "scenario must be 1, 2, 3 or 4");
}

FitOptions ScenarioConfig::fit_options() const {
    FitOptions fit;
    fit.min_leaf = min_leaf;
    fit.min_leaf_fraction = min_leaf_fraction;
    fit.threads = 1;
    return fit;
}

int ScenarioConfig::effective_s_max() const {
    if (s_max) return *s_max;
    return scenario == 4 ? 10 : 5;
}

void ScenarioConfig::validate() const {
    const auto bad = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    const Eigen::Index pp = p();
    if (scenario == 4) {
        if (s_dgp < 0 || s_dgp > 6 || s_dgp % 2 != 0) bad("scenario 4 needs s_dgp in {0, 2, 4, 6}");
    } else if (s_dgp < 0 || s_dgp > 3) {
        bad("scenarios 1-3 need s_dgp in {0, 1, 2, 3}");
    }
    if (!allow_override) {
        if (scenario == 4 && n != 2985) bad("scenario 4 is defined for n = 2985 (use the override flag)");
        if (scenario != 4 && n != 100 && n != 400 && n != 1000)
            bad("scenarios 1-3 are defined for n in {100, 400, 1000} (use the override flag)");
        if (s_max && *s_max != (scenario == 4 ? 10 : 5))
            bad("s_max differs from the scenario setting (use the override flag)");
    }
    if (n < 2 * pp + 2) bad("n too small for p = " + std::to_string(pp));
    if (replications < 1) bad("replications must be >= 1");
    if (effective_s_max() < 0) bad("s_max must be >= 0");
    fit_options().min_leaf_for(n);
    if (approaches.empty()) bad("no DoF approach configured");
    if (mc_m < 2 || mc_runs < 1) bad("Monte-Carlo settings need m >= 2 and runs >= 1");
}

namespace {

// I(x > 0) + 2 I(x > 0.675) - I(x < 0.675), truncated to the first `level` terms.
double step_coefficient(double x, int level) {
    double b = 0.0;
    if (level >= 1) b += x > 0.0 ? 1.0 : 0.0;
    if (level >= 2) b += x > 0.675 ? 2.0 : 0.0;
    if (level >= 3) b -= x < 0.675 ? 1.0 : 0.0;
    return b;
}

constexpr std::uint64_t kMcSalt = 0x4d43444f46ULL;

}  // namespace

Vector scenario_mean(int scenario, int s_dgp, const Matrix& X) {
    Vector mu = Vector::Zero(X.rows());
    const auto need = [&](Eigen::Index cols) {
        if (X.cols() != cols) throw Error(ErrorKind::DimensionMismatch, "wrong number of covariates for scenario");
    };
    switch (scenario) {
        case 1:
            need(2);
            for (Eigen::Index i = 0; i < X.rows(); ++i) mu[i] = step_coefficient(X(i, 1), s_dgp) * X(i, 0);
            break;
        case 2:
        case 3:
            need(scenario == 2 ? 6 : 10);
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                for (int k = 0; k < 3; ++k)
                    if (s_dgp > k) mu[i] += (X(i, 2 * k + 1) > 0.0 ? 1.0 : 0.0) * X(i, 2 * k);
            break;
        case 4:
            need(4);
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                mu[i] = step_coefficient(X(i, 1), s_dgp / 2) * X(i, 0) + step_coefficient(X(i, 3), s_dgp / 2) * X(i, 2);
            break;
        default:
            throw Error(ErrorKind::InvalidArgument, "scenario must be 1, 2, 3 or 4");
    }
    return mu;
}

ScenarioDraw generate_scenario(const ScenarioConfig& config, int replicate) {
    config.validate();
    const auto draw = [&](std::uint64_t part, Vector& mu) {
        auto rng = make_stream(config.seed, {static_cast<std::uint64_t>(replicate), part});
        Matrix X = standard_normal(rng, config.n, config.p());
        mu = scenario_mean(config.scenario, config.s_dgp, X);
        Vector y = mu + standard_normal(rng, config.n);
        return Dataset(std::move(y), std::move(X));
    };
    Vector mu_train, mu_test;
    Dataset train = draw(1, mu_train);
    Dataset test = draw(2, mu_test);
    return {std::move(train), std::move(test), std::move(mu_train), std::move(mu_test)};
}

double predictive_log_lik(const TsvcModel& model, const Dataset& test) {
    const double sigma2 = model.fit.sigma2_hat;
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::DegenerateFit, "training variance estimate is zero");
    const Vector resid = test.y() - predict(model, test.X());
    const double n = static_cast<double>(test.n());
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) - resid.squaredNorm() / (2.0 * sigma2);
}

const SimSummaryRow& SimSummary::row(const std::string& dof_approach) const {
    for (const auto& r : rows)
        if (r.dof_approach == dof_approach) return r;
    throw Error(ErrorKind::InvalidArgument, "no summary row for '" + dof_approach + "'");
}

void SimSummary::write_csv(std::ostream& out) const {
    out << "scenario,n,s_dgp,dof_approach,mean_splits,sd_splits,mean_pred_loglik,sd_pred_loglik,replications\n";
    for (const auto& r : rows)
        out << r.scenario << ',' << r.n << ',' << r.s_dgp << ',' << r.dof_approach << ','
            << format_number(r.mean_splits) << ',' << format_number(r.sd_splits) << ','
            << format_number(r.mean_pred_loglik) << ',' << format_number(r.sd_pred_loglik) << ','
            << r.replications << '\n';
}

void SimSummary::write_raw_csv(std::ostream& out) const {
    out << "scenario,n,s_dgp,replicate,dof_approach,splits,pred_loglik\n";
    for (const auto& r : raw)
        out << r.scenario << ',' << r.n << ',' << r.s_dgp << ',' << r.replicate << ',' << r.dof_approach << ','
            << r.splits << ',' << format_number(r.pred_loglik) << '\n';
}

std::vector<SimSummaryRow> SimSummary::read_csv(std::istream& in) {
    const auto t = read_csv_table(in);
    const auto c = [&](const char* name) { return t.column_index(name); };
    const std::size_t cs = c("scenario"), cn = c("n"), cd = c("s_dgp"), ca = c("dof_approach"),
                      cm = c("mean_splits"), csd = c("sd_splits"), cp = c("mean_pred_loglik"),
                      cps = c("sd_pred_loglik"), cr = c("replications");
    std::vector<SimSummaryRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        SimSummaryRow r;
        r.scenario = static_cast<int>(t.number(i, cs));
        r.n = static_cast<Eigen::Index>(t.number(i, cn));
        r.s_dgp = static_cast<int>(t.number(i, cd));
        r.dof_approach = t.rows[i][ca];
        r.mean_splits = t.number(i, cm);
        r.sd_splits = t.number(i, csd);
        r.mean_pred_loglik = t.number(i, cp);
        r.sd_pred_loglik = t.number(i, cps);
        r.replications = static_cast<int>(t.number(i, cr));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SimRawRow> SimSummary::read_raw_csv(std::istream& in) {
    const auto t = read_csv_table(in);
    const auto c = [&](const char* name) { return t.column_index(name); };
    const std::size_t cs = c("scenario"), cn = c("n"), cd = c("s_dgp"), crep = c("replicate"),
                      ca = c("dof_approach"), csp = c("splits"), cp = c("pred_loglik");
    std::vector<SimRawRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        SimRawRow r;
        r.scenario = static_cast<int>(t.number(i, cs));
        r.n = static_cast<Eigen::Index>(t.number(i, cn));
        r.s_dgp = static_cast<int>(t.number(i, cd));
        r.replicate = static_cast<int>(t.number(i, crep));
        r.dof_approach = t.rows[i][ca];
        r.splits = static_cast<int>(t.number(i, csp));
        r.pred_loglik = t.number(i, cp);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

DofMethod resolve_method(DofApproach approach, const ScenarioConfig& config) {
    const int s_max = config.effective_s_max();
    const Eigen::Index p = config.p();
    McDofConfig mc;
    mc.m = config.mc_m;
    mc.runs = config.mc_runs;
    mc.s_max = s_max;
    mc.seed = mix64(config.seed ^ kMcSalt);
    mc.threads = config.threads;
    const auto fitter = tsvc_path_fitter(s_max, config.fit_options());

    switch (approach) {
        case DofApproach::Naive: return NaiveDof{};
        case DofApproach::MfpFormula: return MfpFormulaDof{};
        case DofApproach::McNull: {
            const auto& table = DofTable::reference();
            bool on_grid = true;
            for (int s = 1; s <= s_max; ++s)
                on_grid = on_grid && table.find(static_cast<int>(p), static_cast<long>(config.n), s).has_value();
            if (on_grid) return McTableDof{LookupMode::Exact, nullptr};
            return McCustomDof{mc_dof(McDesign{config.n, p, std::nullopt}, fitter, mc).as_table()};
        }
        case DofApproach::McDgp: {
            // One fixed design per setting, with the true mean evaluated on it.
            auto rng = make_stream(config.seed, {kMcSalt, 3});
            Matrix X = standard_normal(rng, config.n, p);
            mc.mu = scenario_mean(config.scenario, config.s_dgp, X);
            return McCustomDof{mc_dof(McDesign{config.n, p, std::move(X)}, fitter, mc).as_table()};
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown DoF approach");
}

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

SimSummary run_simulation(const ScenarioConfig& config) {
    config.validate();
    std::vector<DofMethod> methods;
    for (auto a : config.approaches) methods.push_back(resolve_method(a, config));

    const auto reps = static_cast<std::size_t>(config.replications);
    const std::size_t k = methods.size();
    std::vector<int> splits(reps * k);
    std::vector<double> pred(reps * k);
    const FitOptions fit = config.fit_options();
    parallel_for(reps, config.threads, [&](std::size_t r) {
        const auto draw = generate_scenario(config, static_cast<int>(r));
        const auto path = fit_path(draw.train, config.effective_s_max(), fit);
        for (std::size_t a = 0; a < k; ++a) {
            const auto report = prune_path(path, methods[a]);
            splits[r * k + a] = report.selected;
            pred[r * k + a] = predictive_log_lik(path.at(report.selected), draw.test);
        }
    });

    SimSummary summary;
    for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t a = 0; a < k; ++a)
            summary.raw.push_back({config.scenario, config.n, config.s_dgp, static_cast<int>(r),
                                   to_string(config.approaches[a]), splits[r * k + a], pred[r * k + a]});
    for (std::size_t a = 0; a < k; ++a) {
        std::vector<double> sp, pl;
        for (std::size_t r = 0; r < reps; ++r) {
            sp.push_back(splits[r * k + a]);
            pl.push_back(pred[r * k + a]);
        }
        SimSummaryRow row;
        row.scenario = config.scenario;
        row.n = config.n;
        row.s_dgp = config.s_dgp;
        row.dof_approach = to_string(config.approaches[a]);
        row.mean_splits = mean_of(sp);
        row.sd_splits = sd_of(sp, row.mean_splits);
        row.mean_pred_loglik = mean_of(pl);
        row.sd_pred_loglik = sd_of(pl, row.mean_pred_loglik);
        row.replications = config.replications;
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

}  // namespace tsvc
