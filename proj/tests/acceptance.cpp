// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tsvc/dof.hpp"
#include "tsvc/mfp.hpp"
#include "tsvc/parallel.hpp"
#include "tsvc/random.hpp"
#include "tsvc/selection.hpp"
#include "tsvc/simulation.hpp"
#include "tsvc/tree.hpp"

using namespace tsvc;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> info;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [violated]");
    }
};

std::string fmt(double v, int digits = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

const int kThreads = default_thread_count();

Outcome formula_arithmetic() {
    Outcome o;
    const double a = dof_mfp(1, 2, 100);
    const double b = dof_mfp(5, 10, 1000);
    o.require(std::abs(a - 7.922) <= 1e-9, "dof_mfp(1,2,100) = " + fmt(a, 6));
    o.require(std::abs(b - 63.33) <= 1e-9, "dof_mfp(5,10,1000) = " + fmt(b, 6));
    return o;
}

Outcome ols_dof() {
    Outcome o;
    McDofConfig c;
    c.m = 500;
    c.runs = 10;
    c.s_max = 0;
    c.seed = 1;
    c.threads = kThreads;
    const auto r = mc_dof(McDesign{100, 2, std::nullopt}, linear_fitter(), c);
    const double d = *r.dof(0);
    o.require(std::abs(d - 3.0) <= 0.3, "OLS (3 parameters) DoF = " + fmt(d));
    return o;
}

Outcome table1_small_cell() {
    Outcome o;
    McDofConfig c;
    c.m = 100;
    c.runs = 10;
    c.s_max = 5;
    c.seed = 1;
    c.threads = kThreads;
    const auto r = mc_dof(McDesign{100, 2, std::nullopt}, tsvc_path_fitter(5, FitOptions{}), c);
    const double s1 = r.dof(1).value_or(NAN);
    const double s5 = r.dof(5).value_or(NAN);
    o.require(s1 >= 6.99 && s1 <= 7.83, "s=1 DoF " + fmt(s1) + " in [6.99, 7.83]");
    o.require(s5 >= 18.70 && s5 <= 19.84, "s=5 DoF " + fmt(s5) + " in [18.70, 19.84]");
    for (const auto& e : r.estimates) o.info.push_back("s=" + std::to_string(e.s) + " dof " + fmt(e.dof) + " se " + fmt(e.se));
    return o;
}

Outcome formula_rederivation() {
    Outcome o;
    const auto fit = derive_dof_formula(DofTable::reference());
    o.require(fit.r2 >= 0.95, "R^2 = " + fmt(fit.r2, 4));
    auto linear = [&](const std::string& name) {
        const auto* t = fit.find(name);
        return t != nullptr && t->form.kind == FpForm::Kind::Linear;
    };
    o.require(linear("s"), "s linear");
    o.require(linear("p"), "p linear");
    o.require(fit.find("n") == nullptr, "no main effect of n");
    o.require(fit.find("s*p") != nullptr, "s*p included");
    o.require(fit.find("s*p*n") != nullptr, "s*p*n included");
    o.info.push_back(fit.formula());
    const std::vector<std::pair<std::string, double>> published{{"s", 2.02}, {"p", 1.26}, {"s*p", 0.61}, {"s*p*n", 0.00016}};
    auto within = [](double got, double want) { return std::abs(got - want) <= 0.15 * std::abs(want); };
    o.info.push_back("intercept " + fmt(fit.intercept, 4) + " vs 2.13" + (within(fit.intercept, 2.13) ? " (within 15%)" : " (outside 15%)"));
    for (const auto& [name, want] : published) {
        const auto* t = fit.find(name);
        if (t == nullptr) {
            o.info.push_back(name + " missing");
            continue;
        }
        const double got = t->coefficients.at(0);
        o.info.push_back(name + " " + fmt(got, 6) + " vs " + fmt(want, 6) + (within(got, want) ? " (within 15%)" : " (outside 15%)"));
    }
    return o;
}

ScenarioConfig scenario(int id, int s_dgp, Eigen::Index n, int reps, std::vector<DofApproach> approaches) {
    ScenarioConfig c;
    c.scenario = id;
    c.s_dgp = s_dgp;
    c.n = n;
    c.replications = reps;
    c.approaches = std::move(approaches);
    c.threads = kThreads;
    return c;
}

Outcome scenario1_selection() {
    Outcome o;
    const std::vector<DofApproach> both{DofApproach::Naive, DofApproach::MfpFormula};
    const auto null = run_simulation(scenario(1, 0, 400, 25, both));
    const auto one = run_simulation(scenario(1, 1, 400, 25, both));
    const double mfp0 = null.row("mfp").mean_splits;
    const double mfp1 = one.row("mfp").mean_splits;
    const double naive0 = null.row("naive").mean_splits;
    o.require(mfp0 == 0.0, "mfp s_DGP=0 mean " + fmt(mfp0, 2));
    o.require(mfp1 >= 0.9 && mfp1 <= 1.1, "mfp s_DGP=1 mean " + fmt(mfp1, 2) + " in [0.9, 1.1]");
    o.require(naive0 >= 0.0 && naive0 <= 1.2, "naive s_DGP=0 mean " + fmt(naive0, 2) + " in [0, 1.2]");
    o.info.push_back("naive s_DGP=1 mean " + fmt(one.row("naive").mean_splits, 2));
    return o;
}

Outcome scenario3_selection() {
    Outcome o;
    const std::vector<DofApproach> both{DofApproach::Naive, DofApproach::MfpFormula};
    for (int s = 0; s <= 3; ++s) {
        const auto sum = run_simulation(scenario(3, s, 100, 10, both));
        const double naive = sum.row("naive").mean_splits;
        const double mfp = sum.row("mfp").mean_splits;
        if (s == 0) {
            o.require(naive == 5.0, "naive mean " + fmt(naive, 2));
            o.require(mfp == 0.0, "mfp mean " + fmt(mfp, 2));
        } else {
            o.info.push_back("s_DGP=" + std::to_string(s) + ": naive " + fmt(naive, 2) + ", mfp " + fmt(mfp, 2));
        }
    }
    return o;
}

Dataset random_vc_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index p) {
    Rng rng = make_stream(seed, {0xacc, 7});
    Matrix X = standard_normal(rng, n, p);
    Vector y = standard_normal(rng, n);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_int_distribution<Eigen::Index> pick(0, p - 1);
    const int effects = static_cast<int>(rng() % 3);
    for (int e = 0; e < effects; ++e) {
        const Eigen::Index j = pick(rng);
        Eigen::Index k = pick(rng);
        if (k == j) k = (k + 1) % p;
        const double t = u(rng) / 2;
        const double jump = 2 * u(rng);
        for (Eigen::Index i = 0; i < n; ++i)
            if (X(i, k) > t) y[i] += jump * X(i, j);
    }
    return Dataset(std::move(y), std::move(X));
}

Outcome penalty_dominance() {
    Outcome o;
    const int datasets = 200;
    std::vector<int> naive(datasets), mfp(datasets);
    parallel_for(datasets, kThreads, [&](std::size_t d) {
        Rng rng = make_stream(2024, {d});
        const Eigen::Index p = rng() % 2 ? 4 : 2;
        const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng() % 171);
        const auto data = random_vc_dataset(d, n, p);
        FitOptions options;
        options.threads = 1;
        const auto path = fit_path(data, 5, options);
        naive[d] = prune_path(path, NaiveDof{}).selected;
        mfp[d] = prune_path(path, MfpFormulaDof{}).selected;
    });
    int ok = 0;
    double mean_naive = 0, mean_mfp = 0;
    for (int d = 0; d < datasets; ++d) {
        ok += mfp[static_cast<std::size_t>(d)] <= naive[static_cast<std::size_t>(d)];
        mean_naive += naive[static_cast<std::size_t>(d)];
        mean_mfp += mfp[static_cast<std::size_t>(d)];
    }
    o.require(ok == datasets, std::to_string(ok) + "/" + std::to_string(datasets) + " datasets with mfp <= naive");
    o.info.push_back("mean selected: naive " + fmt(mean_naive / datasets, 2) + ", mfp " + fmt(mean_mfp / datasets, 2));
    return o;
}

Outcome predictive_ordering() {
    Outcome o;
    for (int s = 0; s <= 3; ++s) {
        const auto sum = run_simulation(scenario(2, s, 100, 25, {DofApproach::Naive, DofApproach::MfpFormula}));
        const double naive = sum.row("naive").mean_pred_loglik;
        const double mfp = sum.row("mfp").mean_pred_loglik;
        o.require(mfp > naive, "s_DGP=" + std::to_string(s) + " mfp " + fmt(mfp, 2) + " > naive " + fmt(naive, 2));
    }
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    const int datasets = 50;
    int agree = 0, with_split = 0;
    for (int d = 0; d < datasets; ++d) {
        Rng rng = make_stream(77, {static_cast<std::uint64_t>(d)});
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 3);
        const Eigen::Index n = std::max<Eigen::Index>(2 * p + 2, 8 + static_cast<Eigen::Index>(rng() % 43));
        const int min_leaf = 1 + static_cast<int>(rng() % 5);
        const auto data = random_vc_dataset(1000 + static_cast<std::uint64_t>(d), n, p);
        FitOptions options;
        options.min_leaf = min_leaf;
        options.min_leaf_fraction = 0.0;
        const auto expect = oracle::best_split(data.y(), data.X(), oracle::Partition(n, p), min_leaf);
        std::optional<SplitRule> got;
        double rss = 0.0;
        try {
            const auto step = grow_one_split(data, linear_trees(p), options);
            got = step.rule;
            rss = step.model.fit.rss;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoAdmissibleSplit) throw;
        }
        bool same = got.has_value() == expect.has_value();
        if (same && got) {
            ++with_split;
            same = got->target == expect->target && got->modifier == expect->modifier &&
                   got->threshold == expect->threshold && got->parent_leaf == expect->parent_leaf &&
                   std::abs(rss - expect->rss) <= 1e-9 * std::max(1.0, expect->rss);
        }
        agree += same;
    }
    o.require(agree == datasets, std::to_string(agree) + "/" + std::to_string(datasets) + " datasets agree");
    o.info.push_back(std::to_string(with_split) + " datasets had an admissible split");
    return o;
}

Dataset fp_dataset(std::uint64_t seed, const std::vector<double>& powers) {
    Rng rng = make_stream(seed, {0xf9});
    std::uniform_real_distribution<double> u(0.5, 5.0);
    const Eigen::Index n = 120;
    Matrix X(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) X(i, 0) = u(rng);
    const auto cols = fp_columns(X.col(0), powers);
    Vector y = Vector::Constant(n, 0.7);
    const double coef[] = {1.5, -2.0};
    for (std::size_t k = 0; k < cols.size(); ++k) y += coef[k] * cols[k];
    return Dataset(std::move(y), std::move(X));
}

Outcome fp_recovery() {
    Outcome o;
    int fp1 = 0;
    for (double a : kFpPowers) {
        const auto t = best_fp(fp_dataset(1, {a}), 0, 1, {FpForm::linear()});
        fp1 += t.powers == std::vector<double>{a};
    }
    std::vector<std::vector<double>> pairs;
    for (std::size_t i = 0; i < kFpPowers.size(); ++i)
        for (std::size_t k = i; k < kFpPowers.size(); ++k) pairs.push_back({kFpPowers[i], kFpPowers[k]});
    Rng rng = make_stream(10, {});
    std::shuffle(pairs.begin(), pairs.end(), rng);
    int fp2 = 0;
    std::string failed;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto t = best_fp(fp_dataset(2 + i, pairs[i]), 0, 2, {FpForm::linear()});
        if (t.powers == pairs[i])
            ++fp2;
        else
            failed += " (" + fmt(pairs[i][0], 1) + "," + fmt(pairs[i][1], 1) + ")";
        o.info.push_back("FP2 pair (" + fmt(pairs[i][0], 1) + ", " + fmt(pairs[i][1], 1) + ")");
    }
    o.require(fp1 == 8, std::to_string(fp1) + "/8 FP1 powers recovered");
    o.require(fp2 == 10, std::to_string(fp2) + "/10 FP2 pairs recovered" + failed);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"formula arithmetic", formula_arithmetic},
        {"generalized DoF of OLS", ols_dof},
        {"Monte-Carlo DoF, p=2 n=100", table1_small_cell},
        {"DoF formula re-derivation", formula_rederivation},
        {"scenario 1 selection, n=400", scenario1_selection},
        {"scenario 3 selection, n=100", scenario3_selection},
        {"penalty dominance", penalty_dominance},
        {"predictive ordering, scenario 2", predictive_ordering},
        {"greedy step vs exhaustive oracle", oracle_equivalence},
        {"FP power recovery", fp_recovery},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << ": " << criteria[i].first << " | "
                  << o.detail << " (" << fmt(secs, 1) << "s)\n";
        for (const auto& line : o.info) std::cout << "      info: " << line << "\n";
        std::cout.flush();
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
