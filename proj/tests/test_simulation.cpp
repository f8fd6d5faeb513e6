#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "tsvc/selection.hpp"
#include "tsvc/simulation.hpp"

using namespace tsvc;

namespace {

ScenarioConfig config(int scenario, int s_dgp, Eigen::Index n, int reps) {
    ScenarioConfig c;
    c.scenario = scenario;
    c.s_dgp = s_dgp;
    c.n = n;
    c.replications = reps;
    return c;
}

bool rejected(const ScenarioConfig& c) {
    try {
        c.validate();
    } catch (const Error& e) {
        return e.kind() == ErrorKind::InvalidArgument;
    }
    return false;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("scenario means") {
    Matrix x1(1, 2);
    x1 << 1.0, 1.0;
    CHECK(scenario_mean(1, 2, x1)[0] == 3.0);
    CHECK(scenario_mean(1, 1, x1)[0] == 1.0);
    x1 << 1.0, 0.5;
    CHECK(scenario_mean(1, 3, x1)[0] == 0.0);  // 1 + 0 - 1
    x1 << 2.0, -0.5;
    CHECK(scenario_mean(1, 3, x1)[0] == -2.0);

    Matrix x4(1, 4);
    x4 << 1.0, 0.7, 1.0, 0.7;
    CHECK(scenario_mean(4, 6, x4)[0] == 6.0);
    CHECK(scenario_mean(4, 2, x4)[0] == 2.0);
    CHECK(scenario_mean(4, 0, x4)[0] == 0.0);

    Matrix x6 = Matrix::Ones(1, 6);
    CHECK(scenario_mean(2, 0, x6)[0] == 0.0);
    CHECK(scenario_mean(2, 1, x6)[0] == 1.0);
    CHECK(scenario_mean(2, 3, x6)[0] == 3.0);
    CHECK(scenario_mean(3, 3, Matrix::Ones(1, 10))[0] == 3.0);
    CHECK_THROWS_AS(scenario_mean(2, 1, x4), Error);
}

TEST_CASE("null scenario has zero mean") {
    const auto draw = generate_scenario(config(1, 0, 400, 1), 0);
    CHECK(draw.mu_train.isZero());
    CHECK(draw.mu_test.isZero());
}

TEST_CASE("draws are seeded and independent") {
    const auto c = config(2, 2, 100, 1);
    const auto a = generate_scenario(c, 3);
    const auto b = generate_scenario(c, 3);
    const auto other = generate_scenario(c, 4);
    CHECK(a.train.X() == b.train.X());
    CHECK(a.train.y() == b.train.y());
    CHECK(a.train.X() != a.test.X());
    CHECK(a.train.X() != other.train.X());
    CHECK(a.train.p() == 6);
    CHECK(a.test.n() == 100);
    CHECK((a.train.y() - a.mu_train).norm() > 0.0);
}

TEST_CASE("scenario settings are validated") {
    CHECK_NOTHROW(config(1, 3, 1000, 5).validate());
    CHECK_NOTHROW(config(4, 6, 2985, 5).validate());
    CHECK(config(4, 6, 2985, 1).effective_s_max() == 10);
    CHECK(config(2, 1, 400, 1).effective_s_max() == 5);
    CHECK(rejected(config(5, 0, 100, 1)));
    CHECK(rejected(config(1, 4, 100, 1)));
    CHECK(rejected(config(4, 3, 2985, 1)));
    CHECK(rejected(config(1, 0, 123, 1)));
    CHECK(rejected(config(4, 2, 1000, 1)));
    CHECK(rejected(config(1, 0, 100, 0)));
    auto c = config(1, 0, 123, 1);
    c.allow_override = true;
    CHECK_NOTHROW(c.validate());
    c.n = 5;
    CHECK(rejected(c));
    auto s = config(1, 0, 100, 1);
    s.s_max = 3;
    CHECK(rejected(s));
    s.allow_override = true;
    CHECK_NOTHROW(s.validate());
    auto none = config(1, 0, 100, 1);
    none.approaches.clear();
    CHECK(rejected(none));
}

TEST_CASE("approach names") {
    CHECK(parse_dof_approaches("naive,mfp,mc-null,mc-dgp").size() == 4);
    CHECK(to_string(parse_dof_approach("mc-dgp")) == "mc-dgp");
    CHECK_THROWS_AS(parse_dof_approach("bic"), Error);
    CHECK_THROWS_AS(parse_dof_approaches("naive,naive"), Error);
    CHECK_THROWS_AS(parse_dof_approaches(""), Error);
}

TEST_CASE("predictive log-likelihood") {
    const auto draw = generate_scenario(config(1, 1, 100, 1), 0);
    auto model = fit_path(draw.train, 1).at(1);
    model.fit.sigma2_hat = 1.0;
    const Dataset exact(predict(model, draw.test.X()), draw.test.X());
    CHECK(predictive_log_lik(model, exact) == doctest::Approx(-50.0 * std::log(2 * std::numbers::pi)));
    const double base = predictive_log_lik(model, draw.test);
    const Vector pred = predict(model, draw.test.X());
    const Dataset inflated(pred + 2.0 * (draw.test.y() - pred), draw.test.X());
    CHECK(predictive_log_lik(model, inflated) < base);
    const Dataset wrong(Vector::Zero(100), Matrix::Zero(100, 3));
    CHECK_THROWS_AS(predictive_log_lik(model, wrong), Error);
}

TEST_CASE("overfitting costs predictive likelihood under a linear truth") {
    const auto c = config(1, 0, 100, 25);
    double sparse = 0.0, overfit = 0.0;
    for (int r = 0; r < 25; ++r) {
        const auto draw = generate_scenario(c, r);
        const auto path = fit_path(draw.train, 5);
        REQUIRE(path.longest() == 5);
        sparse += predictive_log_lik(path.at(0), draw.test);
        overfit += predictive_log_lik(path.at(5), draw.test);
    }
    CHECK(sparse > overfit);
}

TEST_CASE("null scenario at n = 400") {
    const auto sum = run_simulation(config(1, 0, 400, 25));
    CHECK(sum.row("mfp").mean_splits == 0.0);
    CHECK(sum.row("mfp").replications == 25);
    CHECK(sum.raw.size() == 50);
}

TEST_CASE("single true split at n = 1000") {
    auto c = config(1, 1, 1000, 10);
    c.approaches = {DofApproach::MfpFormula};
    CHECK(run_simulation(c).row("mfp").mean_splits == 1.0);
}

TEST_CASE("naive pruning keeps all splits in scenario 2 at n = 100") {
    auto c = config(2, 0, 100, 25);
    c.approaches = {DofApproach::Naive};
    CHECK(run_simulation(c).row("naive").mean_splits >= 4.5);
}

TEST_CASE("summary is reproducible across thread counts") {
    auto c = config(1, 2, 100, 6);
    c.approaches = {DofApproach::Naive, DofApproach::MfpFormula, DofApproach::McNull};
    std::ostringstream a, b;
    run_simulation(c).write_csv(a);
    c.threads = 3;
    run_simulation(c).write_csv(b);
    CHECK(a.str() == b.str());
}

TEST_CASE("formula never selects more splits than naive") {
    auto c = config(1, 1, 100, 15);
    const auto sum = run_simulation(c);
    for (std::size_t i = 0; i < sum.raw.size(); i += 2) {
        REQUIRE(sum.raw[i].dof_approach == "naive");
        REQUIRE(sum.raw[i + 1].dof_approach == "mfp");
        CHECK(sum.raw[i + 1].splits <= sum.raw[i].splits);
    }
}

TEST_CASE("single replication and CSV round trips") {
    auto c = config(1, 1, 100, 1);
    const auto sum = run_simulation(c);
    CHECK(sum.row("naive").sd_splits == 0.0);
    std::ostringstream out, raw;
    sum.write_csv(out);
    sum.write_raw_csv(raw);
    std::istringstream in(out.str()), raw_in(raw.str());
    const auto rows = SimSummary::read_csv(in);
    const auto raws = SimSummary::read_raw_csv(raw_in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].dof_approach == "mfp");
    CHECK(rows[1].mean_pred_loglik == sum.rows[1].mean_pred_loglik);
    CHECK(rows[0].replications == 1);
    REQUIRE(raws.size() == 2);
    CHECK(raws[0].pred_loglik == sum.raw[0].pred_loglik);
    CHECK(raws[1].splits == sum.raw[1].splits);
    CHECK_THROWS_AS(sum.row("mc-dgp"), Error);
}

TEST_CASE("Monte-Carlo approaches off the shipped grid") {
    auto c = config(1, 2, 150, 2);
    c.allow_override = true;
    c.approaches = {DofApproach::McNull, DofApproach::McDgp};
    c.mc_m = 8;
    c.mc_runs = 1;
    c.s_max = 2;
    const auto sum = run_simulation(c);
    CHECK(sum.rows.size() == 2);
    for (const auto& r : sum.rows) CHECK((r.mean_splits >= 0.0 && r.mean_splits <= 2.0));
}

}
