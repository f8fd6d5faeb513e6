#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsvc/core.hpp"
#include "tsvc/tree.hpp"

namespace tsvc {

enum class DofApproach { Naive, MfpFormula, McNull, McDgp };

std::string to_string(DofApproach approach);
/// Accepts naive, mfp, mc-null, mc-dgp.
DofApproach parse_dof_approach(const std::string& name);
/// Comma-separated list, e.g. "naive,mfp".
std::vector<DofApproach> parse_dof_approaches(const std::string& list);

struct ScenarioConfig {
    int scenario = 1;  // 1: p = 2, 2: p = 6, 3: p = 10, 4: p = 4
    int s_dgp = 0;
    Eigen::Index n = 100;
    int replications = 25;
    std::uint64_t seed = 1;
    std::optional<int> s_max;  // 5 for scenarios 1-3, 10 for scenario 4
    int min_leaf = 14;
    double min_leaf_fraction = 0.14;
    std::vector<DofApproach> approaches{DofApproach::Naive, DofApproach::MfpFormula};
    bool allow_override = false;  // permit n / s_max outside the published settings
    int threads = 1;
    int mc_m = 100;   // Monte-Carlo settings for mc-null off the grid and mc-dgp
    int mc_runs = 10;

    Eigen::Index p() const;
    int effective_s_max() const;
    FitOptions fit_options() const;
    /// Throws InvalidArgument for settings outside the scenario definitions.
    void validate() const;
};

/// Expected response for the scenario's coefficient functions.
Vector scenario_mean(int scenario, int s_dgp, const Matrix& X);

struct ScenarioDraw {
    Dataset train;
    Dataset test;
    Vector mu_train;
    Vector mu_test;
};

/// Standard-normal covariates and N(0, 1) errors; the test sample is an
/// independent draw of the same size.
ScenarioDraw generate_scenario(const ScenarioConfig& config, int replicate);

/// Gaussian log-likelihood of the test responses with the model's predictions
/// as means and the training sigma2_hat as variance.
double predictive_log_lik(const TsvcModel& model, const Dataset& test);

struct SimRawRow {
    int scenario = 0;
    Eigen::Index n = 0;
    int s_dgp = 0;
    int replicate = 0;
    std::string dof_approach;
    int splits = 0;
    double pred_loglik = 0.0;
};

struct SimSummaryRow {
    int scenario = 0;
    Eigen::Index n = 0;
    int s_dgp = 0;
    std::string dof_approach;
    double mean_splits = 0.0;
    double sd_splits = 0.0;
    double mean_pred_loglik = 0.0;
    double sd_pred_loglik = 0.0;
    int replications = 0;
};

struct SimSummary {
    std::vector<SimSummaryRow> rows;  // one per approach, in config order
    std::vector<SimRawRow> raw;       // replicate-major, approaches in config order

    const SimSummaryRow& row(const std::string& dof_approach) const;

    void write_csv(std::ostream& out) const;
    void write_raw_csv(std::ostream& out) const;
    static std::vector<SimSummaryRow> read_csv(std::istream& in);
    static std::vector<SimRawRow> read_raw_csv(std::istream& in);
};

SimSummary run_simulation(const ScenarioConfig& config);

}  // namespace tsvc
