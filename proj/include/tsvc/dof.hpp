#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsvc/core.hpp"
#include "tsvc/tree.hpp"

namespace tsvc {

/// Free-parameter count p + s + 1 (intercept, one slope per covariate, one
/// extra coefficient per split).
double dof_naive(int p, int s);

/// Closed-form TSVC degrees of freedom
///   2.13 + 2.02 s + 1.26 p + 0.61 p s + 0.00016 p s n   for s >= 1,
/// and p + 1 for the unsplit model. Requires p >= 2.
double dof_mfp(int s, int p, double n);

struct DofTableRow {
    int p = 0;
    long n = 0;
    int s = 0;
    double dof = 0.0;
    double se = 0.0;
};

enum class LookupMode { Exact, Nearest };

LookupMode parse_lookup_mode(const std::string& name);

/// Grid of Monte-Carlo DoF values keyed by (p, n, s). CSV schema: p,n,s,dof,se.
class DofTable {
public:
    DofTable() = default;
    explicit DofTable(std::vector<DofTableRow> rows);

    /// The shipped null-DGP grid: p in {2,4,6,8,10}, n in {100,400,700,1000},
    /// s in 1..5, m = 100 replicates averaged over R = 10 runs.
    static const DofTable& reference();

    static DofTable read_csv(std::istream& in);
    static DofTable read_csv_file(const std::string& path);
    void write_csv(std::ostream& out) const;

    /// Exact mode needs (p, n, s) on the grid (OffGrid otherwise). Nearest mode
    /// snaps p then n to the closest grid value (ties to the smaller value)
    /// and requires s to be present exactly.
    double lookup(int p, long n, int s, LookupMode mode = LookupMode::Exact) const;
    std::optional<DofTableRow> find(int p, long n, int s) const;

    const std::vector<DofTableRow>& rows() const noexcept { return rows_; }

private:
    std::vector<DofTableRow> rows_;
};

/// Fitted values of each nested model for one response draw; element s holds
/// the fit with s splits. A procedure that stops early returns fewer entries.
using PathFitter = std::function<std::vector<Vector>(const Dataset&)>;

PathFitter tsvc_path_fitter(int s_max, FitOptions options = {});
/// Non-adaptive OLS on [1, X]; its generalized DoF equals p + 1.
PathFitter linear_fitter();

struct McDofConfig {
    Vector mu;  // expectation vector; empty means 0_n
    int m = 100;
    int runs = 10;
    int s_max = 5;
    std::uint64_t seed = 1;
    int threads = 1;
};

/// Design used by mc_dof: either a fixed X (reused by every run) or only the
/// shape, in which case each run draws a fresh standard-normal X.
struct McDesign {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    std::optional<Matrix> X;
};

struct McDofEstimate {
    int s = 0;
    double dof = 0.0;
    double se = 0.0;  // standard deviation over runs / sqrt(runs); 0 for a single run
    int runs = 0;     // runs that contributed (reached s with >= 2 replicates)
};

struct McDofResult {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    std::uint64_t seed = 0;
    int m = 0;
    int runs = 0;
    std::vector<McDofEstimate> estimates;  // s = 0, 1, ...
    int early_stops = 0;                   // replicate paths shorter than s_max

    std::optional<double> dof(int s) const;
    DofTable as_table() const;
    void write_csv(std::ostream& out) const;
};

/// Monte-Carlo generalized degrees of freedom: per run, draw m responses
/// y ~ N(mu, I), fit the path to each, and sum over observations the unbiased
/// sample covariance between fitted and observed values; then average the
/// per-run estimates. Every (run, replicate) draws from its own stream derived
/// from the seed, so results do not depend on the thread schedule.
McDofResult mc_dof(const McDesign& design, const PathFitter& fitter, const McDofConfig& config);

}  // namespace tsvc
