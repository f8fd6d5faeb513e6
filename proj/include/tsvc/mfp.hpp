#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <vector>

#include "tsvc/core.hpp"
#include "tsvc/dof.hpp"

namespace tsvc {

/// Candidate fractional-polynomial powers; 0 denotes log(x).
inline constexpr std::array<double, 8> kFpPowers = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};

/// Columns of an FP with the given powers on strictly positive x. A repeated
/// power p contributes x^p and x^p log(x).
std::vector<Vector> fp_columns(const Vector& x, const std::vector<double>& powers);

/// Shift making min(x) > 0: zero when x is already positive, otherwise
/// -min(x) + (smallest positive gap between distinct values, or 1).
double positivity_shift(const Vector& x);

/// Functional form of one covariate inside an MFP model.
struct FpForm {
    enum class Kind { Excluded, Linear, Fp };
    Kind kind = Kind::Linear;
    std::vector<double> powers;  // for Kind::Fp, sorted ascending, size 1 or 2

    static FpForm excluded() { return {Kind::Excluded, {}}; }
    static FpForm linear() { return {Kind::Linear, {}}; }
    static FpForm fp(std::vector<double> powers);

    int degree() const noexcept { return kind == Kind::Fp ? static_cast<int>(powers.size()) : 0; }
    bool included() const noexcept { return kind != Kind::Excluded; }
    friend bool operator==(const FpForm&, const FpForm&) = default;
};

std::string describe(const FpForm& form);

/// Best-fitting FP of a fixed degree for one covariate.
struct FpTerm {
    int covariate = 0;
    int degree = 1;
    std::vector<double> powers;
    std::vector<double> coefficients;
    double shift = 0.0;
    double rss = 0.0;
};

/// How the degrees of freedom of an FP comparison are counted.
enum class DfConvention {
    ParameterCount,  // an FP of degree d contributes d coefficients
    CountPowers,     // each estimated power also counts (FP1 = 2, FP2 = 4)
};

struct MfpOptions {
    double alpha = 0.05;
    int max_degree = 2;
    int max_cycles = 10;
    bool shift_nonpositive = true;
    // Cap the degree by the number of distinct values: <= 3 linear only,
    // 4-5 at most FP1.
    bool cap_degree_by_distinct_values = true;
    DfConvention df_convention = DfConvention::ParameterCount;
    int interaction_order = 0;  // 0 none; k adds all products of 2..k covariates
};

/// Covariate order from most to least relevant: descending likelihood-ratio
/// statistic of dropping each covariate from the full linear model (ties keep
/// index order).
std::vector<int> order_covariates(const Dataset& data);

/// Minimal-rss FP of degree d for covariate j with every other covariate held
/// at current_forms[k] (current_forms[j] is ignored). Ties go to the
/// lexicographically smallest power tuple. Throws NonPositiveValues when x_j
/// has values <= 0 and shifting is disabled.
FpTerm best_fp(const Dataset& data, int j, int d, const std::vector<FpForm>& current_forms,
               bool shift_nonpositive = true);

struct MfpTermFit {
    std::string name;
    std::vector<int> covariates;  // one entry for a main effect, >= 2 for a product term
    FpForm form;
    double shift = 0.0;
    std::vector<double> coefficients;
};

struct MfpFit {
    std::vector<std::string> covariate_names;
    std::vector<MfpTermFit> terms;  // included terms only
    std::vector<std::string> excluded;
    double intercept = 0.0;
    double alpha = 0.05;
    double r2 = 0.0;
    double rss = 0.0;
    int cycles = 0;

    const MfpTermFit* find(const std::string& name) const;
    Vector predict(const Matrix& X) const;
    std::string formula(const std::string& response = "dof") const;
    nlohmann::json to_json() const;
};

/// Multivariable fractional polynomial selection. Each cycle visits the main
/// covariates in order_covariates order and runs the closed test
///   best FP(dmax) vs null, vs linear, then FP2 vs FP1,
/// using likelihood-ratio chi-square tests at level alpha. Product terms (if
/// requested) enter with linear form through the same test: included terms are
/// re-tested, then excluded candidates are added forward by largest statistic
/// while significant. Cycles repeat until no form changes; NoConvergence after
/// max_cycles.
MfpFit mfp_select(const Dataset& data, const MfpOptions& options = {});

/// Fits the DoF surface dof ~ (s, p, n) with all second- and third-order
/// products as candidates. Needs at least 20 rows.
MfpFit derive_dof_formula(const DofTable& table, double alpha = 0.05);

}  // namespace tsvc
