#include "tsvc/mfp.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace tsvc {

std::vector<Vector> fp_columns(const Vector& x, const std::vector<double>& powers) {
    if ((x.array() <= 0.0).any())
        throw Error(ErrorKind::NonPositiveValues, "fractional polynomials need x > 0");
    auto transform = [&](double power) -> Vector {
        if (power == 0.0) return x.array().log().matrix();
        if (power == 1.0) return x;
        return x.array().pow(power).matrix();
    };
    std::vector<Vector> cols;
    for (std::size_t k = 0; k < powers.size(); ++k) {
        Vector c = transform(powers[k]);
        if (k > 0 && powers[k] == powers[k - 1])
            c = (cols.back().array() * x.array().log()).matrix();
        cols.push_back(std::move(c));
    }
    return cols;
}

double positivity_shift(const Vector& x) {
    const double lo = x.minCoeff();
    if (lo > 0.0) return 0.0;
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1]) gap = std::min(gap, v[i] - v[i - 1]);
    if (!std::isfinite(gap)) gap = 1.0;
    return -lo + gap;
}

FpForm FpForm::fp(std::vector<double> powers) {
    std::sort(powers.begin(), powers.end());
    if (powers.size() == 1 && powers[0] == 1.0) return linear();
    return {Kind::Fp, std::move(powers)};
}

std::string describe(const FpForm& form) {
    switch (form.kind) {
        case FpForm::Kind::Excluded: return "excluded";
        case FpForm::Kind::Linear: return "linear";
        case FpForm::Kind::Fp: break;
    }
    std::ostringstream out;
    out << "FP" << form.powers.size() << "(";
    for (std::size_t i = 0; i < form.powers.size(); ++i) out << (i ? "," : "") << form.powers[i];
    out << ")";
    return out.str();
}

namespace {

// A candidate model term: a main covariate (FP-capable) or a product term
// (linear only).
struct Term {
    std::string name;
    std::vector<int> covariates;
    Vector raw;
    double shift = 0.0;
    int max_degree = 0;
    bool product = false;
};

std::vector<Vector> term_columns(const Term& t, const FpForm& form) {
    switch (form.kind) {
        case FpForm::Kind::Excluded: return {};
        case FpForm::Kind::Linear: return {t.raw};
        case FpForm::Kind::Fp: break;
    }
    Vector shifted = t.raw.array() + t.shift;
    return fp_columns(shifted, form.powers);
}

struct LsResult {
    double rss = std::numeric_limits<double>::infinity();
    Vector coefficients;
};

LsResult least_squares(const Vector& y, const std::vector<Vector>& cols) {
    Matrix design(y.size(), static_cast<Eigen::Index>(cols.size()) + 1);
    design.col(0).setOnes();
    for (std::size_t c = 0; c < cols.size(); ++c) design.col(static_cast<Eigen::Index>(c) + 1) = cols[c];
    LsResult out;
    if (!design.allFinite()) return out;
    try {
        auto fit = solve_least_squares(design, y);
        out.rss = fit.rss;
        out.coefficients = std::move(fit.coefficients);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw;
    }
    return out;
}

int distinct_count(const Vector& x) {
    std::set<double> v(x.data(), x.data() + x.size());
    return static_cast<int>(v.size());
}

int degree_cap(const Vector& x, const MfpOptions& options) {
    int cap = std::clamp(options.max_degree, 0, 2);
    if (options.cap_degree_by_distinct_values) {
        const int k = distinct_count(x);
        if (k <= 3) cap = 0;
        else if (k <= 5) cap = std::min(cap, 1);
    }
    return cap;
}

int form_df(int degree, DfConvention convention) {
    return convention == DfConvention::ParameterCount ? degree : 2 * degree;
}

std::vector<std::vector<double>> power_sets(int d) {
    std::vector<std::vector<double>> out;
    if (d == 1) {
        for (double a : kFpPowers) out.push_back({a});
    } else {
        for (std::size_t i = 0; i < kFpPowers.size(); ++i)
            for (std::size_t k = i; k < kFpPowers.size(); ++k) out.push_back({kFpPowers[i], kFpPowers[k]});
    }
    return out;
}

struct BestFp {
    std::vector<double> powers;
    LsResult fit;
};

BestFp best_fp_given(const Term& t, const Vector& y, const std::vector<Vector>& others, int d) {
    BestFp best;
    for (auto& powers : power_sets(d)) {
        auto cols = others;
        for (auto& c : term_columns(t, FpForm{FpForm::Kind::Fp, powers})) cols.push_back(std::move(c));
        auto fit = least_squares(y, cols);
        if (fit.rss < best.fit.rss) best = BestFp{powers, std::move(fit)};
    }
    if (!std::isfinite(best.fit.rss))
        throw Error(ErrorKind::RankDeficient, "no fractional polynomial of degree " + std::to_string(d) +
                                                  " is estimable for " + t.name);
    return best;
}

// Likelihood-ratio machinery with rss floored at a tiny fraction of the total
// sum of squares, so exact (noise-free) fits compare as equal instead of
// ratioing round-off.
class LrTest {
public:
    LrTest(const Vector& y, double alpha) : n_(static_cast<double>(y.size())), alpha_(alpha) {
        const double tss = (y.array() - y.mean()).matrix().squaredNorm();
        floor_ = std::max(1e-12 * tss, std::numeric_limits<double>::min());
    }

    double statistic(double rss_small, double rss_large) const {
        if (!std::isfinite(rss_large)) return -std::numeric_limits<double>::infinity();
        if (!std::isfinite(rss_small)) return std::numeric_limits<double>::infinity();
        return n_ * std::log(std::max(rss_small, floor_) / std::max(rss_large, floor_));
    }

    bool significant(double rss_small, double rss_large, int df) const {
        if (df <= 0) return false;
        const double lr = statistic(rss_small, rss_large);
        if (!(lr > 0.0)) return false;
        if (std::isinf(lr)) return true;
        const boost::math::chi_squared chi2(df);
        return boost::math::cdf(boost::math::complement(chi2, lr)) < alpha_;
    }

private:
    double n_;
    double alpha_;
    double floor_ = 0.0;
};

std::vector<Vector> columns_except(const std::vector<Term>& terms, const std::vector<FpForm>& forms,
                                   std::size_t skip) {
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i == skip) continue;
        for (auto& c : term_columns(terms[i], forms[i])) cols.push_back(std::move(c));
    }
    return cols;
}

Term main_term(const Dataset& data, int j, bool shift_nonpositive, const MfpOptions* options) {
    Term t;
    t.name = data.names()[static_cast<std::size_t>(j)];
    t.covariates = {j};
    t.raw = data.X().col(j);
    if (shift_nonpositive) t.shift = positivity_shift(t.raw);
    t.max_degree = options ? degree_cap(t.raw, *options) : 2;
    return t;
}

// Closed test for one main covariate given the other terms at their forms.
FpForm closed_test(const Term& t, const Vector& y, const std::vector<Vector>& others,
                   const MfpOptions& options, const LrTest& lr) {
    const double rss_null = least_squares(y, others).rss;
    auto with_linear = others;
    with_linear.push_back(t.raw);
    const double rss_linear = least_squares(y, with_linear).rss;

    // Highest degree whose test against the linear form has positive df.
    int dmax = 0;
    for (int d = t.max_degree; d >= 1; --d)
        if (form_df(d, options.df_convention) > 1) {
            dmax = d;
            break;
        }
    if (dmax == 0)
        return lr.significant(rss_null, rss_linear, 1) ? FpForm::linear() : FpForm::excluded();

    if (t.shift == 0.0 && (t.raw.array() <= 0.0).any())
        throw Error(ErrorKind::NonPositiveValues, t.name + " has values <= 0 and shifting is disabled");
    const BestFp best = best_fp_given(t, y, others, dmax);
    const int df_best = form_df(dmax, options.df_convention);
    if (!lr.significant(rss_null, best.fit.rss, df_best)) return FpForm::excluded();
    if (!lr.significant(rss_linear, best.fit.rss, df_best - 1)) return FpForm::linear();
    if (dmax == 1) return FpForm::fp(best.powers);
    const BestFp fp1 = best_fp_given(t, y, others, 1);
    const int df_diff = df_best - form_df(1, options.df_convention);
    return lr.significant(fp1.fit.rss, best.fit.rss, df_diff) ? FpForm::fp(best.powers)
                                                              : FpForm::fp(fp1.powers);
}

std::string format_coef(double v) {
    std::ostringstream out;
    out << std::setprecision(6) << v;
    return out.str();
}

std::string term_expression(const MfpTermFit& t, std::size_t k) {
    if (t.form.kind == FpForm::Kind::Linear) return t.name;
    const std::string base = t.shift == 0.0 ? t.name : "(" + t.name + "+" + format_coef(t.shift) + ")";
    const double power = t.form.powers[k];
    std::string expr;
    if (power == 0.0) expr = "log" + (base.front() == '(' ? base : "(" + base + ")");
    else if (power == 1.0) expr = base;
    else expr = base + "^" + format_coef(power);
    if (k > 0 && t.form.powers[k] == t.form.powers[k - 1])
        expr += "*log" + (base.front() == '(' ? base : "(" + base + ")");
    return expr;
}

}  // namespace

std::vector<int> order_covariates(const Dataset& data) {
    const int p = static_cast<int>(data.p());
    std::vector<Vector> all;
    for (int j = 0; j < p; ++j) all.push_back(data.X().col(j));
    const auto full = least_squares(data.y(), all);
    if (!std::isfinite(full.rss)) throw Error(ErrorKind::RankDeficient, "full linear model is rank deficient");
    const LrTest lr(data.y(), 0.05);
    std::vector<double> stat(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        auto cols = all;
        cols.erase(cols.begin() + j);
        stat[static_cast<std::size_t>(j)] = lr.statistic(least_squares(data.y(), cols).rss, full.rss);
    }
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return stat[static_cast<std::size_t>(a)] > stat[static_cast<std::size_t>(b)];
    });
    return order;
}

FpTerm best_fp(const Dataset& data, int j, int d, const std::vector<FpForm>& current_forms,
               bool shift_nonpositive) {
    const int p = static_cast<int>(data.p());
    if (j < 0 || j >= p) throw Error(ErrorKind::InvalidArgument, "covariate index out of range");
    if (d != 1 && d != 2) throw Error(ErrorKind::InvalidArgument, "FP degree must be 1 or 2");
    if (static_cast<int>(current_forms.size()) != p)
        throw Error(ErrorKind::DimensionMismatch, "need one form per covariate");
    std::vector<Term> terms;
    for (int k = 0; k < p; ++k) terms.push_back(main_term(data, k, shift_nonpositive, nullptr));
    const Term& t = terms[static_cast<std::size_t>(j)];
    if (t.shift == 0.0 && (t.raw.array() <= 0.0).any())
        throw Error(ErrorKind::NonPositiveValues, t.name + " has values <= 0 and shifting is disabled");
    const auto others = columns_except(terms, current_forms, static_cast<std::size_t>(j));
    const BestFp best = best_fp_given(t, data.y(), others, d);
    FpTerm out;
    out.covariate = j;
    out.degree = d;
    out.powers = best.powers;
    out.shift = t.shift;
    out.rss = best.fit.rss;
    const auto& beta = best.fit.coefficients;
    for (int k = 0; k < d; ++k) out.coefficients.push_back(beta[beta.size() - d + k]);
    return out;
}

const MfpTermFit* MfpFit::find(const std::string& name) const {
    for (const auto& t : terms)
        if (t.name == name) return &t;
    return nullptr;
}

Vector MfpFit::predict(const Matrix& X) const {
    if (X.cols() != static_cast<Eigen::Index>(covariate_names.size()))
        throw Error(ErrorKind::DimensionMismatch, "MFP prediction needs one column per covariate");
    Vector out = Vector::Constant(X.rows(), intercept);
    for (const auto& t : terms) {
        Vector raw = Vector::Ones(X.rows());
        for (int c : t.covariates) raw = raw.cwiseProduct(X.col(c));
        Term term;
        term.raw = std::move(raw);
        term.shift = t.shift;
        const auto cols = term_columns(term, t.form);
        for (std::size_t k = 0; k < cols.size(); ++k) out += t.coefficients[k] * cols[k];
    }
    return out;
}

std::string MfpFit::formula(const std::string& response) const {
    std::ostringstream out;
    out << response << " = " << format_coef(intercept);
    for (const auto& t : terms) {
        for (std::size_t k = 0; k < t.coefficients.size(); ++k) {
            const double c = t.coefficients[k];
            out << (c < 0 ? " - " : " + ") << format_coef(std::abs(c)) << "*" << term_expression(t, k);
        }
    }
    return out.str();
}

nlohmann::json MfpFit::to_json() const {
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& t : terms) {
        jt.push_back({{"name", t.name},
                      {"covariates", t.covariates},
                      {"form", t.form.kind == FpForm::Kind::Linear ? "linear" : "fp"},
                      {"powers", t.form.kind == FpForm::Kind::Linear ? std::vector<double>{1.0} : t.form.powers},
                      {"shift", t.shift},
                      {"coefficients", t.coefficients}});
    }
    return {{"covariates", covariate_names},
            {"intercept", intercept},
            {"terms", jt},
            {"excluded", excluded},
            {"alpha", alpha},
            {"r2", r2},
            {"rss", rss},
            {"cycles", cycles},
            {"formula", formula()}};
}

MfpFit mfp_select(const Dataset& data, const MfpOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
    if (options.max_cycles < 1) throw Error(ErrorKind::InvalidArgument, "max_cycles must be >= 1");
    const int p = static_cast<int>(data.p());
    const Vector& y = data.y();
    const LrTest lr(y, options.alpha);

    std::vector<Term> terms;
    for (int j = 0; j < p; ++j) terms.push_back(main_term(data, j, options.shift_nonpositive, &options));
    std::vector<std::size_t> product_terms;
    if (options.interaction_order >= 2) {
        const int max_order = std::min(options.interaction_order, p);
        for (int order = 2; order <= max_order; ++order) {
            std::vector<bool> pick(static_cast<std::size_t>(p), false);
            std::fill(pick.begin(), pick.begin() + order, true);
            do {
                Term t;
                t.product = true;
                t.raw = Vector::Ones(data.n());
                for (int j = 0; j < p; ++j) {
                    if (!pick[static_cast<std::size_t>(j)]) continue;
                    t.covariates.push_back(j);
                    t.raw = t.raw.cwiseProduct(data.X().col(j));
                    t.name += (t.name.empty() ? "" : "*") + data.names()[static_cast<std::size_t>(j)];
                }
                product_terms.push_back(terms.size());
                terms.push_back(std::move(t));
            } while (std::prev_permutation(pick.begin(), pick.end()));
        }
    }

    std::vector<FpForm> forms(terms.size(), FpForm::linear());
    for (auto idx : product_terms) forms[idx] = FpForm::excluded();
    const auto order = order_covariates(data);

    int cycle = 0;
    bool converged = false;
    while (cycle < options.max_cycles) {
        ++cycle;
        const auto before = forms;
        for (int j : order) {
            const auto idx = static_cast<std::size_t>(j);
            forms[idx] = closed_test(terms[idx], y, columns_except(terms, forms, idx), options, lr);
        }
        if (!product_terms.empty()) {
            for (auto idx : product_terms) {
                if (!forms[idx].included()) continue;
                auto others = columns_except(terms, forms, idx);
                const double rss_without = least_squares(y, others).rss;
                others.push_back(terms[idx].raw);
                if (!lr.significant(rss_without, least_squares(y, others).rss, 1)) forms[idx] = FpForm::excluded();
            }
            for (;;) {
                const auto current = columns_except(terms, forms, terms.size());
                const double rss_current = least_squares(y, current).rss;
                std::size_t best = terms.size();
                double best_stat = -std::numeric_limits<double>::infinity();
                double best_rss = 0.0;
                for (auto idx : product_terms) {
                    if (forms[idx].included()) continue;
                    auto cols = current;
                    cols.push_back(terms[idx].raw);
                    const double rss = least_squares(y, cols).rss;
                    const double stat = lr.statistic(rss_current, rss);
                    if (stat > best_stat) {
                        best_stat = stat;
                        best = idx;
                        best_rss = rss;
                    }
                }
                if (best == terms.size() || !lr.significant(rss_current, best_rss, 1)) break;
                forms[best] = FpForm::linear();
            }
        }
        if (forms == before) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw Error(ErrorKind::NoConvergence, "MFP forms still changing after " + std::to_string(cycle) + " cycles");

    MfpFit fit;
    fit.covariate_names = data.names();
    fit.alpha = options.alpha;
    fit.cycles = cycle;
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!forms[i].included()) {
            fit.excluded.push_back(terms[i].name);
            continue;
        }
        MfpTermFit t;
        t.name = terms[i].name;
        t.covariates = terms[i].covariates;
        t.form = forms[i];
        t.shift = forms[i].kind == FpForm::Kind::Fp ? terms[i].shift : 0.0;
        for (auto& c : term_columns(terms[i], forms[i])) cols.push_back(std::move(c));
        fit.terms.push_back(std::move(t));
    }
    const auto final_fit = least_squares(y, cols);
    if (!std::isfinite(final_fit.rss)) throw Error(ErrorKind::RankDeficient, "selected MFP model is rank deficient");
    fit.intercept = final_fit.coefficients[0];
    Eigen::Index k = 1;
    for (auto& t : fit.terms) {
        const auto width = t.form.kind == FpForm::Kind::Fp ? t.form.powers.size() : 1;
        for (std::size_t c = 0; c < width; ++c) t.coefficients.push_back(final_fit.coefficients[k++]);
    }
    fit.rss = final_fit.rss;
    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    fit.r2 = tss > 0.0 ? std::clamp(1.0 - fit.rss / tss, 0.0, 1.0) : 1.0;
    return fit;
}

MfpFit derive_dof_formula(const DofTable& table, double alpha) {
    const auto& rows = table.rows();
    if (rows.size() < 20)
        throw Error(ErrorKind::InvalidArgument, "DoF formula derivation needs at least 20 table rows, got " +
                                                    std::to_string(rows.size()));
    const auto n = static_cast<Eigen::Index>(rows.size());
    Vector y(n);
    Matrix X(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y[i] = r.dof;
        X(i, 0) = r.s;
        X(i, 1) = r.p;
        X(i, 2) = static_cast<double>(r.n);
    }
    MfpOptions options;
    options.alpha = alpha;
    options.interaction_order = 3;
    return mfp_select(Dataset(std::move(y), std::move(X), {"s", "p", "n"}), options);
}

}  // namespace tsvc
