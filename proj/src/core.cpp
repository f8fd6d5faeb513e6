#include "tsvc/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace tsvc {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::InvalidDataset: return "InvalidDataset";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::DegenerateFit: return "DegenerateFit";
        case ErrorKind::EmptyLeaf: return "EmptyLeaf";
        case ErrorKind::NoAdmissibleSplit: return "NoAdmissibleSplit";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::OffGrid: return "OffGrid";
        case ErrorKind::MissingDof: return "MissingDof";
        case ErrorKind::NonPositiveValues: return "NonPositiveValues";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

bool Error::is_input_error() const noexcept {
    switch (kind_) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::InvalidDataset:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::DomainError:
        case ErrorKind::OffGrid:
        case ErrorKind::MissingDof:
        case ErrorKind::Io:
            return true;
        default:
            return false;
    }
}

std::vector<std::string> default_names(Eigen::Index p) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    return names;
}

Dataset::Dataset(Vector y, Matrix X, std::vector<std::string> names)
    : y_(std::move(y)), X_(std::move(X)), names_(std::move(names)) {
    if (names_.empty()) names_ = default_names(X_.cols());
    const auto n = y_.size();
    const auto p = X_.cols();
    if (p < 1) throw Error(ErrorKind::InvalidDataset, "dataset needs at least one covariate");
    if (X_.rows() != n)
        throw Error(ErrorKind::InvalidDataset, "covariate rows (" + std::to_string(X_.rows()) +
                                                   ") differ from response length (" +
                                                   std::to_string(n) + ")");
    if (n < 2 * p + 2)
        throw Error(ErrorKind::InvalidDataset, "need n >= 2p + 2 observations, got n=" +
                                                   std::to_string(n) + ", p=" + std::to_string(p));
    if (!y_.allFinite() || !X_.allFinite())
        throw Error(ErrorKind::InvalidDataset, "dataset contains non-finite values");
    if (static_cast<Eigen::Index>(names_.size()) != p)
        throw Error(ErrorKind::InvalidDataset, "column label count does not match p");
    std::set<std::string> unique(names_.begin(), names_.end());
    if (unique.size() != names_.size())
        throw Error(ErrorKind::InvalidDataset, "column labels must be unique");
}

Dataset Dataset::with_response(Vector y) const { return Dataset(std::move(y), X_, names_); }

LinearFit solve_least_squares(const Matrix& design, const Vector& y) {
    const auto n = design.rows();
    const auto q = design.cols();
    if (y.size() != n) throw Error(ErrorKind::DimensionMismatch, "design rows differ from y length");
    if (q > n) throw Error(ErrorKind::RankDeficient, "more design columns than observations");

    // Column equilibration keeps the relative pivot test meaningful when
    // columns live on very different scales (e.g. x^3 next to an intercept).
    Vector scale = design.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < q; ++c) {
        if (!(scale[c] > 0.0))
            throw Error(ErrorKind::RankDeficient, "design column " + std::to_string(c) + " is zero");
    }
    Matrix scaled = design * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < q)
        throw Error(ErrorKind::RankDeficient, "design has rank " + std::to_string(qr.rank()) +
                                                  " < " + std::to_string(q) + " columns");

    LinearFit fit;
    fit.coefficients = qr.solve(y).cwiseQuotient(scale);
    fit.fitted = design * fit.coefficients;
    fit.rss = (y - fit.fitted).squaredNorm();
    // Round-off residue of an exact interpolation is reported as a true zero.
    const double eps = std::numeric_limits<double>::epsilon() * static_cast<double>(n);
    if (fit.rss <= eps * eps * y.squaredNorm()) fit.rss = 0.0;
    fit.n_params = q;
    fit.sigma2_hat = fit.rss / static_cast<double>(n);
    fit.log_lik = fit.rss > 0.0 ? gaussian_log_lik(fit.rss, n)
                                : std::numeric_limits<double>::infinity();
    return fit;
}

double gaussian_log_lik(double rss, Eigen::Index n) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "log-likelihood needs n >= 1");
    if (rss < 0.0 || !std::isfinite(rss))
        throw Error(ErrorKind::InvalidArgument, "rss must be finite and nonnegative");
    if (rss == 0.0)
        throw Error(ErrorKind::DegenerateFit, "zero residual sum of squares: saturated fit");
    const double nd = static_cast<double>(n);
    return -0.5 * nd * (std::log(2.0 * std::numbers::pi * rss / nd) + 1.0);
}

}  // namespace tsvc
