#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace tsvc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
    InvalidArgument,
    InvalidDataset,
    RankDeficient,
    DegenerateFit,
    EmptyLeaf,
    NoAdmissibleSplit,
    DimensionMismatch,
    DomainError,
    OffGrid,
    MissingDof,
    NonPositiveValues,
    NoConvergence,
    Io,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so that
// callers (notably the CLI) can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Input problems (bad arguments, malformed data) as opposed to numeric
    // failures during fitting.
    bool is_input_error() const noexcept;

private:
    ErrorKind kind_;
};

/// Response vector plus an n x p covariate matrix with named columns.
class Dataset {
public:
    Dataset(Vector y, Matrix X, std::vector<std::string> names = {});

    const Vector& y() const noexcept { return y_; }
    const Matrix& X() const noexcept { return X_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    Eigen::Index n() const noexcept { return y_.size(); }
    Eigen::Index p() const noexcept { return X_.cols(); }

    Dataset with_response(Vector y) const;

private:
    Vector y_;
    Matrix X_;
    std::vector<std::string> names_;
};

std::vector<std::string> default_names(Eigen::Index p);

struct LinearFit {
    Vector coefficients;
    Vector fitted;
    double rss = 0.0;
    double sigma2_hat = 0.0;  // MLE, rss / n
    double log_lik = 0.0;     // +inf for a saturated fit (rss == 0)
    Eigen::Index n_params = 0;
};

// Relative pivot threshold for the column-pivoted QR used by every fit.
inline constexpr double kRankTolerance = 1e-10;

/// Least squares via column-pivoted Householder QR on an equilibrated design.
/// Throws RankDeficient when the design columns are collinear beyond
/// kRankTolerance relative to the largest pivot.
LinearFit solve_least_squares(const Matrix& design, const Vector& y);

/// -(n/2) (ln(2 pi rss / n) + 1). Throws DegenerateFit when rss == 0.
double gaussian_log_lik(double rss, Eigen::Index n);

}  // namespace tsvc
