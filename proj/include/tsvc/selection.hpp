#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tsvc/dof.hpp"
#include "tsvc/tree.hpp"

namespace tsvc {

struct NaiveDof {};
struct MfpFormulaDof {};
struct McTableDof {
    LookupMode mode = LookupMode::Nearest;
    std::shared_ptr<const DofTable> table;  // null means the shipped reference grid
};
struct McCustomDof {
    DofTable table;  // typically McDofResult::as_table()
};

/// How the degrees of freedom of a path element are determined.
using DofMethod = std::variant<NaiveDof, MfpFormulaDof, McTableDof, McCustomDof>;

std::string dof_method_name(const DofMethod& method);

/// DoF of a model with s splits on p covariates fitted to n observations.
/// Every method returns p + 1 at s = 0. Throws MissingDof / OffGrid when a
/// table-backed method lacks the requested cell.
double dof_for(const DofMethod& method, int p, long n, int s);

/// -2 log_lik + ln(n) dof
double bic(double log_lik, double dof, double n);

/// Smallest index attaining the minimum.
int smallest_argmin(std::span<const double> values);

struct PruneRow {
    int s = 0;
    double dof = 0.0;
    double log_lik = 0.0;
    double bic = 0.0;
};

struct PruneReport {
    std::vector<PruneRow> rows;
    int selected = 0;
    std::string dof_method;

    /// Columns: s,dof,loglik,bic,selected
    void write_csv(std::ostream& out) const;
    static PruneReport read_csv(std::istream& in);
};

PruneReport prune_path(const ModelPath& path, const DofMethod& method);

}  // namespace tsvc
