#pragma once

// Reference implementations kept deliberately naive and independent of the
// library internals: explicit row sets, full refits, no rank-one updates.

#include <optional>
#include <vector>

#include "tsvc/core.hpp"

namespace oracle {

struct Split {
    int target = 0;
    int modifier = 0;
    double threshold = 0.0;
    int parent_leaf = 0;
    double rss = 0.0;
};

/// Leaves of every coefficient tree as explicit row-index sets, in creation
/// order (a split removes the parent and appends left, then right).
class Partition {
public:
    Partition(Eigen::Index n, Eigen::Index p);

    void apply(const Split& split, const tsvc::Matrix& X);
    const std::vector<std::vector<Eigen::Index>>& leaves(int j) const { return leaves_[static_cast<std::size_t>(j)]; }
    tsvc::Matrix design(const tsvc::Matrix& X) const;

private:
    std::vector<std::vector<std::vector<Eigen::Index>>> leaves_;
};

/// Plain least-squares rss via a column-pivoting QR on the raw design;
/// nullopt when the design is rank deficient.
std::optional<double> rss_of(const tsvc::Matrix& design, const tsvc::Vector& y);

/// Exhaustive greedy step: enumerate every (j, k != j, leaf, midpoint) with
/// both children >= min_leaf, refit each from scratch, keep the first minimum.
std::optional<Split> best_split(const tsvc::Vector& y, const tsvc::Matrix& X, const Partition& part, int min_leaf);

}  // namespace oracle
