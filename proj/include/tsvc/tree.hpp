#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "tsvc/core.hpp"

namespace tsvc {

/// One binary split of a coefficient tree: the coefficient of covariate
/// `target` is split on modifier covariate `modifier`; observations with
/// x_modifier <= threshold go left.
struct SplitRule {
    int target = 0;
    int modifier = 0;
    double threshold = 0.0;
    int parent_leaf = 0;  // leaf id in the target's tree before the split

    friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

std::string describe(const SplitRule& rule, const std::vector<std::string>& names);

/// Piecewise-constant coefficient function of one covariate, represented as a
/// binary partition of the other covariates.
///
/// Leaves are kept in creation order: splitting leaf m removes it from the
/// leaf list and appends its left then right child. Leaf ids are positions in
/// that list, which is also the column order used by build_design.
class CoefficientTree {
public:
    struct Node {
        int modifier = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
    };

    explicit CoefficientTree(int target);

    int target() const noexcept { return target_; }
    int leaf_count() const noexcept { return static_cast<int>(leaves_.size()); }
    int split_count() const noexcept { return leaf_count() - 1; }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    /// Node index of each leaf, by leaf id.
    const std::vector<int>& leaves() const noexcept { return leaves_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }

    /// Leaf id for row `i` of `X`.
    int leaf_of(const Matrix& X, Eigen::Index i) const;
    std::vector<int> assign(const Matrix& X) const;

    /// Copy of this tree with leaf `leaf` replaced by two children.
    CoefficientTree split(int leaf, int modifier, double threshold) const;

    void set_coefficients(std::vector<double> coefficients);

    nlohmann::json to_json(const std::vector<std::string>& names) const;
    static CoefficientTree from_json(const nlohmann::json& doc, int p);

private:
    int target_;
    std::vector<Node> nodes_;
    std::vector<int> leaves_;
    std::vector<int> leaf_id_of_node_;
    std::vector<double> coefficients_;
};

struct TsvcModel {
    double intercept = 0.0;
    std::vector<CoefficientTree> trees;
    int splits = 0;  // s = sum_j (M_j - 1)
    LinearFit fit;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    std::vector<std::string> names;

    Eigen::Index free_parameters() const noexcept { return p + splits + 1; }
};

struct ModelPath {
    std::vector<TsvcModel> models;  // models[s] has exactly s splits
    std::vector<SplitRule> rules;   // rules[s] turns models[s] into models[s+1]
    int s_max = 0;                  // requested maximum

    const TsvcModel& at(int s) const { return models.at(static_cast<std::size_t>(s)); }
    int longest() const noexcept { return static_cast<int>(models.size()) - 1; }
};

struct FitOptions {
    int min_leaf = 14;
    // Node size also grows with the sample: each child needs at least
    // max(min_leaf, ceil(min_leaf_fraction * n)) observations. 0 disables.
    double min_leaf_fraction = 0.14;
    int threads = 1;

    int min_leaf_for(Eigen::Index n) const;
};

std::vector<CoefficientTree> linear_trees(Eigen::Index p);

/// Columns: intercept, then for each covariate j and each leaf m of tree j (in
/// leaf order) the column x_j * I(row in leaf m). Throws EmptyLeaf.
Matrix build_design(const Dataset& data, const std::vector<CoefficientTree>& trees);

/// Every admissible split in deterministic (target, modifier, leaf, threshold)
/// order. Thresholds are midpoints of adjacent distinct modifier values within
/// the leaf; both children must hold at least min_leaf observations.
std::vector<SplitRule> enumerate_candidates(const Dataset& data,
                                            const std::vector<CoefficientTree>& trees,
                                            int min_leaf);

/// Fits the expanded design of `trees` and fills in the leaf coefficients.
TsvcModel fit_model(const Dataset& data, std::vector<CoefficientTree> trees);

struct GrowResult {
    SplitRule rule;
    TsvcModel model;
};

/// Best single additional split (smallest rss over all candidates, first in
/// enumeration order on ties). Throws NoAdmissibleSplit.
GrowResult grow_one_split(const Dataset& data, const TsvcModel& current, const FitOptions& options);
GrowResult grow_one_split(const Dataset& data, const std::vector<CoefficientTree>& trees,
                          const FitOptions& options);

/// Greedy nested path M(0) .. M(s_max); shorter only when no admissible split
/// remains.
ModelPath fit_path(const Dataset& data, int s_max, const FitOptions& options = {});

Vector predict(const TsvcModel& model, const Matrix& X);

nlohmann::json model_to_json(const TsvcModel& model);
TsvcModel model_from_json(const nlohmann::json& doc);

}  // namespace tsvc
