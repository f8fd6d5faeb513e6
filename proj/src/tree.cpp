#include "tsvc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "tsvc/parallel.hpp"

namespace tsvc {

std::string describe(const SplitRule& rule, const std::vector<std::string>& names) {
    auto name = [&](int idx) {
        return idx >= 0 && idx < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(idx)]
                                                                 : "x" + std::to_string(idx + 1);
    };
    std::ostringstream out;
    out.precision(6);
    out << "beta(" << name(rule.target) << ") split on " << name(rule.modifier)
        << " <= " << rule.threshold << " (leaf " << rule.parent_leaf << ")";
    return out.str();
}

CoefficientTree::CoefficientTree(int target) : target_(target) {
    nodes_.push_back(Node{});
    leaves_.push_back(0);
    leaf_id_of_node_.push_back(0);
}

int CoefficientTree::leaf_of(const Matrix& X, Eigen::Index i) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].modifier >= 0) {
        const auto& nd = nodes_[static_cast<std::size_t>(node)];
        node = X(i, nd.modifier) <= nd.threshold ? nd.left : nd.right;
    }
    return leaf_id_of_node_[static_cast<std::size_t>(node)];
}

std::vector<int> CoefficientTree::assign(const Matrix& X) const {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = leaf_of(X, i);
    return out;
}

CoefficientTree CoefficientTree::split(int leaf, int modifier, double threshold) const {
    if (leaf < 0 || leaf >= leaf_count())
        throw Error(ErrorKind::InvalidArgument, "split of unknown leaf " + std::to_string(leaf));
    if (modifier == target_)
        throw Error(ErrorKind::InvalidArgument, "a coefficient cannot be modified by its own covariate");
    CoefficientTree out = *this;
    const int parent = leaves_[static_cast<std::size_t>(leaf)];
    const int left = static_cast<int>(out.nodes_.size());
    out.nodes_.push_back(Node{});
    out.nodes_.push_back(Node{});
    auto& pn = out.nodes_[static_cast<std::size_t>(parent)];
    pn.modifier = modifier;
    pn.threshold = threshold;
    pn.left = left;
    pn.right = left + 1;

    out.leaves_.erase(out.leaves_.begin() + leaf);
    out.leaves_.push_back(left);
    out.leaves_.push_back(left + 1);
    out.leaf_id_of_node_.assign(out.nodes_.size(), -1);
    for (std::size_t m = 0; m < out.leaves_.size(); ++m)
        out.leaf_id_of_node_[static_cast<std::size_t>(out.leaves_[m])] = static_cast<int>(m);
    out.coefficients_.clear();
    return out;
}

void CoefficientTree::set_coefficients(std::vector<double> coefficients) {
    if (static_cast<int>(coefficients.size()) != leaf_count())
        throw Error(ErrorKind::DimensionMismatch, "one coefficient per leaf required");
    coefficients_ = std::move(coefficients);
}

namespace {

nlohmann::json node_json(const CoefficientTree& tree, int node,
                         const std::vector<std::string>& names) {
    const auto& nd = tree.nodes()[static_cast<std::size_t>(node)];
    if (nd.modifier < 0) {
        const auto& leaves = tree.leaves();
        const int id = static_cast<int>(std::find(leaves.begin(), leaves.end(), node) - leaves.begin());
        nlohmann::json leaf = {{"leaf", id}};
        if (!tree.coefficients().empty())
            leaf["coefficient"] = tree.coefficients()[static_cast<std::size_t>(id)];
        return leaf;
    }
    return {{"modifier", nd.modifier},
            {"modifier_name", names.at(static_cast<std::size_t>(nd.modifier))},
            {"threshold", nd.threshold},
            {"left", node_json(tree, nd.left, names)},
            {"right", node_json(tree, nd.right, names)}};
}

}  // namespace

nlohmann::json CoefficientTree::to_json(const std::vector<std::string>& names) const {
    return {{"target", target_},
            {"target_name", names.at(static_cast<std::size_t>(target_))},
            {"leaves", leaf_count()},
            {"root", node_json(*this, 0, names)}};
}

CoefficientTree CoefficientTree::from_json(const nlohmann::json& doc, int p) {
    CoefficientTree tree(doc.at("target").get<int>());
    if (tree.target_ < 0 || tree.target_ >= p)
        throw Error(ErrorKind::InvalidArgument, "tree target out of range");
    tree.nodes_.clear();
    std::vector<std::pair<int, int>> leaf_nodes;  // (leaf id, node index)
    std::vector<double> coef_by_id;

    auto build = [&](auto&& self, const nlohmann::json& j) -> int {
        const int idx = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back(Node{});
        if (j.contains("leaf")) {
            const int id = j.at("leaf").get<int>();
            leaf_nodes.emplace_back(id, idx);
            if (j.contains("coefficient")) {
                if (static_cast<int>(coef_by_id.size()) <= id)
                    coef_by_id.resize(static_cast<std::size_t>(id) + 1,
                                      std::numeric_limits<double>::quiet_NaN());
                coef_by_id[static_cast<std::size_t>(id)] = j.at("coefficient").get<double>();
            }
            return idx;
        }
        const int modifier = j.at("modifier").get<int>();
        if (modifier < 0 || modifier >= p || modifier == tree.target_)
            throw Error(ErrorKind::InvalidArgument, "invalid modifier in serialized tree");
        const double threshold = j.at("threshold").get<double>();
        const int l = self(self, j.at("left"));
        const int r = self(self, j.at("right"));
        auto& nd = tree.nodes_[static_cast<std::size_t>(idx)];
        nd.modifier = modifier;
        nd.threshold = threshold;
        nd.left = l;
        nd.right = r;
        return idx;
    };
    build(build, doc.at("root"));

    std::sort(leaf_nodes.begin(), leaf_nodes.end());
    tree.leaves_.clear();
    for (std::size_t m = 0; m < leaf_nodes.size(); ++m) {
        if (leaf_nodes[m].first != static_cast<int>(m))
            throw Error(ErrorKind::InvalidArgument, "serialized leaf ids must be 0..M-1");
        tree.leaves_.push_back(leaf_nodes[m].second);
    }
    tree.leaf_id_of_node_.assign(tree.nodes_.size(), -1);
    for (std::size_t m = 0; m < tree.leaves_.size(); ++m)
        tree.leaf_id_of_node_[static_cast<std::size_t>(tree.leaves_[m])] = static_cast<int>(m);
    if (!coef_by_id.empty()) tree.set_coefficients(std::move(coef_by_id));
    return tree;
}

std::vector<CoefficientTree> linear_trees(Eigen::Index p) {
    std::vector<CoefficientTree> trees;
    for (int j = 0; j < static_cast<int>(p); ++j) trees.emplace_back(j);
    return trees;
}

namespace {

void check_trees(const Dataset& data, const std::vector<CoefficientTree>& trees) {
    if (static_cast<Eigen::Index>(trees.size()) != data.p())
        throw Error(ErrorKind::DimensionMismatch, "need exactly one tree per covariate");
    for (std::size_t j = 0; j < trees.size(); ++j) {
        if (trees[j].target() != static_cast<int>(j))
            throw Error(ErrorKind::InvalidArgument, "trees must be ordered by target covariate");
        for (const auto& nd : trees[j].nodes())
            if (nd.modifier >= data.p())
                throw Error(ErrorKind::DimensionMismatch, "tree references unknown modifier");
    }
}

int total_leaves(const std::vector<CoefficientTree>& trees) {
    int q = 0;
    for (const auto& t : trees) q += t.leaf_count();
    return q;
}

}  // namespace

Matrix build_design(const Dataset& data, const std::vector<CoefficientTree>& trees) {
    check_trees(data, trees);
    const auto n = data.n();
    const auto& X = data.X();
    Matrix design = Matrix::Zero(n, 1 + total_leaves(trees));
    design.col(0).setOnes();
    Eigen::Index col = 1;
    for (const auto& tree : trees) {
        const int j = tree.target();
        const auto leaf = tree.assign(X);
        std::vector<int> counts(static_cast<std::size_t>(tree.leaf_count()), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int m = leaf[static_cast<std::size_t>(i)];
            ++counts[static_cast<std::size_t>(m)];
            design(i, col + m) = X(i, j);
        }
        for (std::size_t m = 0; m < counts.size(); ++m)
            if (counts[m] == 0)
                throw Error(ErrorKind::EmptyLeaf, "leaf " + std::to_string(m) + " of covariate " +
                                                      std::to_string(j) + " matches no observation");
        col += tree.leaf_count();
    }
    return design;
}

namespace {

// Rows of one leaf ordered by a modifier, with the admissible gap positions.
struct SortedLeaf {
    std::vector<Eigen::Index> rows;      // ascending in x_k, ties by row index
    std::vector<std::size_t> cut_after;  // split after rows[cut] (left = rows[0..cut])
    std::vector<double> thresholds;
};

SortedLeaf sort_leaf(const Matrix& X, std::vector<Eigen::Index> rows, int k, int min_leaf) {
    SortedLeaf out;
    std::stable_sort(rows.begin(), rows.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return X(a, k) < X(b, k); });
    const std::size_t total = rows.size();
    for (std::size_t pos = 0; pos + 1 < total; ++pos) {
        const double lo = X(rows[pos], k);
        const double hi = X(rows[pos + 1], k);
        if (!(lo < hi)) continue;
        const std::size_t left = pos + 1;
        if (left < static_cast<std::size_t>(min_leaf) || total - left < static_cast<std::size_t>(min_leaf))
            continue;
        double c = std::midpoint(lo, hi);
        if (!(c < hi)) c = lo;  // adjacent doubles
        out.cut_after.push_back(pos);
        out.thresholds.push_back(c);
    }
    out.rows = std::move(rows);
    return out;
}

std::vector<std::vector<Eigen::Index>> rows_by_leaf(const CoefficientTree& tree, const Matrix& X) {
    std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(tree.leaf_count()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[static_cast<std::size_t>(tree.leaf_of(X, i))].push_back(i);
    return out;
}

}  // namespace

std::vector<SplitRule> enumerate_candidates(const Dataset& data,
                                            const std::vector<CoefficientTree>& trees,
                                            int min_leaf) {
    if (min_leaf < 1) throw Error(ErrorKind::InvalidArgument, "min_leaf must be >= 1");
    check_trees(data, trees);
    std::vector<SplitRule> out;
    const auto& X = data.X();
    const int p = static_cast<int>(data.p());
    for (int j = 0; j < p; ++j) {
        const auto by_leaf = rows_by_leaf(trees[static_cast<std::size_t>(j)], X);
        for (int k = 0; k < p; ++k) {
            if (k == j) continue;
            for (std::size_t leaf = 0; leaf < by_leaf.size(); ++leaf) {
                const auto sorted = sort_leaf(X, by_leaf[leaf], k, min_leaf);
                for (double c : sorted.thresholds)
                    out.push_back(SplitRule{j, k, c, static_cast<int>(leaf)});
            }
        }
    }
    return out;
}

TsvcModel fit_model(const Dataset& data, std::vector<CoefficientTree> trees) {
    const Matrix design = build_design(data, trees);
    TsvcModel model;
    model.fit = solve_least_squares(design, data.y());
    model.intercept = model.fit.coefficients[0];
    Eigen::Index col = 1;
    model.splits = 0;
    for (auto& tree : trees) {
        std::vector<double> coef(static_cast<std::size_t>(tree.leaf_count()));
        for (int m = 0; m < tree.leaf_count(); ++m)
            coef[static_cast<std::size_t>(m)] = model.fit.coefficients[col + m];
        col += tree.leaf_count();
        tree.set_coefficients(std::move(coef));
        model.splits += tree.split_count();
    }
    model.trees = std::move(trees);
    model.n = data.n();
    model.p = data.p();
    model.names = data.names();
    return model;
}

namespace {

// Score of one candidate in the rank-one update: rss after adding the column
// z = x_j * I(row in left child), which spans the same space as replacing the
// parent leaf column with its two children.
struct Scored {
    double rss = std::numeric_limits<double>::infinity();
    std::size_t group = 0;
    std::size_t pos = 0;
    SplitRule rule;
    bool valid = false;
};

// Relative gap below which two candidate rss values count as tied; keeps the
// enumeration-order tie rule stable against round-off in the update formula.
constexpr double kTieTolerance = 1e-11;
// Squared sine of the angle between a new column and the current design below
// which the candidate is treated as collinear.
constexpr double kCollinearTolerance = 1e-12;

bool better(const Scored& a, const Scored& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    const double scale = std::max(std::abs(b.rss), std::numeric_limits<double>::min());
    if (a.rss < b.rss - kTieTolerance * scale) return true;
    if (a.rss > b.rss + kTieTolerance * scale) return false;
    return std::tie(a.group, a.pos) < std::tie(b.group, b.pos);
}

struct Group {
    int j;
    int k;
    int leaf;
};

}  // namespace

int FitOptions::min_leaf_for(Eigen::Index n) const {
    if (min_leaf < 1) throw Error(ErrorKind::InvalidArgument, "min_leaf must be >= 1");
    if (!(min_leaf_fraction >= 0.0 && min_leaf_fraction < 0.5))
        throw Error(ErrorKind::InvalidArgument, "min_leaf_fraction must lie in [0, 0.5)");
    // The small offset keeps e.g. 0.14 * 100 from rounding up to 15.
    const double scaled = std::ceil(min_leaf_fraction * static_cast<double>(n) - 1e-9);
    return std::max(min_leaf, static_cast<int>(scaled));
}

GrowResult grow_one_split(const Dataset& data, const TsvcModel& current, const FitOptions& options) {
    const int min_leaf = options.min_leaf_for(data.n());
    const auto& trees = current.trees;
    check_trees(data, trees);
    const auto& X = data.X();
    const auto& y = data.y();
    const int p = static_cast<int>(data.p());

    const Matrix design = build_design(data, trees);
    Eigen::HouseholderQR<Matrix> qr(design);
    const Matrix Qt = (qr.householderQ() * Matrix::Identity(design.rows(), design.cols())).transpose();
    const Vector resid = y - Qt.transpose() * (Qt * y);
    const double rss = resid.squaredNorm();

    std::vector<std::vector<std::vector<Eigen::Index>>> leaf_rows;
    leaf_rows.reserve(static_cast<std::size_t>(p));
    for (const auto& tree : trees) leaf_rows.push_back(rows_by_leaf(tree, X));

    std::vector<Group> groups;
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
            if (k == j) continue;
            for (std::size_t leaf = 0; leaf < leaf_rows[static_cast<std::size_t>(j)].size(); ++leaf)
                groups.push_back(Group{j, k, static_cast<int>(leaf)});
        }

    std::set<std::pair<std::size_t, std::size_t>> rejected;
    for (;;) {
        std::vector<Scored> best(groups.size());
        parallel_for(groups.size(), options.threads, [&](std::size_t g) {
            const auto [j, k, leaf] = groups[g];
            const auto sorted = sort_leaf(X, leaf_rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(leaf)],
                                          k, min_leaf);
            if (sorted.thresholds.empty()) return;
            Vector a = Vector::Zero(Qt.rows());
            double rz = 0.0;
            double zz = 0.0;
            std::size_t next_cut = 0;
            Scored local;
            for (std::size_t pos = 0; pos < sorted.rows.size() && next_cut < sorted.cut_after.size(); ++pos) {
                const Eigen::Index i = sorted.rows[pos];
                const double xij = X(i, j);
                a.noalias() += xij * Qt.col(i);
                rz += resid[i] * xij;
                zz += xij * xij;
                if (pos != sorted.cut_after[next_cut]) continue;
                const std::size_t cut = next_cut++;
                if (rejected.count({g, cut})) continue;
                const double denom = zz - a.squaredNorm();
                if (!(zz > 0.0) || denom <= kCollinearTolerance * zz) continue;
                Scored s;
                s.rss = std::max(0.0, rss - rz * rz / denom);
                s.group = g;
                s.pos = cut;
                s.rule = SplitRule{j, k, sorted.thresholds[cut], leaf};
                s.valid = true;
                if (better(s, local)) local = s;
            }
            best[g] = local;
        });

        Scored winner;
        for (const auto& s : best)
            if (better(s, winner)) winner = s;
        if (!winner.valid)
            throw Error(ErrorKind::NoAdmissibleSplit, "no admissible split candidate");

        auto next = trees;
        auto& target = next[static_cast<std::size_t>(winner.rule.target)];
        target = target.split(winner.rule.parent_leaf, winner.rule.modifier, winner.rule.threshold);
        try {
            return GrowResult{winner.rule, fit_model(data, std::move(next))};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::EmptyLeaf) throw;
            rejected.insert({winner.group, winner.pos});
        }
    }
}

GrowResult grow_one_split(const Dataset& data, const std::vector<CoefficientTree>& trees,
                          const FitOptions& options) {
    return grow_one_split(data, fit_model(data, trees), options);
}

ModelPath fit_path(const Dataset& data, int s_max, const FitOptions& options) {
    if (s_max < 0) throw Error(ErrorKind::InvalidArgument, "s_max must be >= 0");
    ModelPath path;
    path.s_max = s_max;
    path.models.push_back(fit_model(data, linear_trees(data.p())));
    for (int s = 0; s < s_max; ++s) {
        try {
            auto grown = grow_one_split(data, path.models.back(), options);
            path.rules.push_back(grown.rule);
            path.models.push_back(std::move(grown.model));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoAdmissibleSplit) throw;
            break;
        }
    }
    return path;
}

Vector predict(const TsvcModel& model, const Matrix& X) {
    if (X.cols() != model.p)
        throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(model.p) +
                                                      " columns, got " + std::to_string(X.cols()));
    Vector out = Vector::Constant(X.rows(), model.intercept);
    for (const auto& tree : model.trees) {
        const int j = tree.target();
        const auto& coef = tree.coefficients();
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            out[i] += coef[static_cast<std::size_t>(tree.leaf_of(X, i))] * X(i, j);
    }
    return out;
}

nlohmann::json model_to_json(const TsvcModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) trees.push_back(tree.to_json(model.names));
    return {{"intercept", model.intercept},
            {"n", model.n},
            {"p", model.p},
            {"s", model.splits},
            {"rss", model.fit.rss},
            {"names", model.names},
            {"trees", trees}};
}

TsvcModel model_from_json(const nlohmann::json& doc) {
    try {
        TsvcModel model;
        model.intercept = doc.at("intercept").get<double>();
        model.n = doc.at("n").get<Eigen::Index>();
        model.p = doc.at("p").get<Eigen::Index>();
        model.splits = doc.at("s").get<int>();
        model.names = doc.at("names").get<std::vector<std::string>>();
        if (model.p < 1 || static_cast<Eigen::Index>(model.names.size()) != model.p)
            throw Error(ErrorKind::InvalidArgument, "model p and names disagree");
        int splits = 0;
        std::vector<double> coefficients{model.intercept};
        for (const auto& t : doc.at("trees")) {
            model.trees.push_back(CoefficientTree::from_json(t, static_cast<int>(model.p)));
            const auto& tree = model.trees.back();
            if (tree.coefficients().empty())
                throw Error(ErrorKind::InvalidArgument, "serialized tree lacks leaf coefficients");
            coefficients.insert(coefficients.end(), tree.coefficients().begin(), tree.coefficients().end());
            splits += tree.split_count();
        }
        if (static_cast<Eigen::Index>(model.trees.size()) != model.p || splits != model.splits)
            throw Error(ErrorKind::InvalidArgument, "model trees disagree with p or s");
        model.fit.rss = doc.at("rss").get<double>();
        model.fit.n_params = static_cast<Eigen::Index>(coefficients.size());
        model.fit.coefficients = Eigen::Map<const Vector>(coefficients.data(),
                                                          static_cast<Eigen::Index>(coefficients.size()));
        model.fit.sigma2_hat = model.fit.rss / static_cast<double>(model.n);
        model.fit.log_lik = model.fit.rss > 0.0 ? gaussian_log_lik(model.fit.rss, model.n)
                                                : std::numeric_limits<double>::infinity();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace tsvc
