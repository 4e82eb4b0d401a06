#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sr4fit/rng.hpp"

namespace sr4fit {

// Binary CART tree node. Internal nodes route x[feature] <= threshold left,
// else right. Leaves store the positive-label fraction of their training rows.
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
    double pos_frac = 0.0;
    int count = 0;

    bool is_leaf() const { return feature < 0; }
};

struct ForestConfig {
    int n_trees = 25;
    int max_depth = 4;
    int min_leaf = 5;
    int features_per_split = 0; // 0: use ceil(sqrt(d))
    bool bootstrap = true;
    std::uint64_t seed = 0;

    int resolved_features_per_split(Eigen::Index d) const {
        int k = features_per_split > 0
                    ? features_per_split
                    : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
        return std::min<int>(k, static_cast<int>(d));
    }
};

struct Forest {
    std::vector<std::unique_ptr<TreeNode>> trees;
    ForestConfig config;
};

inline double gini_impurity(Eigen::Index pos, Eigen::Index neg) {
    if (pos + neg < 1) throw std::runtime_error("gini_impurity: empty node");
    const double p = static_cast<double>(pos) / static_cast<double>(pos + neg);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct SplitChoice {
    int feature;
    double threshold;
    double impurity_decrease;
};

// Exhaustive scan over midpoint thresholds of each candidate feature.
// Ties break toward the lowest feature index, then the lowest threshold.
inline std::optional<SplitChoice> best_split(const std::vector<Eigen::Index>& rows,
                                             const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& y,
                                             const std::vector<int>& candidate_features,
                                             int min_leaf) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::Index total_pos = 0;
    for (Eigen::Index r : rows)
        if (y(r) > 0) ++total_pos;
    const Eigen::Index total_neg = n - total_pos;
    if (total_pos == 0 || total_neg == 0) return std::nullopt;

    const double parent_impurity = gini_impurity(total_pos, total_neg);
    std::optional<SplitChoice> best;

    std::vector<int> features = candidate_features;
    std::sort(features.begin(), features.end());

    std::vector<std::pair<double, int>> ordered(static_cast<std::size_t>(n));
    for (int f : features) {
        for (Eigen::Index i = 0; i < n; ++i)
            ordered[static_cast<std::size_t>(i)] = {X(rows[static_cast<std::size_t>(i)], f),
                                                    y(rows[static_cast<std::size_t>(i)]) > 0 ? 1 : 0};
        std::sort(ordered.begin(), ordered.end());

        Eigen::Index left_pos = 0, left_n = 0;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            left_pos += ordered[static_cast<std::size_t>(i)].second;
            ++left_n;
            if (ordered[static_cast<std::size_t>(i)].first ==
                ordered[static_cast<std::size_t>(i + 1)].first)
                continue; // no boundary between equal values
            if (left_n < min_leaf || n - left_n < min_leaf) continue;
            const Eigen::Index right_pos = total_pos - left_pos;
            const double wl = static_cast<double>(left_n) / static_cast<double>(n);
            const double decrease =
                parent_impurity -
                wl * gini_impurity(left_pos, left_n - left_pos) -
                (1.0 - wl) * gini_impurity(right_pos, n - left_n - right_pos);
            if (decrease <= 0.0) continue;
            const double threshold = 0.5 * (ordered[static_cast<std::size_t>(i)].first +
                                            ordered[static_cast<std::size_t>(i + 1)].first);
            if (!best || decrease > best->impurity_decrease)
                best = SplitChoice{f, threshold, decrease};
        }
    }
    return best;
}

namespace detail {

inline std::unique_ptr<TreeNode> grow_node(const std::vector<Eigen::Index>& rows,
                                           const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y,
                                           const ForestConfig& cfg, int depth, Rng& rng) {
    auto node = std::make_unique<TreeNode>();
    node->count = static_cast<int>(rows.size());
    Eigen::Index pos = 0;
    for (Eigen::Index r : rows)
        if (y(r) > 0) ++pos;
    node->pos_frac = static_cast<double>(pos) / static_cast<double>(rows.size());

    if (depth >= cfg.max_depth || pos == 0 ||
        pos == static_cast<Eigen::Index>(rows.size()) ||
        rows.size() < 2 * static_cast<std::size_t>(cfg.min_leaf))
        return node;

    // Uniform random feature subset, partial Fisher-Yates. The rng draw
    // happens before best_split so tree shape stays a pure function of the
    // draw sequence.
    const int k = cfg.resolved_features_per_split(X.cols());
    std::vector<int> all(static_cast<std::size_t>(X.cols()));
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.next_index(
                               static_cast<std::uint64_t>(all.size() - static_cast<std::size_t>(i))));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(k));

    const auto split = best_split(rows, X, y, all, cfg.min_leaf);
    if (!split) return node;

    std::vector<Eigen::Index> left_rows, right_rows;
    for (Eigen::Index r : rows)
        (X(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);

    node->feature = split->feature;
    node->threshold = split->threshold;
    node->left = grow_node(left_rows, X, y, cfg, depth + 1, rng);
    node->right = grow_node(right_rows, X, y, cfg, depth + 1, rng);
    return node;
}

} // namespace detail

inline std::unique_ptr<TreeNode> grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const ForestConfig& cfg, Rng& rng) {
    if (X.rows() < 1) throw std::runtime_error("grow_tree: empty data");
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return detail::grow_node(rows, X, y, cfg, 0, rng);
}

// Bootstrap forest; tree t draws from an rng seeded by mix_seed(seed, t), so
// trees are reproducible independently of training order.
inline Forest train_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const ForestConfig& cfg) {
    Forest forest;
    forest.config = cfg;
    forest.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
    const auto n = static_cast<std::uint64_t>(X.rows());
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        if (cfg.bootstrap) {
            std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
            for (auto& r : rows) r = static_cast<Eigen::Index>(rng.next_index(n));
            Eigen::MatrixXd Xb(X.rows(), X.cols());
            Eigen::VectorXd yb(y.size());
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                Xb.row(i) = X.row(rows[static_cast<std::size_t>(i)]);
                yb(i) = y(rows[static_cast<std::size_t>(i)]);
            }
            forest.trees.push_back(grow_tree(Xb, yb, cfg, rng));
        } else {
            forest.trees.push_back(grow_tree(X, y, cfg, rng));
        }
    }
    return forest;
}

inline int tree_depth(const TreeNode& node) {
    if (node.is_leaf()) return 0;
    return 1 + std::max(tree_depth(*node.left), tree_depth(*node.right));
}

inline double predict_tree(const TreeNode& node, const Eigen::VectorXd& x) {
    const TreeNode* cur = &node;
    while (!cur->is_leaf())
        cur = x(cur->feature) <= cur->threshold ? cur->left.get() : cur->right.get();
    return cur->pos_frac;
}

inline nlohmann::json tree_to_json(const TreeNode& node) {
    if (node.is_leaf())
        return {{"pos_frac", node.pos_frac}, {"count", node.count}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"left", tree_to_json(*node.left)},
            {"right", tree_to_json(*node.right)}};
}

inline std::unique_ptr<TreeNode> tree_from_json(const nlohmann::json& j) {
    auto node = std::make_unique<TreeNode>();
    if (j.contains("feature")) {
        node->feature = j.at("feature").get<int>();
        node->threshold = j.at("threshold").get<double>();
        node->left = tree_from_json(j.at("left"));
        node->right = tree_from_json(j.at("right"));
    } else {
        node->pos_frac = j.at("pos_frac").get<double>();
        node->count = j.at("count").get<int>();
    }
    return node;
}

inline nlohmann::json forest_to_json(const Forest& forest) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : forest.trees) arr.push_back(tree_to_json(*t));
    return arr;
}

} // namespace sr4fit
