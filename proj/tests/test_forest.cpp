#include <doctest.h>

#include "sr4fit/forest.hpp"

#include <functional>
#include <set>

#include "helpers.hpp"

using namespace sr4fit;

namespace {

// Independent oracle: enumerate every (feature, midpoint) split and compute
// the weighted Gini decrease from first principles.
std::optional<SplitChoice> brute_force_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                             int min_leaf) {
    auto impurity = [](double pos, double total) {
        const double p = pos / total;
        return 1.0 - p * p - (1.0 - p) * (1.0 - p);
    };
    const auto n = X.rows();
    double pos_total = 0;
    for (Eigen::Index i = 0; i < n; ++i) pos_total += y(i) > 0 ? 1.0 : 0.0;
    const double parent = impurity(pos_total, static_cast<double>(n));

    std::optional<SplitChoice> best;
    for (int f = 0; f < X.cols(); ++f) {
        std::vector<double> values;
        for (Eigen::Index i = 0; i < n; ++i) values.push_back(X(i, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double thr = 0.5 * (values[v] + values[v + 1]);
            double lp = 0, ln = 0, rp = 0, rn = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const bool left = X(i, f) <= thr;
                if (y(i) > 0)
                    (left ? lp : rp) += 1;
                else
                    (left ? ln : rn) += 1;
            }
            if (lp + ln < min_leaf || rp + rn < min_leaf) continue;
            const double dec = parent - (lp + ln) / n * impurity(lp, lp + ln) -
                               (rp + rn) / n * impurity(rp, rp + rn);
            if (dec <= 0) continue;
            if (!best || dec > best->impurity_decrease)
                best = SplitChoice{f, thr, dec};
        }
    }
    return best;
}

std::vector<int> all_features(Eigen::Index d) {
    std::vector<int> f(static_cast<std::size_t>(d));
    std::iota(f.begin(), f.end(), 0);
    return f;
}

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
    std::vector<Eigen::Index> r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 0);
    return r;
}

} // namespace

TEST_CASE("gini_impurity") {
    CHECK(gini_impurity(4, 0) == 0.0);
    CHECK(gini_impurity(2, 2) == 0.5);
    CHECK(gini_impurity(3, 1) == doctest::Approx(0.375));
    CHECK_THROWS_AS(gini_impurity(0, 0), std::runtime_error);
}

TEST_CASE("best_split matches the midpoint enumeration oracle") {
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 2, 3;
    Eigen::VectorXd y(4);
    y << -1, -1, 1, 1;

    const auto split = best_split(all_rows(4), X, y, {0}, 1);
    REQUIRE(split.has_value());
    CHECK(split->feature == 0);
    CHECK(split->threshold == doctest::Approx(1.5));

    const auto oracle = brute_force_split(X, y, 1);
    REQUIRE(oracle.has_value());
    CHECK(split->feature == oracle->feature);
    CHECK(split->threshold == doctest::Approx(oracle->threshold));
    CHECK(split->impurity_decrease == doctest::Approx(oracle->impurity_decrease));
}

TEST_CASE("best_split on random instances agrees with the oracle decrease") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = static_cast<Eigen::Index>(4 + rng.next_index(12));
        const auto d = static_cast<Eigen::Index>(1 + rng.next_index(3));
        Eigen::MatrixXd X(n, d);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j)
                X(i, j) = static_cast<double>(rng.next_index(6));
            y(i) = rng.next_double() < 0.5 ? -1.0 : 1.0;
        }
        const auto got = best_split(all_rows(n), X, y, all_features(d), 1);
        const auto want = brute_force_split(X, y, 1);
        REQUIRE(got.has_value() == want.has_value());
        if (got)
            CHECK(got->impurity_decrease == doctest::Approx(want->impurity_decrease));
    }
}

TEST_CASE("best_split returns none when nothing improves") {
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 2, 3;
    Eigen::VectorXd same(4);
    same << 1, 1, 1, 1;
    CHECK_FALSE(best_split(all_rows(4), X, same, {0}, 1).has_value());

    Eigen::MatrixXd Xc(4, 1);
    Xc << 5, 5, 5, 5;
    Eigen::VectorXd y(4);
    y << -1, -1, 1, 1;
    CHECK_FALSE(best_split(all_rows(4), Xc, y, {0}, 1).has_value());
}

TEST_CASE("grow_tree stops on purity and depth") {
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 2, 3;
    Eigen::VectorXd pure(4);
    pure << 1, 1, 1, 1;
    ForestConfig cfg;
    cfg.min_leaf = 1;
    cfg.features_per_split = 1;
    Rng rng(0);
    const auto root = grow_tree(X, pure, cfg, rng);
    CHECK(root->is_leaf());
    CHECK(root->pos_frac == 1.0);

    Eigen::VectorXd y(4);
    y << -1, -1, 1, 1;
    cfg.max_depth = 1;
    Rng rng2(0);
    const auto stump = grow_tree(X, y, cfg, rng2);
    REQUIRE_FALSE(stump->is_leaf());
    CHECK(stump->threshold == doctest::Approx(1.5));
    CHECK(stump->left->is_leaf());
    CHECK(stump->left->pos_frac == 0.0);
    CHECK(stump->right->pos_frac == 1.0);
}

TEST_CASE("grow_tree fits 2-feature AND exactly at depth 2") {
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 0, 1, 1, 0, 1, 1;
    Eigen::VectorXd y(4);
    y << -1, -1, -1, 1;
    ForestConfig cfg;
    cfg.max_depth = 2;
    cfg.min_leaf = 1;
    cfg.features_per_split = 2;
    Rng rng(5);
    const auto root = grow_tree(X, y, cfg, rng);
    for (Eigen::Index i = 0; i < 4; ++i) {
        const double p = predict_tree(*root, X.row(i).transpose());
        CHECK(p == (y(i) > 0 ? 1.0 : 0.0));
    }

    // XOR has no single split with positive impurity decrease, so greedy
    // growth stalls at the root
    Eigen::VectorXd xor_y(4);
    xor_y << -1, 1, 1, -1;
    Rng rng2(5);
    const auto stalled = grow_tree(X, xor_y, cfg, rng2);
    CHECK(stalled->is_leaf());
    CHECK(stalled->pos_frac == 0.5);
}

TEST_CASE("train_forest determinism and shape") {
    const auto data = testutil::make_blobs(20, 11);
    const Eigen::VectorXd y = binarize_labels(data, 1);
    ForestConfig cfg;
    cfg.n_trees = 5;
    cfg.seed = 123;
    const Forest f1 = train_forest(data.features, y, cfg);
    const Forest f2 = train_forest(data.features, y, cfg);
    CHECK(f1.trees.size() == 5);
    CHECK(forest_to_json(f1) == forest_to_json(f2));
    for (const auto& t : f1.trees) CHECK(tree_depth(*t) <= cfg.max_depth);
}

TEST_CASE("bootstrap=false with all features gives identical trees") {
    const auto data = testutil::make_blobs(15, 3);
    const Eigen::VectorXd y = binarize_labels(data, 1);
    ForestConfig cfg;
    cfg.n_trees = 4;
    cfg.bootstrap = false;
    cfg.features_per_split = 2; // = d, no randomness left
    cfg.seed = 9;
    const Forest f = train_forest(data.features, y, cfg);
    const auto first = tree_to_json(*f.trees[0]);
    for (const auto& t : f.trees) CHECK(tree_to_json(*t) == first);
}

TEST_CASE("internal node routing reproduces child partitions") {
    const auto data = testutil::make_blobs(15, 21, 1.5);
    const Eigen::VectorXd y = binarize_labels(data, 1);
    ForestConfig cfg;
    cfg.min_leaf = 2;
    cfg.bootstrap = false;
    cfg.features_per_split = 2;
    Rng rng(77);
    const auto root = grow_tree(data.features, y, cfg, rng);

    // Walk the tree with the training rows; each internal node's children
    // must account for exactly the rows routed by (feature, threshold).
    std::function<void(const TreeNode&, std::vector<Eigen::Index>)> walk =
        [&](const TreeNode& node, std::vector<Eigen::Index> rows) {
            CHECK(node.count == static_cast<int>(rows.size()));
            if (node.is_leaf()) return;
            std::vector<Eigen::Index> left, right;
            for (Eigen::Index r : rows)
                (data.features(r, node.feature) <= node.threshold ? left : right).push_back(r);
            walk(*node.left, std::move(left));
            walk(*node.right, std::move(right));
        };
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.n_rows()));
    std::iota(rows.begin(), rows.end(), 0);
    walk(*root, rows);
}

TEST_CASE("unrestricted tree reaches training accuracy 1.0") {
    Rng rng(31);
    Eigen::MatrixXd X(30, 3);
    Eigen::VectorXd y(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = rng.next_double();
        y(i) = rng.next_double() < 0.5 ? -1.0 : 1.0;
    }
    ForestConfig cfg;
    cfg.max_depth = 64;
    cfg.min_leaf = 1;
    cfg.features_per_split = 3;
    cfg.bootstrap = false;
    Rng tree_rng(0);
    const auto root = grow_tree(X, y, cfg, tree_rng);
    for (Eigen::Index i = 0; i < 30; ++i) {
        const double p = predict_tree(*root, X.row(i).transpose());
        CHECK((p > 0.5) == (y(i) > 0));
    }
}

TEST_CASE("tree json round trip") {
    auto tree = testutil::internal(0, 1.5, testutil::leaf(0.0, 2),
                                   testutil::internal(1, 2.5, testutil::leaf(1.0, 3),
                                                      testutil::leaf(0.5, 4)));
    const auto j = tree_to_json(*tree);
    const auto back = tree_from_json(j);
    CHECK(tree_to_json(*back) == j);
}
