#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sr4fit/forest.hpp"

namespace sr4fit {

enum class CondOp { LE, GT }; // LE inclusive, GT strict

struct Condition {
    int feature;
    CondOp op;
    double threshold;
};

// Conjunction of conditions in canonical form: at most one LE and one GT per
// feature, sorted by (feature, LE before GT).
struct Rule {
    std::vector<Condition> conditions;
};

struct RuleSet {
    std::vector<Rule> rules;
    int source_class = 0;

    std::size_t size() const { return rules.size(); }
};

inline double round_to_decimals(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

namespace detail {

inline std::string format_threshold(double v, int decimals) {
    const double r = round_to_decimals(v, decimals);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, r);
    // strip trailing zeros, keep at least one digit after the point
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.push_back('0');
    }
    return s;
}

} // namespace detail

// Intersect conditions per feature; reject empty intervals. Threshold values
// are kept exact, rounding applies only to identity keys and display.
inline Rule canonicalize(const std::vector<Condition>& conditions) {
    if (conditions.empty()) throw std::runtime_error("canonicalize: empty condition list");
    std::map<int, std::pair<double, double>> bounds; // feature -> (gt_max, le_min)
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (const auto& c : conditions) {
        auto& [gt, le] = bounds.try_emplace(c.feature, -kInf, kInf).first->second;
        if (c.op == CondOp::LE)
            le = std::min(le, c.threshold);
        else
            gt = std::max(gt, c.threshold);
    }
    Rule rule;
    for (const auto& [feature, b] : bounds) {
        const auto [gt, le] = b;
        if (gt >= le)
            throw std::runtime_error("unsatisfiable rule: feature " + std::to_string(feature) +
                                     " > " + std::to_string(gt) + " and <= " + std::to_string(le));
        if (le < kInf) rule.conditions.push_back({feature, CondOp::LE, le});
        if (gt > -kInf) rule.conditions.push_back({feature, CondOp::GT, gt});
    }
    return rule;
}

// Identity key for dedup and cross-trial matching; thresholds rounded to
// `decimals` places.
inline std::string rule_key(const Rule& rule, int decimals = 6) {
    std::string key;
    for (const auto& c : rule.conditions) {
        if (!key.empty()) key += '&';
        key += std::to_string(c.feature);
        key += c.op == CondOp::LE ? "<=" : ">";
        key += detail::format_threshold(c.threshold, decimals);
    }
    return key;
}

// Human-readable form, e.g. "x0 <= 1.5 and x2 > 0.25".
inline std::string rule_text(const Rule& rule, const std::vector<std::string>& feature_names,
                             int decimals = 6) {
    std::string text;
    for (const auto& c : rule.conditions) {
        if (!text.empty()) text += " and ";
        text += feature_names[static_cast<std::size_t>(c.feature)];
        text += c.op == CondOp::LE ? " <= " : " > ";
        text += detail::format_threshold(c.threshold, decimals);
    }
    return text;
}

// Breadth-first path enumeration: every non-root node contributes the rule
// formed by the conditions along its root path. Dedup in encounter order,
// stop once r_max distinct rules are kept.
inline RuleSet extract_rules(const Forest& forest, std::size_t r_max, int identity_decimals = 6) {
    if (forest.trees.empty()) throw std::runtime_error("extract_rules: empty forest");
    RuleSet out;
    std::set<std::string> seen;
    for (const auto& root : forest.trees) {
        if (out.size() >= r_max) break;
        std::deque<std::pair<const TreeNode*, std::vector<Condition>>> queue;
        queue.push_back({root.get(), {}});
        while (!queue.empty() && out.size() < r_max) {
            auto [node, path] = std::move(queue.front());
            queue.pop_front();
            if (!path.empty()) {
                const Rule rule = canonicalize(path);
                if (seen.insert(rule_key(rule, identity_decimals)).second)
                    out.rules.push_back(rule);
                if (out.size() >= r_max) break;
            }
            if (!node->is_leaf()) {
                auto left_path = path;
                left_path.push_back({node->feature, CondOp::LE, node->threshold});
                auto right_path = std::move(path);
                right_path.push_back({node->feature, CondOp::GT, node->threshold});
                queue.push_back({node->left.get(), std::move(left_path)});
                queue.push_back({node->right.get(), std::move(right_path)});
            }
        }
    }
    return out;
}

inline int evaluate_rule(const Rule& rule, const Eigen::VectorXd& x) {
    for (const auto& c : rule.conditions) {
        if (c.feature < 0 || c.feature >= x.size())
            throw std::runtime_error("rule feature index out of range: " +
                                     std::to_string(c.feature));
        const double v = x(c.feature);
        if (c.op == CondOp::LE ? !(v <= c.threshold) : !(v > c.threshold)) return 0;
    }
    return 1;
}

// Indicator matrix over the ORIGINAL (unstandardized) feature values.
inline Eigen::MatrixXd rule_matrix(const RuleSet& rules, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd R(X.rows(), static_cast<Eigen::Index>(rules.size()));
    for (std::size_t j = 0; j < rules.size(); ++j) {
        for (const auto& c : rules.rules[j].conditions)
            if (c.feature >= X.cols())
                throw std::runtime_error("rule_matrix: dimension mismatch");
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            R(i, static_cast<Eigen::Index>(j)) =
                static_cast<double>(evaluate_rule(rules.rules[j], X.row(i).transpose()));
    }
    return R;
}

struct ExtendedMatrix {
    Eigen::MatrixXd Z; // n x (d + m), raw columns first
    Eigen::Index d;
    Eigen::Index m;
};

inline ExtendedMatrix extended_matrix(const Eigen::MatrixXd& X_std, const Eigen::MatrixXd& R) {
    if (X_std.rows() != R.rows())
        throw std::runtime_error("extended_matrix: row count mismatch (" +
                                 std::to_string(X_std.rows()) + " vs " +
                                 std::to_string(R.rows()) + ")");
    ExtendedMatrix em;
    em.d = X_std.cols();
    em.m = R.cols();
    em.Z.resize(X_std.rows(), em.d + em.m);
    em.Z.leftCols(em.d) = X_std;
    em.Z.rightCols(em.m) = R;
    return em;
}

} // namespace sr4fit
