#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sr4fit {

inline Eigen::MatrixXi confusion_counts(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred, int n_classes) {
    if (y_true.size() != y_pred.size())
        throw std::runtime_error("confusion_counts: length mismatch");
    if (y_true.empty()) throw std::runtime_error("confusion_counts: empty input");
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= n_classes || y_pred[i] >= n_classes)
            throw std::runtime_error("confusion_counts: label out of range");
        counts(y_true[i], y_pred[i]) += 1;
    }
    return counts;
}

struct ClassificationMetrics {
    double accuracy;
    double precision; // macro
    double recall;    // macro
    double f1;        // macro
};

// Macro averaging with the 0/0 -> 0 convention per class.
inline ClassificationMetrics classification_metrics(const Eigen::MatrixXi& counts) {
    const int C = static_cast<int>(counts.rows());
    const double total = counts.sum();
    if (total < 1) throw std::runtime_error("classification_metrics: empty counts");

    double precision_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
    for (int c = 0; c < C; ++c) {
        const double tp = counts(c, c);
        const double pred_c = counts.col(c).sum();
        const double true_c = counts.row(c).sum();
        const double p = pred_c > 0 ? tp / pred_c : 0.0;
        const double r = true_c > 0 ? tp / true_c : 0.0;
        precision_sum += p;
        recall_sum += r;
        f1_sum += (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return {static_cast<double>(counts.trace()) / total, precision_sum / C, recall_sum / C,
            f1_sum / C};
}

// 2|A n B| / (|A| + |B|); both empty counts as perfect agreement.
inline double dice_sorensen(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& x : a) common += b.count(x);
    return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

// Mean pairwise Dice-Sorensen over trials; each trial contributes one merged
// rule set (members pre-tagged by class).
inline double stability(const std::vector<std::set<std::string>>& trial_rule_sets) {
    const std::size_t n = trial_rule_sets.size();
    if (n < 2) throw std::runtime_error("stability: need at least 2 trials");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            sum += dice_sorensen(trial_rule_sets[i], trial_rule_sets[j]);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

// Equal-weight combination of accuracy, stability, simplicity (few rules)
// and brevity (short rules). Zero-rule models count as maximally brief.
inline double interpretability_score(double mean_accuracy, double stability_value,
                                     double mean_n_rules, double mean_rule_len,
                                     double r_max, int max_depth) {
    const double simplicity = 1.0 - std::min(mean_n_rules / r_max, 1.0);
    const double len = mean_rule_len < 1.0 ? 1.0 : mean_rule_len;
    const double brevity =
        1.0 - std::min((len - 1.0) / std::max(static_cast<double>(max_depth - 1), 1.0), 1.0);
    return 0.25 * (mean_accuracy + stability_value + simplicity + brevity);
}

namespace detail {

// Regularized incomplete beta I_x(a,b) by the Lentz continued fraction
// (Numerical Recipes 6.4). Accurate to ~1e-14 for the t-test use case.
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace detail

// Two-sided p for Student's t with df degrees of freedom:
// p = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_p_value(double t, int df) {
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    const double x = df / (df + t * t);
    return detail::incomplete_beta(0.5 * df, 0.5, x);
}

struct TTestResult {
    double t_statistic;
    double p_value;
    int df;
};

// Paired two-sided t-test with sample std (n-1 divisor).
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::runtime_error("paired_t_test: length mismatch");
    const auto n = a.size();
    if (n < 2) throw std::runtime_error("paired_t_test: need at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const int df = static_cast<int>(n) - 1;

    if (sd == 0.0) {
        if (mean == 0.0) return {0.0, 1.0, df};
        const double inf = std::numeric_limits<double>::infinity();
        return {mean > 0 ? inf : -inf, 0.0, df};
    }
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    return {t, student_t_p_value(t, df), df};
}

} // namespace sr4fit
