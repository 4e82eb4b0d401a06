#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "sr4fit/classifier.hpp"
#include "sr4fit/dataset.hpp"
#include "sr4fit/metrics.hpp"

namespace sr4fit {

struct TrialReport {
    int trial_index = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::set<std::string> selected_rules; // class-tagged canonical texts
    int n_rules = 0;
    double avg_rule_len = 0.0;
    double fit_seconds = 0.0;
};

struct MetricsSummary {
    double accuracy_mean = 0.0, accuracy_std = 0.0;
    double precision_mean = 0.0, precision_std = 0.0;
    double recall_mean = 0.0, recall_std = 0.0;
    double f1_mean = 0.0, f1_std = 0.0;
    double mean_n_rules = 0.0;
    double mean_rule_len = 0.0;
    bool has_stability = false; // requires >= 2 trials
    double stability = 0.0;
    double ips = 0.0;
};

// Precision used when matching rules across trials; coarser than the dedup
// precision because thresholds jitter across bootstrap resamples.
constexpr int kStabilityDecimals = 4;

// Selected rule columns of a fitted classifier, tagged by class id.
inline std::set<std::string> selected_rule_set(const SR4FitClassifier& clf,
                                               int decimals = kStabilityDecimals) {
    std::set<std::string> out;
    const Eigen::Index d = clf.n_features();
    for (const auto& cm : clf.class_models)
        for (Eigen::Index j : cm.model.support)
            if (j >= d)
                out.insert("c" + std::to_string(cm.class_id) + ":" +
                           rule_key(cm.rules.rules[static_cast<std::size_t>(j - d)], decimals));
    return out;
}

inline TrialReport run_trial(const Dataset& data, double test_fraction, int trial_index,
                             std::uint64_t seed, const HyperParams& hp, const ForestConfig& fc,
                             const OptimizerConfig& oc) {
    TrialReport report;
    report.trial_index = trial_index;
    report.seed = seed;

    auto [train, test] = train_test_split(data, {test_fraction, seed});

    const auto t0 = std::chrono::steady_clock::now();
    const SR4FitClassifier clf = SR4FitClassifier::fit(train, hp, fc, oc, seed);
    report.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::vector<int> pred = clf.predict_all(test.features);
    const auto metrics =
        classification_metrics(confusion_counts(test.labels, pred, data.n_classes()));
    report.accuracy = metrics.accuracy;
    report.precision = metrics.precision;
    report.recall = metrics.recall;
    report.f1 = metrics.f1;

    report.selected_rules = selected_rule_set(clf);
    report.n_rules = static_cast<int>(report.selected_rules.size());

    std::size_t total_len = 0, count = 0;
    const Eigen::Index d = clf.n_features();
    for (const auto& cm : clf.class_models)
        for (Eigen::Index j : cm.model.support)
            if (j >= d) {
                total_len += cm.rules.rules[static_cast<std::size_t>(j - d)].conditions.size();
                ++count;
            }
    report.avg_rule_len =
        count > 0 ? static_cast<double>(total_len) / static_cast<double>(count) : 0.0;
    return report;
}

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<TrialReport>& trials,
                                          double TrialReport::* field) {
    double mean = 0.0;
    for (const auto& t : trials) mean += t.*field;
    mean /= static_cast<double>(trials.size());
    if (trials.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (const auto& t : trials) {
        const double d = t.*field - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(trials.size() - 1))};
}

} // namespace detail

inline MetricsSummary summarize(const std::vector<TrialReport>& trials, std::size_t r_max,
                                int max_depth) {
    if (trials.empty()) throw std::runtime_error("summarize: no trials");
    MetricsSummary s;
    std::tie(s.accuracy_mean, s.accuracy_std) = detail::mean_std(trials, &TrialReport::accuracy);
    std::tie(s.precision_mean, s.precision_std) = detail::mean_std(trials, &TrialReport::precision);
    std::tie(s.recall_mean, s.recall_std) = detail::mean_std(trials, &TrialReport::recall);
    std::tie(s.f1_mean, s.f1_std) = detail::mean_std(trials, &TrialReport::f1);

    for (const auto& t : trials) {
        s.mean_n_rules += t.n_rules;
        s.mean_rule_len += t.avg_rule_len;
    }
    s.mean_n_rules /= static_cast<double>(trials.size());
    s.mean_rule_len /= static_cast<double>(trials.size());

    if (trials.size() >= 2) {
        std::vector<std::set<std::string>> sets;
        sets.reserve(trials.size());
        for (const auto& t : trials) sets.push_back(t.selected_rules);
        s.stability = stability(sets);
        s.has_stability = true;
        s.ips = interpretability_score(s.accuracy_mean, s.stability, s.mean_n_rules,
                                       s.mean_rule_len, static_cast<double>(r_max), max_depth);
    }
    return s;
}

inline std::string trials_csv(const std::vector<TrialReport>& trials) {
    std::string out = "trial,seed,accuracy,precision,recall,f1,n_rules,avg_rule_len\n";
    char buf[256];
    for (const auto& t : trials) {
        std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n",
                      t.trial_index, static_cast<unsigned long long>(t.seed), t.accuracy,
                      t.precision, t.recall, t.f1, t.n_rules, t.avg_rule_len);
        out += buf;
    }
    return out;
}

inline nlohmann::json summary_to_json(const MetricsSummary& s) {
    nlohmann::json j;
    j["accuracy"] = {{"mean", s.accuracy_mean}, {"std", s.accuracy_std}};
    j["precision"] = {{"mean", s.precision_mean}, {"std", s.precision_std}};
    j["recall"] = {{"mean", s.recall_mean}, {"std", s.recall_std}};
    j["f1"] = {{"mean", s.f1_mean}, {"std", s.f1_std}};
    j["mean_n_rules"] = s.mean_n_rules;
    j["mean_rule_len"] = s.mean_rule_len;
    if (s.has_stability) {
        j["stability"] = s.stability;
        j["ips"] = s.ips;
    } else {
        j["stability"] = nullptr;
    }
    return j;
}

struct GridPoint {
    std::size_t r_max;
    double lambda;
    double kappa;
    double mean_accuracy;
};

struct GridResult {
    std::vector<GridPoint> points;
    GridPoint chosen;
};

// Grid search on validation splits carved from the training portion only.
// Ties: smaller r_max, then larger lambda, then smaller kappa.
inline GridResult grid_search(const Dataset& train, const std::vector<std::size_t>& r_max_grid,
                              const std::vector<double>& lambda_grid,
                              const std::vector<double>& kappa_grid, const ForestConfig& fc,
                              const OptimizerConfig& oc, std::uint64_t base_seed,
                              int n_validation_trials = 5, double validation_fraction = 0.25) {
    if (r_max_grid.empty() || lambda_grid.empty() || kappa_grid.empty())
        throw std::runtime_error("grid_search: empty grid");

    GridResult result;
    bool have_chosen = false;
    for (std::size_t r_max : r_max_grid)
        for (double lambda : lambda_grid)
            for (double kappa : kappa_grid) {
                const HyperParams hp{lambda, kappa, r_max};
                double acc_sum = 0.0;
                for (int k = 0; k < n_validation_trials; ++k) {
                    const std::uint64_t seed =
                        mix_seed(base_seed, 0x67726964ULL + static_cast<std::uint64_t>(k));
                    const TrialReport r =
                        run_trial(train, validation_fraction, k, seed, hp, fc, oc);
                    acc_sum += r.accuracy;
                }
                const GridPoint point{r_max, lambda, kappa,
                                      acc_sum / static_cast<double>(n_validation_trials)};
                result.points.push_back(point);

                const auto better = [&](const GridPoint& a, const GridPoint& b) {
                    if (a.mean_accuracy != b.mean_accuracy)
                        return a.mean_accuracy > b.mean_accuracy;
                    if (a.r_max != b.r_max) return a.r_max < b.r_max;
                    if (a.lambda != b.lambda) return a.lambda > b.lambda;
                    return a.kappa < b.kappa;
                };
                if (!have_chosen || better(point, result.chosen)) {
                    result.chosen = point;
                    have_chosen = true;
                }
            }
    return result;
}

inline nlohmann::json grid_to_json(const GridResult& g) {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const auto& p : g.points)
        j["points"].push_back({{"r_max", p.r_max},
                               {"lambda", p.lambda},
                               {"kappa", p.kappa},
                               {"mean_accuracy", p.mean_accuracy}});
    j["chosen"] = {{"r_max", g.chosen.r_max},
                   {"lambda", g.chosen.lambda},
                   {"kappa", g.chosen.kappa},
                   {"mean_accuracy", g.chosen.mean_accuracy}};
    return j;
}

} // namespace sr4fit
