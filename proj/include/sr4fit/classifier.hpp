#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sr4fit/dataset.hpp"
#include "sr4fit/forest.hpp"
#include "sr4fit/rules.hpp"
#include "sr4fit/sr3.hpp"

namespace sr4fit {

constexpr int kModelFormatVersion = 1;

// One-vs-rest member model for a single class.
struct ClassModel {
    int class_id = 0;
    RuleSet rules;
    SparseLinearModel model; // length d + |rules|
    Standardizer standardizer;
    FitDiagnostics diagnostics;
};

class SR4FitClassifier {
public:
    std::vector<ClassModel> class_models;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    HyperParams hyperparams;
    ForestConfig forest_config;
    OptimizerConfig optimizer_config;
    std::uint64_t seed = 0;

    Eigen::Index n_features() const {
        return static_cast<Eigen::Index>(feature_names.size());
    }

    // Pipeline per class: binarize, grow a forest on the original features,
    // extract rules, standardize the raw columns, fit the sparse model on
    // [X_std | R], prune to the support of w.
    static SR4FitClassifier fit(const Dataset& train, const HyperParams& hp,
                                const ForestConfig& fc, const OptimizerConfig& oc,
                                std::uint64_t seed) {
        if (train.n_classes() < 2)
            throw std::runtime_error("fit: need at least 2 classes, got " +
                                     std::to_string(train.n_classes()));

        SR4FitClassifier clf;
        clf.feature_names = train.feature_names;
        clf.class_names = train.class_names;
        clf.hyperparams = hp;
        clf.forest_config = fc;
        clf.optimizer_config = oc;
        clf.seed = seed;

        for (int c = 0; c < train.n_classes(); ++c) {
            try {
                ClassModel cm;
                cm.class_id = c;

                const Eigen::VectorXd y = binarize_labels(train, c);
                ForestConfig class_fc = fc;
                class_fc.seed = mix_seed(seed, static_cast<std::uint64_t>(c));
                const Forest forest = train_forest(train.features, y, class_fc);

                cm.rules = extract_rules(forest, hp.r_max);
                cm.rules.source_class = c;

                cm.standardizer = standardize_fit(train.features);
                const Eigen::MatrixXd X_std = cm.standardizer.apply(train.features);
                const Eigen::MatrixXd R = rule_matrix(cm.rules, train.features);
                const ExtendedMatrix em = extended_matrix(X_std, R);

                auto [model, diag] = fit_sr3(em.Z, y, hp, oc);
                cm.model = prune(model);
                cm.diagnostics = diag;
                clf.class_models.push_back(std::move(cm));
            } catch (const std::exception& e) {
                throw std::runtime_error("class " + train.class_names[static_cast<std::size_t>(c)] +
                                         " (id " + std::to_string(c) + "): " + e.what());
            }
        }
        return clf;
    }

    // s(x) = b0 + sum_j beta_j Z_j(x) over the pruned support.
    double score(const Eigen::VectorXd& x, int c) const {
        const ClassModel& cm = class_models.at(static_cast<std::size_t>(c));
        if (x.size() != n_features())
            throw std::runtime_error("score: expected " + std::to_string(n_features()) +
                                     " features, got " + std::to_string(x.size()));
        const Eigen::Index d = n_features();
        double s = cm.model.intercept;
        for (Eigen::Index j : cm.model.support) {
            const double zj = j < d
                                  ? (x(j) - cm.standardizer.means(j)) / cm.standardizer.stds(j)
                                  : static_cast<double>(evaluate_rule(
                                        cm.rules.rules[static_cast<std::size_t>(j - d)], x));
            s += cm.model.beta(j) * zj;
        }
        return s;
    }

    // Per-class OvR confidences; not normalized to sum to 1.
    std::vector<double> predict_proba(const Eigen::VectorXd& x) const {
        std::vector<double> probs;
        probs.reserve(class_models.size());
        for (const auto& cm : class_models) probs.push_back(sigmoid(score(x, cm.class_id)));
        return probs;
    }

    // Argmax of the per-class probabilities, ties to the lowest class id.
    int predict(const Eigen::VectorXd& x) const {
        int best = 0;
        double best_p = -1.0;
        for (std::size_t c = 0; c < class_models.size(); ++c) {
            const double p = sigmoid(score(x, static_cast<int>(c)));
            if (p > best_p) {
                best_p = p;
                best = static_cast<int>(c);
            }
        }
        return best;
    }

    std::vector<int> predict_all(const Eigen::MatrixXd& X) const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            out.push_back(predict(X.row(i).transpose()));
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format_version"] = kModelFormatVersion;
        j["feature_names"] = feature_names;
        j["class_names"] = class_names;
        j["hyperparams"] = {{"lambda", hyperparams.lambda},
                            {"kappa", hyperparams.kappa},
                            {"r_max", hyperparams.r_max}};
        j["class_models"] = nlohmann::json::array();
        for (const auto& cm : class_models) {
            nlohmann::json cj;
            cj["class_id"] = cm.class_id;
            cj["standardizer"] = {
                {"means", std::vector<double>(cm.standardizer.means.begin(),
                                              cm.standardizer.means.end())},
                {"stds", std::vector<double>(cm.standardizer.stds.begin(),
                                             cm.standardizer.stds.end())}};
            nlohmann::json rules = nlohmann::json::array();
            for (const auto& rule : cm.rules.rules) {
                nlohmann::json conds = nlohmann::json::array();
                for (const auto& c : rule.conditions)
                    conds.push_back({{"feature", c.feature},
                                     {"op", c.op == CondOp::LE ? "le" : "gt"},
                                     {"threshold", c.threshold}});
                rules.push_back({{"conditions", conds}});
            }
            cj["rules"] = rules;
            cj["beta"] = std::vector<double>(cm.model.beta.begin(), cm.model.beta.end());
            cj["intercept"] = cm.model.intercept;
            cj["w"] = std::vector<double>(cm.model.w.begin(), cm.model.w.end());
            cj["diagnostics"] = diagnostics_to_json(cm.diagnostics);
            j["class_models"].push_back(std::move(cj));
        }
        return j;
    }

    static SR4FitClassifier from_json(const nlohmann::json& j) {
        if (!j.contains("format_version"))
            throw std::runtime_error("model file missing format_version");
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw std::runtime_error("unsupported model format_version " +
                                     std::to_string(version) + " (expected " +
                                     std::to_string(kModelFormatVersion) + ")");

        SR4FitClassifier clf;
        clf.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        clf.class_names = j.at("class_names").get<std::vector<std::string>>();
        clf.hyperparams.lambda = j.at("hyperparams").at("lambda").get<double>();
        clf.hyperparams.kappa = j.at("hyperparams").at("kappa").get<double>();
        clf.hyperparams.r_max = j.at("hyperparams").at("r_max").get<std::size_t>();

        for (const auto& cj : j.at("class_models")) {
            ClassModel cm;
            cm.class_id = cj.at("class_id").get<int>();
            const auto means = cj.at("standardizer").at("means").get<std::vector<double>>();
            const auto stds = cj.at("standardizer").at("stds").get<std::vector<double>>();
            cm.standardizer.means =
                Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
            cm.standardizer.stds =
                Eigen::Map<const Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
            for (const auto& rj : cj.at("rules")) {
                Rule rule;
                for (const auto& cnd : rj.at("conditions"))
                    rule.conditions.push_back(
                        {cnd.at("feature").get<int>(),
                         cnd.at("op").get<std::string>() == "le" ? CondOp::LE : CondOp::GT,
                         cnd.at("threshold").get<double>()});
                cm.rules.rules.push_back(std::move(rule));
            }
            cm.rules.source_class = cm.class_id;
            const auto beta = cj.at("beta").get<std::vector<double>>();
            const auto w = cj.at("w").get<std::vector<double>>();
            cm.model.beta =
                Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
            cm.model.w =
                Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
            cm.model.intercept = cj.at("intercept").get<double>();
            cm.model.support = support_of(cm.model.w);
            cm.diagnostics = diagnostics_from_json(cj.at("diagnostics"));
            clf.class_models.push_back(std::move(cm));
        }
        return clf;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write model file: " + path);
        out << to_json().dump(2) << '\n';
        if (!out) throw std::runtime_error("write failed: " + path);
    }

    static SR4FitClassifier load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open model file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("malformed model file " + path + ": " + e.what());
        }
        return from_json(j);
    }

    // Selected terms per class, sorted by |beta| descending.
    std::string rule_report() const {
        std::ostringstream out;
        const Eigen::Index d = n_features();
        for (const auto& cm : class_models) {
            out << "class " << class_names[static_cast<std::size_t>(cm.class_id)] << " ("
                << cm.model.support.size() << " selected terms, intercept "
                << cm.model.intercept << ")\n";
            std::vector<Eigen::Index> order = cm.model.support;
            std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                const double ma = std::abs(cm.model.beta(a)), mb = std::abs(cm.model.beta(b));
                return ma != mb ? ma > mb : a < b;
            });
            for (Eigen::Index j : order) {
                out << "  " << cm.model.beta(j) << "  ";
                if (j < d)
                    out << "feature " << feature_names[static_cast<std::size_t>(j)]
                        << " (standardized)";
                else
                    out << "rule "
                        << rule_text(cm.rules.rules[static_cast<std::size_t>(j - d)],
                                     feature_names);
                out << '\n';
            }
        }
        return out.str();
    }
};

} // namespace sr4fit
