// sr4fit command line: train / predict / trials / grid / rules.
//
// Every knob can come from a JSON config (--config); explicit flags override
// their config counterparts. Exit codes: 0 success, 1 runtime or I/O error,
// 2 usage or config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sr4fit/classifier.hpp"
#include "sr4fit/dataset.hpp"
#include "sr4fit/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::string data_path;
    std::string target;
    std::string model_path;
    std::string input_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int n_trials = 30;
    double test_fraction = 0.3;
    std::optional<double> lambda;
    std::optional<double> kappa;
    std::optional<std::size_t> r_max;

    sr4fit::HyperParams hp;
    sr4fit::ForestConfig fc;
    sr4fit::OptimizerConfig oc;
    std::vector<std::size_t> r_max_grid = {50, 100, 200};
    std::vector<double> lambda_grid = {0.01, 0.1, 1.0};
    std::vector<double> kappa_grid = {0.1, 1.0, 10.0};
    int grid_trials = 5;
};

void apply_config(Options& opt, const CLI::App* sub) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + opt.config_path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", std::string("malformed JSON: ") + e.what());
    }
    // Explicit flags win over their config counterparts.
    auto flagged = [&](const std::string& name) {
        const auto* o = sub->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    if (cfg.contains("data") && !flagged("--data")) opt.data_path = cfg["data"].get<std::string>();
    if (cfg.contains("target") && !flagged("--target"))
        opt.target = cfg["target"].get<std::string>();
    if (cfg.contains("model") && !flagged("--model"))
        opt.model_path = cfg["model"].get<std::string>();
    if (cfg.contains("out") && !flagged("--out")) opt.out_dir = cfg["out"].get<std::string>();
    if (cfg.contains("test_fraction") && !flagged("--test-fraction"))
        opt.test_fraction = cfg["test_fraction"].get<double>();
    if (cfg.contains("n_trials") && !flagged("--trials")) opt.n_trials = cfg["n_trials"].get<int>();
    if (cfg.contains("base_seed") && !flagged("--seed"))
        opt.seed = cfg["base_seed"].get<std::uint64_t>();
    if (cfg.contains("hyperparams")) {
        const auto& h = cfg["hyperparams"];
        if (h.contains("lambda")) opt.hp.lambda = h["lambda"].get<double>();
        if (h.contains("kappa")) opt.hp.kappa = h["kappa"].get<double>();
        if (h.contains("r_max")) opt.hp.r_max = h["r_max"].get<std::size_t>();
    }
    if (cfg.contains("grid")) {
        const auto& g = cfg["grid"];
        if (g.contains("r_max")) opt.r_max_grid = g["r_max"].get<std::vector<std::size_t>>();
        if (g.contains("lambda")) opt.lambda_grid = g["lambda"].get<std::vector<double>>();
        if (g.contains("kappa")) opt.kappa_grid = g["kappa"].get<std::vector<double>>();
        if (g.contains("trials")) opt.grid_trials = g["trials"].get<int>();
    }
    if (cfg.contains("forest")) {
        const auto& f = cfg["forest"];
        if (f.contains("n_trees")) opt.fc.n_trees = f["n_trees"].get<int>();
        if (f.contains("max_depth")) opt.fc.max_depth = f["max_depth"].get<int>();
        if (f.contains("min_leaf")) opt.fc.min_leaf = f["min_leaf"].get<int>();
        if (f.contains("features_per_split"))
            opt.fc.features_per_split = f["features_per_split"].get<int>();
        if (f.contains("bootstrap")) opt.fc.bootstrap = f["bootstrap"].get<bool>();
    }
    if (cfg.contains("optimizer")) {
        const auto& o = cfg["optimizer"];
        if (o.contains("max_outer_iters")) opt.oc.max_outer_iters = o["max_outer_iters"].get<int>();
        if (o.contains("outer_tol")) opt.oc.outer_tol = o["outer_tol"].get<double>();
        if (o.contains("max_inner_iters")) opt.oc.max_inner_iters = o["max_inner_iters"].get<int>();
        if (o.contains("inner_tol")) opt.oc.inner_tol = o["inner_tol"].get<double>();
    }
    if (opt.r_max_grid.empty() || opt.lambda_grid.empty() || opt.kappa_grid.empty())
        throw CLI::ValidationError("--config", "hyperparameter grids must be nonempty");
    if (opt.n_trials < 1) throw CLI::ValidationError("--config", "n_trials must be >= 1");
}

void finalize(Options& opt) {
    if (opt.lambda) opt.hp.lambda = *opt.lambda;
    if (opt.kappa) opt.hp.kappa = *opt.kappa;
    if (opt.r_max) opt.hp.r_max = *opt.r_max;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int cmd_train(Options& opt) {
    const auto data = sr4fit::load_csv(opt.data_path, opt.target);
    const auto clf =
        sr4fit::SR4FitClassifier::fit(data, opt.hp, opt.fc, opt.oc, opt.seed);
    fs::create_directories(opt.out_dir);
    clf.save((fs::path(opt.out_dir) / "model.json").string());
    write_file(fs::path(opt.out_dir) / "rules.txt", clf.rule_report());
    for (const auto& cm : clf.class_models)
        std::printf("class %s: nnz=%d converged=%s outer_iters=%d\n",
                    clf.class_names[static_cast<std::size_t>(cm.class_id)].c_str(),
                    cm.diagnostics.nnz, cm.diagnostics.converged ? "yes" : "no",
                    cm.diagnostics.outer_iterations);
    return 0;
}

int cmd_predict(Options& opt) {
    const auto clf = sr4fit::SR4FitClassifier::load(opt.model_path);

    std::ifstream in(opt.input_path);
    if (!in) throw std::runtime_error("cannot open " + opt.input_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty input file");
    std::stringstream hs(line);
    std::vector<std::string> header;
    std::string cell;
    while (std::getline(hs, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        header.push_back(cell);
    }
    // A trailing target column is tolerated and ignored; the feature columns
    // must match the training names in order.
    if (header.size() < clf.feature_names.size())
        throw std::runtime_error("input has " + std::to_string(header.size()) +
                                 " columns, model needs " +
                                 std::to_string(clf.feature_names.size()));
    for (std::size_t j = 0; j < clf.feature_names.size(); ++j)
        if (header[j] != clf.feature_names[j])
            throw std::runtime_error("feature name mismatch at column " + std::to_string(j) +
                                     ": got '" + header[j] + "', model expects '" +
                                     clf.feature_names[j] + "'");

    std::string out = "row,predicted_class";
    for (const auto& name : clf.class_names) out += ",p_" + name;
    out += '\n';

    std::size_t row = 0;
    char buf[64];
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ls(line);
        Eigen::VectorXd x(clf.n_features());
        for (Eigen::Index j = 0; j < clf.n_features(); ++j) {
            if (!std::getline(ls, cell, ','))
                throw std::runtime_error("row " + std::to_string(row) + ": too few cells");
            x(j) = std::strtod(cell.c_str(), nullptr);
        }
        const int pred = clf.predict(x);
        out += std::to_string(row) + ',' + clf.class_names[static_cast<std::size_t>(pred)];
        for (double p : clf.predict_proba(x)) {
            std::snprintf(buf, sizeof(buf), ",%.17g", p);
            out += buf;
        }
        out += '\n';
        ++row;
    }
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "predictions.csv", out);
    std::printf("wrote %zu predictions\n", row);
    return 0;
}

int cmd_trials(Options& opt) {
    const auto data = sr4fit::load_csv(opt.data_path, opt.target);
    std::vector<sr4fit::TrialReport> trials;
    for (int i = 0; i < opt.n_trials; ++i) {
        try {
            trials.push_back(sr4fit::run_trial(data, opt.test_fraction, i,
                                               opt.seed + static_cast<std::uint64_t>(i),
                                               opt.hp, opt.fc, opt.oc));
        } catch (const std::exception& e) {
            throw std::runtime_error("trial " + std::to_string(i) + ": " + e.what());
        }
    }
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "trials.csv", sr4fit::trials_csv(trials));
    const auto summary = sr4fit::summarize(trials, opt.hp.r_max, opt.fc.max_depth);
    if (!summary.has_stability)
        std::fprintf(stderr,
                     "warning: single trial, stability is null and ips omitted\n");
    write_file(fs::path(opt.out_dir) / "summary.json",
               sr4fit::summary_to_json(summary).dump(2) + "\n");
    std::printf("accuracy %.4f +/- %.4f over %d trials\n", summary.accuracy_mean,
                summary.accuracy_std, opt.n_trials);
    return 0;
}

int cmd_grid(Options& opt) {
    const auto data = sr4fit::load_csv(opt.data_path, opt.target);
    // Hold out the test portion first; the search only ever sees the rest.
    auto [train, test] = sr4fit::train_test_split(data, {opt.test_fraction, opt.seed});
    (void)test;
    const auto result =
        sr4fit::grid_search(train, opt.r_max_grid, opt.lambda_grid, opt.kappa_grid, opt.fc,
                            opt.oc, opt.seed, opt.grid_trials);
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "grid.json", sr4fit::grid_to_json(result).dump(2) + "\n");
    std::printf("chosen: r_max=%zu lambda=%g kappa=%g (val accuracy %.4f)\n",
                result.chosen.r_max, result.chosen.lambda, result.chosen.kappa,
                result.chosen.mean_accuracy);
    return 0;
}

int cmd_rules(Options& opt) {
    const auto clf = sr4fit::SR4FitClassifier::load(opt.model_path);
    std::cout << clf.rule_report();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SR4-Fit interpretable rule-ensemble classifier"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "JSON config file");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--seed", opt.seed, "base seed");
        cmd->add_option("--lambda", [&](const std::vector<std::string>& v) {
            opt.lambda = std::stod(v[0]); return true; }, "sparsity weight");
        cmd->add_option("--kappa", [&](const std::vector<std::string>& v) {
            opt.kappa = std::stod(v[0]); return true; }, "coupling weight");
        cmd->add_option("--rmax", [&](const std::vector<std::string>& v) {
            opt.r_max = std::stoull(v[0]); return true; }, "max rules per class");
    };

    auto* train = app.add_subcommand("train", "fit a model, write model.json and rules.txt");
    train->add_option("--data", opt.data_path, "training CSV");
    train->add_option("--target", opt.target, "target column name");
    add_common(train);

    auto* predict = app.add_subcommand("predict", "classify a CSV with a saved model");
    predict->add_option("--model", opt.model_path, "model.json path");
    predict->add_option("--data", opt.input_path, "input CSV");
    add_common(predict);

    auto* trials = app.add_subcommand("trials", "multi-trial evaluation protocol");
    trials->add_option("--data", opt.data_path, "dataset CSV");
    trials->add_option("--target", opt.target, "target column name");
    trials->add_option("--trials", opt.n_trials, "number of trials");
    trials->add_option("--test-fraction", opt.test_fraction, "held-out fraction per trial");
    add_common(trials);

    auto* grid = app.add_subcommand("grid", "hyperparameter grid search");
    grid->add_option("--data", opt.data_path, "dataset CSV");
    grid->add_option("--target", opt.target, "target column name");
    grid->add_option("--test-fraction", opt.test_fraction, "held-out fraction (never searched)");
    add_common(grid);

    auto* rules = app.add_subcommand("rules", "print the rule report of a saved model");
    rules->add_option("--model", opt.model_path, "model.json path");
    add_common(rules);

    try {
        app.parse(argc, argv);
        apply_config(opt, app.get_subcommands().front());
        finalize(opt);

        auto require = [](const std::string& value, const std::string& flag) {
            if (value.empty()) throw CLI::RequiredError(flag);
        };
        if (train->parsed()) {
            require(opt.data_path, "--data");
            require(opt.target, "--target");
            return cmd_train(opt);
        }
        if (predict->parsed()) {
            require(opt.model_path, "--model");
            require(opt.input_path, "--data");
            return cmd_predict(opt);
        }
        if (trials->parsed()) {
            require(opt.data_path, "--data");
            require(opt.target, "--target");
            return cmd_trials(opt);
        }
        if (grid->parsed()) {
            require(opt.data_path, "--data");
            require(opt.target, "--target");
            return cmd_grid(opt);
        }
        if (rules->parsed()) {
            require(opt.model_path, "--model");
            return cmd_rules(opt);
        }
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
