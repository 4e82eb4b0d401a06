#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sr4fit/rng.hpp"

namespace sr4fit {

struct Dataset {
    Eigen::MatrixXd features;               // n x d
    std::vector<int> labels;                // dense ids, 0..C
    std::vector<std::string> feature_names; // size d
    std::vector<std::string> class_names;   // size C+1

    Eigen::Index n_rows() const { return features.rows(); }
    Eigen::Index n_features() const { return features.cols(); }
    int n_classes() const { return static_cast<int>(class_names.size()); }

    Dataset subset(const std::vector<Eigen::Index>& rows) const {
        Dataset out;
        out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
        out.labels.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
            out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
        }
        out.feature_names = feature_names;
        out.class_names = class_names;
        return out;
    }
};

struct SplitSpec {
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

// CSV loader: comma delimiter, first row is the header, every non-target
// column must parse as a finite number. Target values become dense class ids
// in first-appearance order.
inline Dataset load_csv(const std::string& path, const std::string& target) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    std::vector<std::string> header = detail::split_line(line);
    for (auto& h : header) h = detail::trim(h);

    std::ptrdiff_t target_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == target) target_col = static_cast<std::ptrdiff_t>(j);
    if (target_col < 0)
        throw std::runtime_error("target column not found: " + target);

    Dataset data;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (static_cast<std::ptrdiff_t>(j) != target_col)
            data.feature_names.push_back(header[j]);

    std::map<std::string, int> class_ids;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells = detail::split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("row " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(header.size() - 1);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const std::string cell = detail::trim(cells[j]);
            if (static_cast<std::ptrdiff_t>(j) == target_col) {
                auto [it, inserted] =
                    class_ids.try_emplace(cell, static_cast<int>(data.class_names.size()));
                if (inserted) data.class_names.push_back(cell);
                data.labels.push_back(it->second);
            } else {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v))
                    throw std::runtime_error("row " + std::to_string(line_no) + ", column '" +
                                             header[j] + "': non-numeric cell '" + cell + "'");
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("no data rows in " + path);

    data.features.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(data.feature_names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return data;
}

// Deterministic stratified split. Classes with a single row go entirely to
// the training side.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& data, const SplitSpec& spec) {
    const Eigen::Index n = data.n_rows();
    const auto n_test_total = static_cast<Eigen::Index>(
        std::ceil(static_cast<double>(n) * spec.test_fraction));
    if (n_test_total < 1 || n - n_test_total < 1)
        throw std::runtime_error("dataset too small to split: n=" + std::to_string(n));

    std::vector<std::vector<Eigen::Index>> by_class(data.class_names.size());
    for (Eigen::Index i = 0; i < n; ++i)
        by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);

    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        if (rows.size() == 1) {
            train_rows.push_back(rows[0]);
            continue;
        }
        Rng rng(mix_seed(spec.seed, c));
        for (std::size_t i = rows.size() - 1; i > 0; --i)
            std::swap(rows[i], rows[rng.next_index(i + 1)]);
        auto n_test = static_cast<std::size_t>(
            std::llround(static_cast<double>(rows.size()) * spec.test_fraction));
        n_test = std::min(std::max<std::size_t>(n_test, 1), rows.size() - 1);
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < n_test ? test_rows : train_rows).push_back(rows[i]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {data.subset(train_rows), data.subset(test_rows)};
}

// Per-column z-scoring statistics. Population std; constant columns keep
// std 1 so they transform to zero.
struct Standardizer {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        if (X.cols() != means.size())
            throw std::runtime_error("standardizer dimension mismatch: " +
                                     std::to_string(X.cols()) + " vs " +
                                     std::to_string(means.size()));
        return (X.rowwise() - means.transpose()).array().rowwise() /
               stds.transpose().array();
    }

    Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const {
        if (x.size() != means.size())
            throw std::runtime_error("standardizer dimension mismatch");
        return (x - means).cwiseQuotient(stds);
    }

    Eigen::MatrixXd invert(const Eigen::MatrixXd& X) const {
        return (X.array().rowwise() * stds.transpose().array()).rowwise() +
               means.transpose().array();
    }
};

inline Standardizer standardize_fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.means = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - s.means.transpose();
    s.stds = (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index j = 0; j < s.stds.size(); ++j)
        if (s.stds(j) <= 0.0) s.stds(j) = 1.0;
    return s;
}

inline Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& X) {
    return s.apply(X);
}

// One-vs-rest labels in {-1, +1}.
inline Eigen::VectorXd binarize_labels(const Dataset& data, int positive_class) {
    if (positive_class < 0 || positive_class >= data.n_classes())
        throw std::runtime_error("unknown class id: " + std::to_string(positive_class));
    Eigen::VectorXd y(data.n_rows());
    for (Eigen::Index i = 0; i < data.n_rows(); ++i)
        y(i) = data.labels[static_cast<std::size_t>(i)] == positive_class ? 1.0 : -1.0;
    return y;
}

} // namespace sr4fit
