#pragma once

#include <Eigen/Dense>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "sr4fit/dataset.hpp"
#include "sr4fit/forest.hpp"
#include "sr4fit/rng.hpp"

namespace testutil {

// Writes content to a unique temp file, removes it on destruction.
class TempFile {
public:
    explicit TempFile(const std::string& content, const std::string& suffix = ".csv") {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("sr4fit_test_" + std::to_string(++counter) + "_" +
                  std::to_string(::getpid()) + suffix))
                    .string();
        std::ofstream out(path_, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::filesystem::remove(path_); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Two well separated gaussian blobs, trivially separable.
inline sr4fit::Dataset make_blobs(int n_per_class, std::uint64_t seed, double spread = 0.5) {
    sr4fit::Rng rng(seed);
    auto gauss = [&]() {
        // Box-Muller from the deterministic generator
        const double u1 = rng.next_double() + 1e-12, u2 = rng.next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    sr4fit::Dataset data;
    const int n = 2 * n_per_class;
    data.features.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const int c = i % 2;
        const double cx = c ? 3.0 : -3.0;
        data.features(i, 0) = cx + spread * gauss();
        data.features(i, 1) = cx + spread * gauss();
        data.labels.push_back(c);
    }
    data.feature_names = {"x0", "x1"};
    data.class_names = {"a", "b"};
    return data;
}

// Leaf / internal node builders for hand-constructed trees.
inline std::unique_ptr<sr4fit::TreeNode> leaf(double pos_frac, int count) {
    auto n = std::make_unique<sr4fit::TreeNode>();
    n->pos_frac = pos_frac;
    n->count = count;
    return n;
}

inline std::unique_ptr<sr4fit::TreeNode> internal(int feature, double threshold,
                                                  std::unique_ptr<sr4fit::TreeNode> left,
                                                  std::unique_ptr<sr4fit::TreeNode> right) {
    auto n = std::make_unique<sr4fit::TreeNode>();
    n->feature = feature;
    n->threshold = threshold;
    n->left = std::move(left);
    n->right = std::move(right);
    return n;
}

} // namespace testutil
