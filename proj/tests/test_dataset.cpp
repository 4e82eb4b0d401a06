#include <doctest.h>

#include "sr4fit/dataset.hpp"

#include "helpers.hpp"

using namespace sr4fit;
using testutil::TempFile;

TEST_CASE("load_csv assigns class ids in first-appearance order") {
    TempFile f("x,y,target\n1.0,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n");
    const Dataset d = load_csv(f.path(), "target");
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    CHECK(d.class_names == std::vector<std::string>{"a", "b"});
    CHECK(d.feature_names == std::vector<std::string>{"x", "y"});
    CHECK(d.features(2, 1) == 6.0);
}

TEST_CASE("load_csv single feature column") {
    TempFile f("v,t\n1.0,x\n2.0,x\n");
    const Dataset d = load_csv(f.path(), "t");
    CHECK(d.n_rows() == 2);
    CHECK(d.n_features() == 1);
    CHECK(d.n_classes() == 1);
}

TEST_CASE("load_csv error cases") {
    TempFile bad_cell("x,t\nabc,a\n");
    CHECK_THROWS_WITH_AS(load_csv(bad_cell.path(), "t"),
                         doctest::Contains("column 'x'"), std::runtime_error);
    TempFile empty("x,t\n");
    CHECK_THROWS_WITH_AS(load_csv(empty.path(), "t"), doctest::Contains("no data rows"),
                         std::runtime_error);
    TempFile ok("x,t\n1,a\n");
    CHECK_THROWS_WITH_AS(load_csv(ok.path(), "missing"),
                         doctest::Contains("target column not found"), std::runtime_error);
    CHECK_THROWS(load_csv("/nonexistent/file.csv", "t"));
}

TEST_CASE("train_test_split is deterministic and stratified") {
    const Dataset d = testutil::make_blobs(5, 42); // n=10, balanced binary

    auto [tr1, te1] = train_test_split(d, {0.3, 7});
    auto [tr2, te2] = train_test_split(d, {0.3, 7});
    CHECK(tr1.labels == tr2.labels);
    CHECK(tr1.features == tr2.features);
    CHECK(te1.labels == te2.labels);

    auto [tr, te] = train_test_split(d, {0.2, 3});
    REQUIRE(te.n_rows() == 2);
    CHECK(te.labels[0] + te.labels[1] == 1); // one row of each class
    CHECK(tr.n_rows() + te.n_rows() == d.n_rows());
}

TEST_CASE("train_test_split rejects tiny datasets") {
    Dataset d;
    d.features.resize(1, 1);
    d.features << 1.0;
    d.labels = {0};
    d.feature_names = {"x"};
    d.class_names = {"a"};
    CHECK_THROWS_AS(train_test_split(d, {0.5, 0}), std::runtime_error);
}

TEST_CASE("split partition is disjoint and different seeds differ") {
    const Dataset d = testutil::make_blobs(20, 1);
    auto [tr_a, te_a] = train_test_split(d, {0.3, 1});
    auto [tr_b, te_b] = train_test_split(d, {0.3, 2});
    CHECK(tr_a.n_rows() + te_a.n_rows() == d.n_rows());
    const bool differs = tr_a.features != tr_b.features || te_a.features != te_b.features;
    CHECK(differs);
}

TEST_CASE("standardize_fit / apply") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 5, 2, 5, 3, 5;
    const Standardizer s = standardize_fit(X);
    CHECK(s.means(0) == doctest::Approx(2.0));
    CHECK(s.stds(0) == doctest::Approx(std::sqrt(2.0 / 3.0))); // population std
    const Eigen::MatrixXd T = standardize_apply(s, X);
    CHECK(std::abs(T.col(0).mean()) <= 1e-9);
    const double sd = std::sqrt(T.col(0).array().square().mean());
    CHECK(std::abs(sd - 1.0) <= 1e-9);
    // constant column maps to zero
    CHECK(T.col(1).cwiseAbs().maxCoeff() == 0.0);
    // round trip
    CHECK((s.invert(T) - X).cwiseAbs().maxCoeff() <= 1e-9);
    Eigen::MatrixXd wrong(2, 3);
    CHECK_THROWS_AS(standardize_apply(s, wrong), std::runtime_error);
}

TEST_CASE("binarize_labels") {
    Dataset d;
    d.features.resize(3, 1);
    d.features << 0, 0, 0;
    d.labels = {0, 1, 2};
    d.feature_names = {"x"};
    d.class_names = {"a", "b", "c"};
    const Eigen::VectorXd y = binarize_labels(d, 1);
    CHECK(y(0) == -1.0);
    CHECK(y(1) == 1.0);
    CHECK(y(2) == -1.0);
    CHECK((binarize_labels(d, 0).array() == 1.0).count() == 1);
    CHECK_THROWS_AS(binarize_labels(d, 7), std::runtime_error);

    d.labels = {1, 1, 1};
    CHECK((binarize_labels(d, 1).array() == 1.0).all());
}
