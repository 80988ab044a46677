#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "mfp/tasks.hpp"

using namespace mfp;

namespace {

bool in_unit_box(const Tensor& t) {
    for (double v : t.data)
        if (v < -1.0 || v > 1.0) return false;
    return true;
}

}  // namespace

TEST_CASE("classification triple: shapes, clipping, determinism") {
    ClassificationRecipe r;
    DatasetTriple t = make_classification(r, 5);
    CHECK(t.train.features.rows() == r.n_train);
    CHECK(t.train.features.cols() == 8);
    CHECK(t.train.labels.cols() == 3);
    CHECK(in_unit_box(t.train.features));
    CHECK(in_unit_box(t.public_domain.features));
    CHECK(in_unit_box(t.irrelevant.features));
    for (int i = 0; i < t.train.size(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < 3; ++j) sum += t.train.labels.at(i, j);
        CHECK(sum == 1.0);
    }

    DatasetTriple again = make_classification(r, 5);
    CHECK(bitwise_equal(t.train.features, again.train.features));
    CHECK(bitwise_equal(t.irrelevant.features, again.irrelevant.features));
    DatasetTriple other = make_classification(r, 6);
    CHECK_FALSE(bitwise_equal(t.train.features, other.train.features));
}

TEST_CASE("classification: public-domain means sit shift away from train means") {
    ClassificationRecipe r;
    r.n_train = 6000;
    r.n_public = 6000;
    DatasetTriple t = make_classification(r, 9);
    for (int c = 0; c < r.classes; ++c) {
        std::vector<double> mt(r.d_in, 0.0), mp(r.d_in, 0.0);
        int nt = 0, np = 0;
        for (int i = 0; i < t.train.size(); ++i) {
            if (t.train.labels.at(i, c) != 1.0) continue;
            ++nt;
            for (int j = 0; j < r.d_in; ++j) mt[j] += t.train.features.at(i, j);
        }
        for (int i = 0; i < t.public_domain.size(); ++i) {
            if (t.public_domain.labels.at(i, c) != 1.0) continue;
            ++np;
            for (int j = 0; j < r.d_in; ++j) mp[j] += t.public_domain.features.at(i, j);
        }
        double gap2 = 0.0;
        for (int j = 0; j < r.d_in; ++j) {
            const double d = mp[j] / np - mt[j] / nt;
            gap2 += d * d;
        }
        CHECK(std::sqrt(gap2) == doctest::Approx(r.shift).epsilon(0.25));
    }
}

TEST_CASE("train and irrelevant splits are distinguishable") {
    ClassificationRecipe r;
    DatasetTriple t = make_classification(r, 12);
    // two-sample mean gap across all rows, per the distinct-geometry contract
    double gap2 = 0.0;
    for (int j = 0; j < r.d_in; ++j) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < t.train.size(); ++i) a += t.train.features.at(i, j);
        for (int i = 0; i < t.irrelevant.size(); ++i) b += t.irrelevant.features.at(i, j);
        const double d = a / t.train.size() - b / t.irrelevant.size();
        gap2 += d * d;
    }
    CHECK(std::sqrt(gap2) > 0.1);
}

TEST_CASE("regression triple: dose range, width, determinism") {
    RegressionRecipe r;
    DatasetTriple t = make_regression(r, 3);
    CHECK(t.train.features.cols() == 31);
    CHECK(t.train.labels.cols() == 1);
    CHECK(in_unit_box(t.train.features));
    for (const Dataset* d : {&t.train, &t.public_domain, &t.irrelevant})
        for (double y : d->labels.data) {
            CHECK(y > 0.0);
            CHECK(y <= 300.0);
        }
    DatasetTriple again = make_regression(r, 3);
    CHECK(bitwise_equal(t.train.labels, again.train.labels));
}

TEST_CASE("generative triple: box, ring radius, determinism") {
    GenerativeRecipe r;
    r.n_train = 4000;
    DatasetTriple t = make_generative(r, 21);
    CHECK(t.train.features.cols() == 2);
    CHECK(t.train.labels.empty());
    CHECK(in_unit_box(t.train.features));

    double radius = 0.0;
    for (int i = 0; i < t.train.size(); ++i)
        radius += std::hypot(t.train.features.at(i, 0), t.train.features.at(i, 1));
    radius /= t.train.size();
    CHECK(std::fabs(radius - r.radius) / r.radius < 0.05);

    DatasetTriple again = make_generative(r, 21);
    CHECK(bitwise_equal(t.train.features, again.train.features));
}

TEST_CASE("csv loading scales with the affine min-max map") {
    const std::string path = "/tmp/mfp_test_csv.csv";
    {
        std::ofstream os(path);
        os << "a,b,const,y\n";
        os << "0,2,7,10\n";
        os << "5,4,7,20\n";
        os << "10,6,7,30\n";
    }
    CsvScaling scaling;
    Dataset d = load_csv(path, {"a", "b", "const"}, {"y"}, &scaling);
    CHECK(d.features.rows() == 3);
    // min 0 / max 10: value 5 maps to 0
    CHECK(d.features.at(0, 0) == -1.0);
    CHECK(d.features.at(1, 0) == 0.0);
    CHECK(d.features.at(2, 0) == 1.0);
    // constant column maps to 0 everywhere
    for (int i = 0; i < 3; ++i) CHECK(d.features.at(i, 2) == 0.0);
    CHECK(d.labels.at(1, 0) == 20.0);

    // reloading the same file reproduces identical scaling and features
    CsvScaling s2;
    Dataset d2 = load_csv(path, {"a", "b", "const"}, {"y"}, &s2);
    CHECK(bitwise_equal(d.features, d2.features));
    CHECK(scaling.lo == s2.lo);
    CHECK(scaling.hi == s2.hi);

    save_scaling(scaling, path + ".scale");
    CsvScaling s3 = load_scaling(path + ".scale");
    CHECK(s3.lo == scaling.lo);
    CHECK(s3.hi == scaling.hi);
    CHECK(s3.columns == scaling.columns);
    std::remove(path.c_str());
    std::remove((path + ".scale").c_str());
}

TEST_CASE("csv errors carry row and column locations") {
    const std::string path = "/tmp/mfp_test_csv_bad.csv";
    {
        std::ofstream os(path);
        os << "a,b\n1,2\n,4\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(path, {"a"}, {"b"}), doctest::Contains("row 3"), Error);
    CHECK_THROWS_WITH_AS(load_csv(path, {"zzz"}, {}), doctest::Contains("zzz"), Error);
    {
        std::ofstream os(path);
        os << "a,b\n1,2\nx,4\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(path, {"a"}, {"b"}), doctest::Contains("not a number"), Error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_csv("/nonexistent.csv", {"a"}, {}), Error);
}
