#include <catch2/catch_amalgamated.hpp>

#include "onset/pca.hpp"
#include "onset/rng.hpp"

using namespace onset;

TEST_CASE("data on a line reconstructs exactly with one component", "[pca]") {
    Rng rng(1);
    Eigen::MatrixXd data(40, 2);
    for (int i = 0; i < 40; ++i) {
        const double t = rng.uniform(-3.0, 3.0);
        data(i, 0) = 2.0 * t + 1.0;
        data(i, 1) = -0.5 * t + 4.0;
    }
    const Pca pca = Pca::fit(data, 1);
    CHECK(pca.mean_squared_residual(data) < 1e-20);
}

TEST_CASE("explained variance of an isotropic Gaussian is about k/D", "[pca]") {
    constexpr int kDim = 8;
    constexpr int kSamples = 10000;
    Rng rng(2);
    Eigen::MatrixXd data(kSamples, kDim);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal();
    const Pca pca = Pca::fit(data, 3);
    const double explained = pca.retained_variance(3) / pca.total_variance;
    CHECK(explained == Catch::Approx(3.0 / kDim).margin(0.02));
}

TEST_CASE("full-rank projection preserves pairwise distances", "[pca]") {
    Rng rng(3);
    Eigen::MatrixXd data(30, 6);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal();
    const Pca pca = Pca::fit(data, 6);
    const Eigen::MatrixXd embedded = pca.transform(data);
    for (int i = 0; i < data.rows(); ++i)
        for (int j = i + 1; j < data.rows(); ++j) {
            const double original = (data.row(i) - data.row(j)).norm();
            const double projected = (embedded.row(i) - embedded.row(j)).norm();
            REQUIRE(projected == Catch::Approx(original).margin(1e-8));
        }
}

TEST_CASE("reconstruction error equals the sum of discarded eigenvalues", "[pca]") {
    Rng rng(4);
    Eigen::MatrixXd data(200, 10);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal() * (1.0 + i % 7);
    for (Eigen::Index k : {1, 3, 7}) {
        const Pca pca = Pca::fit(data, k);
        const double discarded = pca.total_variance - pca.retained_variance(k);
        CHECK(pca.mean_squared_residual(data) == Catch::Approx(discarded).epsilon(1e-6));
    }
}

TEST_CASE("dual-form fit matches the covariance form", "[pca]") {
    // more dimensions than samples exercises the inner-product path
    Rng rng(5);
    Eigen::MatrixXd wide(12, 50);
    for (Eigen::Index i = 0; i < wide.size(); ++i) wide.data()[i] = rng.normal();
    const Pca pca = Pca::fit(wide, 4);
    const double discarded = pca.total_variance - pca.retained_variance(4);
    CHECK(pca.mean_squared_residual(wide) == Catch::Approx(discarded).epsilon(1e-6));
    // components orthonormal where nonzero
    const Eigen::MatrixXd gram = pca.components.transpose() * pca.components;
    CHECK(gram.isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-9));
}

TEST_CASE("rank-deficient data zero-pads extra components", "[pca]") {
    Eigen::MatrixXd data(5, 3);
    data << 1, 2, 3, 2, 4, 6, 3, 6, 9, 4, 8, 12, 0, 0, 0;  // all rows on one line
    const Pca pca = Pca::fit(data, 3);
    CHECK(pca.components.col(1).norm() == Catch::Approx(0.0).margin(1e-9));
    CHECK(pca.components.col(2).norm() == Catch::Approx(0.0).margin(1e-9));
    const Eigen::MatrixXd embedded = pca.transform(data);
    CHECK(embedded.col(1).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("pca_reduce enforces the minimum row count", "[pca]") {
    Eigen::MatrixXd data = Eigen::MatrixXd::Random(4, 6);
    CHECK_THROWS_AS(pca_reduce(data, 4), std::invalid_argument);
    CHECK(pca_reduce(data, 3).cols() == 3);
}
