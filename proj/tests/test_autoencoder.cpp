#include <catch2/catch_amalgamated.hpp>

#include "onset/autoencoder.hpp"
#include "onset/pca.hpp"

using namespace onset;

namespace {

AutoencoderSpec toy_spec(int input_dim, std::vector<int> enc, std::vector<int> dec,
                         double lr, int epochs, int batch = 16) {
    AutoencoderSpec spec;
    spec.encoder_widths = std::move(enc);
    spec.decoder_widths = std::move(dec);
    spec.decoder_widths.push_back(input_dim);
    spec.learning_rate = lr;
    spec.epochs = epochs;
    spec.batch_size = batch;
    return spec;
}

}  // namespace

TEST_CASE("constant dataset is memorized within 100 epochs", "[autoencoder]") {
    Eigen::MatrixXd data(32, 6);
    Eigen::VectorXd row(6);
    row << 0.2, 0.8, 0.5, 0.1, 0.9, 0.4;
    data.rowwise() = row.transpose();
    const auto model =
        Autoencoder::train(data, toy_spec(6, {4, 2}, {4}, 2.0, 100, 8), 42);
    CHECK(model.final_loss() < 1e-5);
    CHECK(model.final_loss() < model.initial_loss());
}

TEST_CASE("training is deterministic per seed", "[autoencoder]") {
    Eigen::MatrixXd data = (Eigen::MatrixXd::Random(50, 8).array() + 1.0) / 2.0;
    const auto spec = toy_spec(8, {5, 3}, {5}, 0.2, 20, 8);
    const auto a = Autoencoder::train(data, spec, 7);
    const auto b = Autoencoder::train(data, spec, 7);
    REQUIRE(a.weights().size() == b.weights().size());
    for (std::size_t l = 0; l < a.weights().size(); ++l) {
        REQUIRE(a.weights()[l] == b.weights()[l]);
        REQUIRE(a.biases()[l] == b.biases()[l]);
    }
    const auto c = Autoencoder::train(data, spec, 8);
    CHECK(a.weights()[0] != c.weights()[0]);
}

TEST_CASE("loss stays finite and does not regress overall", "[autoencoder]") {
    Eigen::MatrixXd data = (Eigen::MatrixXd::Random(60, 10).array() + 1.0) / 2.0;
    const auto model = Autoencoder::train(data, toy_spec(10, {6, 3}, {6}, 0.1, 50, 10), 3);
    for (double loss : model.loss_history()) REQUIRE(std::isfinite(loss));
    CHECK(model.final_loss() <= model.initial_loss());
}

TEST_CASE("near-rank-2 data reaches twice the PCA(2) floor", "[autoencoder]") {
    // rank-2 signal plus small noise, nonnegative plane coordinates so the
    // rectified bottleneck has a natural exact solution
    Rng rng(11);
    constexpr int kDim = 16;
    constexpr int kSamples = 240;
    Eigen::VectorXd dir1(kDim), dir2(kDim);
    for (int i = 0; i < kDim; ++i) {
        dir1[i] = std::abs(rng.normal());
        dir2[i] = std::abs(rng.normal());
    }
    dir1.normalize();
    dir2.normalize();
    Eigen::MatrixXd data(kSamples, kDim);
    for (int i = 0; i < kSamples; ++i) {
        const double a = rng.uniform(0.15, 0.85);
        const double b = rng.uniform(0.15, 0.85);
        for (int j = 0; j < kDim; ++j)
            data(i, j) = a * dir1[j] + b * dir2[j] + 0.01 * rng.normal();
    }
    data = data.cwiseMax(0.0).cwiseMin(1.0);

    const Pca pca = Pca::fit(data, 2);
    const double pca_mse = pca.reconstruction_mse(data);
    const auto model = Autoencoder::train(data, toy_spec(16, {8, 2}, {8}, 16.0, 2000, 16), 21);
    INFO("AE mse " << model.mse(data) << " vs PCA mse " << pca_mse);
    CHECK(model.mse(data) <= 2.0 * pca_mse);
}

TEST_CASE("encode is deterministic, finite, and dimension-checked", "[autoencoder]") {
    Eigen::MatrixXd data = (Eigen::MatrixXd::Random(40, 8).array() + 1.0) / 2.0;
    const auto model = Autoencoder::train(data, toy_spec(8, {5, 3}, {5}, 0.2, 10, 8), 1);
    const Eigen::VectorXd x = data.row(0).transpose();
    REQUIRE(model.encode(x) == model.encode(x));
    REQUIRE(model.encode(x).size() == 3);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
    CHECK(model.encode(zero).allFinite());
    CHECK_THROWS_AS(model.encode(Eigen::VectorXd::Zero(9)), std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences", "[autoencoder]") {
    // 2-layer toy instance: 5 -> 3 -> 5
    AutoencoderSpec spec;
    spec.encoder_widths = {3};
    spec.decoder_widths = {5};
    Autoencoder model(spec, 5, 99);
    Eigen::MatrixXd data = (Eigen::MatrixXd::Random(12, 5).array() + 1.0) / 2.0;

    const auto grads = model.gradients(data);
    Rng pick(123);
    int checked = 0;
    double worst = 0.0;
    while (checked < 100) {
        const auto layer = static_cast<std::size_t>(pick.next_below(model.weights().size()));
        auto& w = model.weights()[layer];
        const auto idx = static_cast<Eigen::Index>(pick.next_below(
            static_cast<std::uint64_t>(w.size())));
        const double original = w.data()[idx];
        const double h = 1e-5;
        w.data()[idx] = original + h;
        const double up = model.mse(data);
        w.data()[idx] = original - h;
        const double down = model.mse(data);
        w.data()[idx] = original;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = grads.weights[layer].data()[idx];
        if (std::abs(numeric) < 1e-10 && std::abs(analytic) < 1e-10) continue;  // dead unit
        const double rel = std::abs(numeric - analytic) /
                           std::max({std::abs(numeric), std::abs(analytic), 1e-10});
        worst = std::max(worst, rel);
        ++checked;
    }
    INFO("worst relative disagreement " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("non-finite loss raises a numeric error", "[autoencoder]") {
    // The sigmoid output bounds the loss for in-range data, so the divergence
    // guard fires when the loss turns NaN, e.g. from corrupt input.
    Eigen::MatrixXd data = (Eigen::MatrixXd::Random(40, 8).array() + 1.0) / 2.0;
    data(3, 4) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Autoencoder::train(data, toy_spec(8, {5, 3}, {5}, 0.1, 5, 8), 1),
                    NumericError);
}

TEST_CASE("spec validation rejects malformed architectures", "[autoencoder]") {
    Eigen::MatrixXd data = (Eigen::MatrixXd::Random(10, 8).array() + 1.0) / 2.0;
    auto bad = toy_spec(8, {5, 3}, {5}, 0.1, 5, 4);
    bad.decoder_widths.back() = 7;  // decoder must end in the input dim
    CHECK_THROWS_AS(Autoencoder::train(data, bad, 1), ConfigError);
    bad = toy_spec(8, {5, 0}, {5}, 0.1, 5, 4);
    CHECK_THROWS_AS(Autoencoder::train(data, bad, 1), ConfigError);
    bad = toy_spec(8, {5, 3}, {5}, -0.1, 5, 4);
    CHECK_THROWS_AS(Autoencoder::train(data, bad, 1), ConfigError);
}

TEST_CASE("min-max scaler maps to [0,1] and zeroes constant dimensions", "[autoencoder]") {
    Eigen::MatrixXd rows(4, 3);
    rows << 1.0, 5.0, 2.0, 3.0, 5.0, 4.0, 2.0, 5.0, 8.0, 0.0, 5.0, 6.0;
    const auto scaler = MinMaxScaler::fit(rows);
    const Eigen::MatrixXd scaled = scaler.transform(rows);
    CHECK(scaled.minCoeff() >= 0.0);
    CHECK(scaled.maxCoeff() <= 1.0);
    CHECK(scaled.col(1).cwiseAbs().maxCoeff() == 0.0);  // constant dim
    CHECK(scaled.col(0).maxCoeff() == 1.0);
    const Eigen::VectorXd one = scaler.transform(Eigen::VectorXd(rows.row(2).transpose()));
    CHECK(one[2] == Catch::Approx((8.0 - 2.0) / 6.0));
}
