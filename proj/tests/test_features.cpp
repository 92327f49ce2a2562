#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "onset/features.hpp"
#include "support/oracles.hpp"

using namespace onset;

namespace {

const FilterBank& default_bank() {
    static FilterBank bank = FilterBank::fixed_random();
    return bank;
}

DiseaseConfig config_by_id(const std::string& id) {
    for (const auto& c : canonical_disease_configs())
        if (c.id == id) return c;
    throw std::runtime_error("unknown id " + id);
}

}  // namespace

TEST_CASE("all-zero volume maps to all-zero features and descriptor", "[features]") {
    AnomalyVolume zero{Grid3<float>({32, 32, 32}, 0.0f), make_mask({32, 32, 32})};
    const FeatureTensor f = default_bank().extract(zero);
    CHECK(f.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(describe(default_bank(), zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature extraction is positively homogeneous", "[features]") {
    const auto vol = synthesize_volume(config_by_id("D1"), 9);
    AnomalyVolume doubled = vol;
    for (float& v : doubled.data.data) v *= 2.0f;
    const FeatureTensor f1 = default_bank().extract(vol);
    const FeatureTensor f2 = default_bank().extract(doubled);
    REQUIRE(f2.values.rows() == f1.values.rows());
    CHECK((f2.values - 2.0 * f1.values).cwiseAbs().maxCoeff() <=
          1e-9 * f1.values.cwiseAbs().maxCoeff());
}

TEST_CASE("frozen feature checksums for a fixed seed volume", "[features]") {
    const auto vol = synthesize_volume(config_by_id("D3"), 123);
    const FeatureTensor f = default_bank().extract(vol);
    REQUIRE(f.n_maps() == 32);
    REQUIRE(f.n_voxels() == 64);
    const double rel = 1e-6;
    CHECK(f.values.sum() == Catch::Approx(2656428.4357464118).epsilon(rel));
    CHECK(f.values(7, 33) == Catch::Approx(2811.5774813070429).epsilon(rel));
    CHECK(f.values(31, 63) == Catch::Approx(1370.6710770683849).epsilon(rel));
    const Eigen::VectorXd d = describe(default_bank(), vol);
    REQUIRE(d.size() == 2048);
    CHECK(d.sum() == Catch::Approx(16925286171530172.0).epsilon(rel));
    CHECK(d[0] == Catch::Approx(949749608006.33423).epsilon(rel));
    CHECK(d[2047] == Catch::Approx(5814125688875.6875).epsilon(rel));
}

TEST_CASE("gram matrix of orthonormal rows is the identity", "[features]") {
    FeatureTensor f;
    f.values = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd m = gram_matrix(f);
    CHECK(m.isApprox(Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("gram matrix matches the hand-computed 2x2 case", "[features]") {
    FeatureTensor f;
    f.values.resize(2, 2);
    f.values << 1, 2, 3, 4;
    const Eigen::MatrixXd m = gram_matrix(f);
    CHECK(m(0, 0) == 5.0);
    CHECK(m(0, 1) == 11.0);
    CHECK(m(1, 0) == 11.0);
    CHECK(m(1, 1) == 25.0);
}

TEST_CASE("gram matrix is exactly symmetric and PSD", "[features]") {
    Rng rng(404);
    FeatureTensor f;
    f.values.resize(12, 40);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = rng.normal();
    const Eigen::MatrixXd m = gram_matrix(f);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    CHECK(m.diagonal().minCoeff() >= 0.0);
}

TEST_CASE("fusing with the identity flattens the features", "[features]") {
    Rng rng(7);
    FeatureTensor f;
    f.values.resize(3, 5);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = rng.uniform();
    const Eigen::VectorXd flat = fuse(Eigen::MatrixXd::Identity(3, 3), f);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) REQUIRE(flat[k++] == f.values(i, j));
}

TEST_CASE("fusion matches the hand-computed 2x2 case", "[features]") {
    FeatureTensor f;
    f.values.resize(2, 2);
    f.values << 1, 2, 3, 4;
    Eigen::MatrixXd m(2, 2);
    m << 5, 11, 11, 25;
    const Eigen::VectorXd fused = fuse(m, f);
    REQUIRE(fused.size() == 4);
    CHECK(fused[0] == 38.0);
    CHECK(fused[1] == 54.0);
    CHECK(fused[2] == 86.0);
    CHECK(fused[3] == 122.0);
}

TEST_CASE("fusing zero features gives a zero descriptor", "[features]") {
    FeatureTensor f;
    f.values = Eigen::MatrixXd::Zero(4, 6);
    CHECK(fuse(gram_matrix(f), f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fuse rejects mismatched dimensions", "[features]") {
    FeatureTensor f;
    f.values = Eigen::MatrixXd::Zero(4, 6);
    CHECK_THROWS_AS(fuse(Eigen::MatrixXd::Zero(3, 3), f), std::invalid_argument);
}

TEST_CASE("describe is deterministic and finite", "[features]") {
    const auto v1 = synthesize_volume(config_by_id("D2"), 55);
    const auto v2 = synthesize_volume(config_by_id("D2"), 55);
    const Eigen::VectorXd d1 = describe(default_bank(), v1);
    const Eigen::VectorXd d2 = describe(default_bank(), v2);
    REQUIRE(d1 == d2);
    CHECK(d1.allFinite());
}

TEST_CASE("descriptors separate D1 from D5 on average", "[features]") {
    constexpr int kPerClass = 50;
    std::vector<Eigen::VectorXd> d1, d5;
    for (int i = 0; i < kPerClass; ++i) {
        d1.push_back(describe(default_bank(), synthesize_volume(config_by_id("D1"), 1000 + i)));
        d5.push_back(describe(default_bank(), synthesize_volume(config_by_id("D5"), 2000 + i)));
    }
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (int i = 0; i < kPerClass; ++i) {
        for (int j = i + 1; j < kPerClass; ++j) {
            intra += (d1[i] - d1[j]).norm() + (d5[i] - d5[j]).norm();
            n_intra += 2;
        }
        for (int j = 0; j < kPerClass; ++j) {
            inter += (d1[i] - d5[j]).norm();
            ++n_inter;
        }
    }
    CHECK(inter / static_cast<double>(n_inter) > intra / static_cast<double>(n_intra));
}

TEST_CASE("mirroring leaves the gram matrix unchanged for symmetric filters", "[features]") {
    const FilterBank bank = FilterBank::averaging({{2, true}, {3, true}});
    const auto vol = synthesize_volume(config_by_id("D1"), 88);
    AnomalyVolume mirrored = vol;
    const Shape3 s = vol.data.shape;
    for (int z = 0; z < s[0]; ++z)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x)
                mirrored.data.at(z, y, x) = vol.data.at(z, y, s[2] - 1 - x);

    const FeatureTensor f = bank.extract(vol);
    const FeatureTensor g = bank.extract(mirrored);
    CHECK((f.values - g.values).cwiseAbs().maxCoeff() > 0.0);  // maps move
    const Eigen::MatrixXd mf = gram_matrix(f);
    const Eigen::MatrixXd mg = gram_matrix(g);
    CHECK((mf - mg).cwiseAbs().maxCoeff() <= 1e-6 * mf.cwiseAbs().maxCoeff());
}

TEST_CASE("padding handles non-multiple shapes and rejects extreme ones", "[features]") {
    Grid3<float> small({12, 16, 16}, 0.0f);
    small.at(6, 8, 8) = 1.0f;
    const FeatureTensor f = default_bank().extract(small);
    CHECK(f.n_maps() == 32);
    CHECK(f.n_voxels() == 2 * 2 * 2);
    CHECK(f.values.allFinite());

    Grid3<float> tiny({3, 8, 8}, 0.0f);
    CHECK_THROWS_AS(default_bank().extract(tiny), std::invalid_argument);
}
