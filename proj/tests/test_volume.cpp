#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "onset/volume.hpp"
#include "support/oracles.hpp"

using namespace onset;

namespace {

DiseaseConfig config_by_id(const std::string& id) {
    for (const auto& c : canonical_disease_configs())
        if (c.id == id) return c;
    throw std::runtime_error("unknown id " + id);
}

double mask_fraction(const Grid3<std::uint8_t>& mask) {
    std::size_t on = 0;
    for (auto v : mask.data) on += v;
    return static_cast<double>(on) / static_cast<double>(mask.size());
}

}  // namespace

TEST_CASE("canonical configs reproduce the fragmentation/location grid", "[volume]") {
    const auto configs = canonical_disease_configs();
    REQUIRE(configs.size() == 5);
    CHECK(configs[0].id == "D1");
    CHECK(configs[0].fragmentation == Fragmentation::Low);
    CHECK(configs[0].location == Location::Random);
    CHECK(configs[1].fragmentation == Fragmentation::Low);
    CHECK(configs[1].location == Location::Front);
    CHECK(configs[2].fragmentation == Fragmentation::High);
    CHECK(configs[2].location == Location::Front);
    CHECK(configs[3].fragmentation == Fragmentation::High);
    CHECK(configs[3].location == Location::Back);
    CHECK(configs[4].id == "D5");
    CHECK(configs[4].fragmentation == Fragmentation::Low);
    CHECK(configs[4].location == Location::Back);
    for (const auto& c : configs) {
        CHECK(c.lesion_fraction > 0.0);
        CHECK(c.lesion_fraction < 1.0);
        REQUIRE_NOTHROW(c.validate());
    }
}

TEST_CASE("mask occupies 30-60% at the smallest allowed shape", "[volume]") {
    const auto mask = make_mask({8, 8, 8});
    const double frac = mask_fraction(mask);
    CHECK(frac >= 0.30);
    CHECK(frac <= 0.60);

    // independent recount via the analytic inclusion test
    int count = 0;
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                const double uz = (z - 3.5) / 3.6, uy = (y - 3.5) / 3.6, ux = (x - 3.5) / 3.6;
                if (uz * uz + uy * uy + ux * ux <= 1.0) ++count;
            }
    CHECK(static_cast<double>(count) / 512.0 == Catch::Approx(frac));
}

TEST_CASE("mask is symmetric under x-mirror", "[volume]") {
    const auto mask = make_mask({16, 16, 16});
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                REQUIRE(mask.at(z, y, x) == mask.at(z, y, 15 - x));
}

TEST_CASE("mask rejects dims below 8", "[volume]") {
    CHECK_THROWS_AS(make_mask({4, 8, 8}), std::invalid_argument);
    CHECK_THROWS_AS(make_mask({8, 8, 7}), std::invalid_argument);
}

TEST_CASE("mask fraction stays in range across shapes", "[volume]") {
    for (const Shape3 s : {Shape3{8, 16, 32}, Shape3{32, 32, 32}, Shape3{16, 16, 16},
                           Shape3{9, 9, 9}, Shape3{24, 40, 8}}) {
        const double frac = mask_fraction(make_mask(s));
        INFO("shape " << s[0] << "x" << s[1] << "x" << s[2]);
        CHECK(frac >= 0.30);
        CHECK(frac <= 0.60);
    }
}

TEST_CASE("front config confines lesions to the anterior half", "[volume]") {
    const auto volume = synthesize_volume(config_by_id("D2"), 17);
    const auto [lo, hi] = detail::mask_axis0_bounds(volume.mask);
    const double split = 0.5 * (lo + hi);
    for (int z = 0; z < volume.data.shape[0]; ++z)
        for (int y = 0; y < volume.data.shape[1]; ++y)
            for (int x = 0; x < volume.data.shape[2]; ++x)
                if (volume.data.at(z, y, x) != 0.0f) REQUIRE(static_cast<double>(z) < split);
}

TEST_CASE("back config confines lesions to the posterior half", "[volume]") {
    const auto volume = synthesize_volume(config_by_id("D5"), 23);
    const auto [lo, hi] = detail::mask_axis0_bounds(volume.mask);
    const double split = 0.5 * (lo + hi);
    for (int z = 0; z < volume.data.shape[0]; ++z)
        for (int y = 0; y < volume.data.shape[1]; ++y)
            for (int x = 0; x < volume.data.shape[2]; ++x)
                if (volume.data.at(z, y, x) != 0.0f) REQUIRE(static_cast<double>(z) > split);
}

TEST_CASE("high fragmentation yields at least 15 components", "[volume]") {
    for (std::uint64_t seed : {1ull, 99ull, 4242ull}) {
        const auto volume = synthesize_volume(config_by_id("D3"), seed);
        CHECK(oracles::connected_components_26(volume.data) >= 15);
    }
}

TEST_CASE("fragmentation regimes do not overlap over 50 seeds", "[volume]") {
    int max_low = 0;
    int min_high = std::numeric_limits<int>::max();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto low = synthesize_volume(config_by_id("D1"), seed);
        const auto high = synthesize_volume(config_by_id("D4"), seed);
        max_low = std::max(max_low, oracles::connected_components_26(low.data));
        min_high = std::min(min_high, oracles::connected_components_26(high.data));
    }
    INFO("max(Low)=" << max_low << " min(High)=" << min_high);
    CHECK(max_low <= 5);
    CHECK(min_high >= 15);
    CHECK(max_low < min_high);
}

TEST_CASE("synthesis is deterministic in (config, seed)", "[volume]") {
    const auto a = synthesize_volume(config_by_id("D3"), 77);
    const auto b = synthesize_volume(config_by_id("D3"), 77);
    REQUIRE(a.data.data == b.data.data);
    REQUIRE(a.mask.data == b.mask.data);
    const auto c = synthesize_volume(config_by_id("D3"), 78);
    REQUIRE(a.data.data != c.data.data);
}

TEST_CASE("anomaly values vanish outside the mask", "[volume]") {
    for (const auto& config : canonical_disease_configs()) {
        const auto volume = synthesize_volume(config, 5);
        double outside = 0.0;
        for (std::size_t i = 0; i < volume.data.size(); ++i)
            if (!volume.mask.data[i]) outside += volume.data.data[i];
        REQUIRE(outside == 0.0);
    }
}

TEST_CASE("realized lesion fraction tracks the config", "[volume]") {
    for (const auto& config : canonical_disease_configs()) {
        const auto volume = synthesize_volume(config, 11);
        std::size_t lesion = 0, mask = 0;
        for (std::size_t i = 0; i < volume.data.size(); ++i) {
            if (volume.mask.data[i]) ++mask;
            if (volume.data.data[i] != 0.0f) ++lesion;
        }
        const double realized = static_cast<double>(lesion) / static_cast<double>(mask);
        CHECK(std::abs(realized - config.lesion_fraction) <= 0.25 * config.lesion_fraction);
    }
}

TEST_CASE("lesion intensities stay inside the configured range", "[volume]") {
    const auto config = config_by_id("D1");
    const auto volume = synthesize_volume(config, 3);
    for (float v : volume.data.data) {
        if (v == 0.0f) continue;
        CHECK(v >= config.intensity_min);
        CHECK(v <= config.intensity_max);
    }
}

TEST_CASE("invalid disease configs are rejected", "[volume]") {
    DiseaseConfig bad = config_by_id("D1");
    bad.lesion_fraction = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config_by_id("D1");
    bad.lesion_fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config_by_id("D1");
    bad.intensity_max = bad.intensity_min;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config_by_id("D1");
    bad.lesion_fraction = 1e-6;  // rounds to zero lesion voxels at 32^3
    CHECK_THROWS_AS(synthesize_volume(bad, 1), ConfigError);
}
