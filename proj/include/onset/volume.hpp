#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "onset/errors.hpp"
#include "onset/grid.hpp"
#include "onset/rng.hpp"

namespace onset {

enum class Fragmentation { Low, High };
enum class Location { Random, Front, Back };

inline const char* to_string(Fragmentation f) {
    return f == Fragmentation::Low ? "low" : "high";
}
inline const char* to_string(Location l) {
    switch (l) {
        case Location::Random: return "random";
        case Location::Front: return "front";
        default: return "back";
    }
}

struct DiseaseConfig {
    std::string id;
    Fragmentation fragmentation = Fragmentation::Low;
    Location location = Location::Random;
    double lesion_fraction = 0.05;  // fraction of lung-mask voxels affected
    double intensity_min = 0.3;
    double intensity_max = 1.0;

    void validate() const {
        if (id.empty()) throw ConfigError("disease config requires an id");
        if (!(lesion_fraction > 0.0 && lesion_fraction < 1.0))
            throw ConfigError("disease " + id + ": lesion_fraction must be in (0,1)");
        if (!(intensity_min >= 0.0 && intensity_max > intensity_min))
            throw ConfigError("disease " + id + ": invalid intensity range");
    }
};

// The five canonical configurations: a grid over fragmentation {low, high}
// and location {random, front, back}, with D5 playing the novel disease.
inline std::vector<DiseaseConfig> canonical_disease_configs() {
    std::vector<DiseaseConfig> configs(5);
    configs[0] = {"D1", Fragmentation::Low, Location::Random, 0.05, 0.3, 1.0};
    configs[1] = {"D2", Fragmentation::Low, Location::Front, 0.05, 0.3, 1.0};
    configs[2] = {"D3", Fragmentation::High, Location::Front, 0.05, 0.3, 1.0};
    configs[3] = {"D4", Fragmentation::High, Location::Back, 0.05, 0.3, 1.0};
    configs[4] = {"D5", Fragmentation::Low, Location::Back, 0.05, 0.3, 1.0};
    return configs;
}

struct AnomalyVolume {
    Grid3<float> data;          // anomaly magnitude, >= 0, zero outside mask
    Grid3<std::uint8_t> mask;   // lung-region stand-in
};

constexpr Shape3 kDefaultVolumeShape{32, 32, 32};

// Centered ellipsoid with semi-axes 0.45 * dim; occupies ~0.38-0.41 of the
// volume for all dims >= 8. Deterministic for a given shape.
inline Grid3<std::uint8_t> make_mask(const Shape3& shape) {
    for (int d : shape) {
        if (d < 8) throw std::invalid_argument("make_mask: all dims must be >= 8");
    }
    Grid3<std::uint8_t> mask(shape, 0);
    const double cz = 0.5 * (shape[0] - 1);
    const double cy = 0.5 * (shape[1] - 1);
    const double cx = 0.5 * (shape[2] - 1);
    const double az = 0.45 * shape[0];
    const double ay = 0.45 * shape[1];
    const double ax = 0.45 * shape[2];
    for (int z = 0; z < shape[0]; ++z) {
        for (int y = 0; y < shape[1]; ++y) {
            for (int x = 0; x < shape[2]; ++x) {
                const double uz = (z - cz) / az;
                const double uy = (y - cy) / ay;
                const double ux = (x - cx) / ax;
                if (uz * uz + uy * uy + ux * ux <= 1.0) mask.at(z, y, x) = 1;
            }
        }
    }
    return mask;
}

namespace detail {

// Blur widths controlling lesion fragmentation: a wide kernel merges the
// thresholded noise into a few blobs, a narrow one leaves many specks.
constexpr double kSigmaLowFragmentation = 5.0;
constexpr double kSigmaHighFragmentation = 0.8;

// Front = strictly anterior of the mask bounding-box midplane along axis 0,
// Back = strictly posterior. With an even bounding box the midplane falls
// between slices and the split is exact.
inline std::pair<double, double> mask_axis0_bounds(const Grid3<std::uint8_t>& mask) {
    int lo = mask.shape[0], hi = -1;
    for (int z = 0; z < mask.shape[0]; ++z) {
        bool any = false;
        for (int y = 0; y < mask.shape[1] && !any; ++y)
            for (int x = 0; x < mask.shape[2] && !any; ++x)
                if (mask.at(z, y, x)) any = true;
        if (any) {
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
    }
    return {static_cast<double>(lo), static_cast<double>(hi)};
}

inline bool in_location_region(Location loc, int z, double split) {
    switch (loc) {
        case Location::Random: return true;
        case Location::Front: return static_cast<double>(z) < split;
        default: return static_cast<double>(z) > split;
    }
}

}  // namespace detail

// Synthesizes one anomaly volume: seeded white noise, Gaussian blur with a
// fragmentation-dependent width, then quantile thresholding inside the
// allowed region so that exactly round(lesion_fraction * mask voxels) voxels
// light up. Lesion intensities are uniform draws from the config range.
// Pure function of (config, shape, seed).
inline AnomalyVolume synthesize_volume(const DiseaseConfig& config, const Shape3& shape,
                                       std::uint64_t seed) {
    config.validate();
    Grid3<std::uint8_t> mask = make_mask(shape);

    const auto [lo, hi] = detail::mask_axis0_bounds(mask);
    const double split = 0.5 * (lo + hi);

    std::size_t n_mask = 0;
    std::vector<std::size_t> region;
    region.reserve(mask.size() / 2);
    for (int z = 0; z < shape[0]; ++z) {
        for (int y = 0; y < shape[1]; ++y) {
            for (int x = 0; x < shape[2]; ++x) {
                if (!mask.at(z, y, x)) continue;
                ++n_mask;
                if (detail::in_location_region(config.location, z, split))
                    region.push_back(mask.index(z, y, x));
            }
        }
    }

    const auto target = static_cast<std::size_t>(
        std::llround(config.lesion_fraction * static_cast<double>(n_mask)));
    if (target == 0)
        throw ConfigError("disease " + config.id + ": lesion_fraction too small for this volume");
    const double realized = static_cast<double>(target) / static_cast<double>(n_mask);
    if (std::abs(realized - config.lesion_fraction) > 0.25 * config.lesion_fraction)
        throw ConfigError("disease " + config.id + ": volume too coarse for lesion_fraction");
    if (target > region.size())
        throw ConfigError("disease " + config.id + ": lesion_fraction exceeds the " +
                          std::string(to_string(config.location)) + " region");

    Rng rng(seed);
    Grid3<double> noise(shape);
    for (double& v : noise.data) v = rng.normal();

    const double sigma = config.fragmentation == Fragmentation::Low
                             ? detail::kSigmaLowFragmentation
                             : detail::kSigmaHighFragmentation;
    Grid3<double> field = gaussian_blur(noise, sigma);

    // top-k by field value; index breaks (never observed) ties so the
    // selected set is a total-order prefix
    std::vector<std::size_t> order = region;
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target - 1),
                     order.end(), [&field](std::size_t a, std::size_t b) {
                         if (field.data[a] != field.data[b]) return field.data[a] > field.data[b];
                         return a < b;
                     });
    order.resize(target);
    std::sort(order.begin(), order.end());

    AnomalyVolume volume{Grid3<float>(shape, 0.0f), std::move(mask)};
    for (std::size_t idx : order) {
        volume.data.data[idx] =
            static_cast<float>(rng.uniform(config.intensity_min, config.intensity_max));
    }
    return volume;
}

inline AnomalyVolume synthesize_volume(const DiseaseConfig& config, std::uint64_t seed) {
    return synthesize_volume(config, kDefaultVolumeShape, seed);
}

}  // namespace onset
