#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace onset {

// (depth, height, width) voxel counts
using Shape3 = std::array<int, 3>;

inline std::size_t voxel_count(const Shape3& s) {
    return static_cast<std::size_t>(s[0]) * static_cast<std::size_t>(s[1]) *
           static_cast<std::size_t>(s[2]);
}

// Dense 3D scalar field, row-major in (z, y, x).
template <typename T>
struct Grid3 {
    Shape3 shape{0, 0, 0};
    std::vector<T> data;

    Grid3() = default;
    explicit Grid3(Shape3 s, T fill = T{}) : shape(s), data(voxel_count(s), fill) {}

    std::size_t index(int z, int y, int x) const {
        return (static_cast<std::size_t>(z) * shape[1] + y) * shape[2] + x;
    }

    T& at(int z, int y, int x) { return data[index(z, y, x)]; }
    const T& at(int z, int y, int x) const { return data[index(z, y, x)]; }

    std::size_t size() const { return data.size(); }
};

// Separable Gaussian blur with zero padding outside the grid. The kernel is
// truncated at 3 sigma and normalized to unit sum.
template <typename T>
Grid3<double> gaussian_blur(const Grid3<T>& in, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be > 0");

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
        norm += kernel[k + radius];
    }
    for (double& w : kernel) w /= norm;

    const Shape3 s = in.shape;
    Grid3<double> cur(s);
    for (std::size_t i = 0; i < in.size(); ++i) cur.data[i] = static_cast<double>(in.data[i]);

    Grid3<double> next(s);
    for (int axis = 0; axis < 3; ++axis) {
        const int extent = s[axis];
        for (int z = 0; z < s[0]; ++z) {
            for (int y = 0; y < s[1]; ++y) {
                for (int x = 0; x < s[2]; ++x) {
                    const int pos = axis == 0 ? z : axis == 1 ? y : x;
                    double acc = 0.0;
                    const int k_lo = std::max(-radius, -pos);
                    const int k_hi = std::min(radius, extent - 1 - pos);
                    for (int k = k_lo; k <= k_hi; ++k) {
                        const int zz = axis == 0 ? z + k : z;
                        const int yy = axis == 1 ? y + k : y;
                        const int xx = axis == 2 ? x + k : x;
                        acc += kernel[k + radius] * cur.at(zz, yy, xx);
                    }
                    next.at(z, y, x) = acc;
                }
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace onset
