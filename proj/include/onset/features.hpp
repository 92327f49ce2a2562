#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onset/errors.hpp"
#include "onset/grid.hpp"
#include "onset/rng.hpp"
#include "onset/volume.hpp"

namespace onset {

// Vectorized feature maps of the last filter-bank layer: row i is map i
// flattened in (z, y, x) order.
struct FeatureTensor {
    Eigen::MatrixXd values;  // n_maps x n_voxels

    Eigen::Index n_maps() const { return values.rows(); }
    Eigen::Index n_voxels() const { return values.cols(); }
};

struct ConvLayerSpec {
    int n_filters = 8;
    bool pool = true;  // 2x average pooling after the rectifier
};

constexpr std::uint64_t kDefaultFilterBankSeed = 0x0F17BA2C9D4E6581ULL;

// A fixed five-layer 3D convolutional stack: 3x3x3 kernels, stride 1, zero
// padding, no biases, rectifier nonlinearity, optional 2x average pooling.
// Weights are generated once from a seed, so the bank is a pure value and
// applying it is thread-safe.
class FilterBank {
public:
    // layer weights indexed [out][in][dz][dy][dx], flattened
    struct Layer {
        int n_in = 1;
        int n_out = 1;
        bool pool = false;
        std::vector<double> weights;  // n_out * n_in * 27

        double weight(int out, int in, int tap) const {
            return weights[(static_cast<std::size_t>(out) * n_in + in) * 27 + tap];
        }
    };

    FilterBank() = default;
    explicit FilterBank(std::vector<Layer> layers) : layers_(std::move(layers)) {}

    // Default bank: {8,16,16,32,32} filters, pooling at layers 1-3 only so a
    // 32^3 input keeps a 4^3 spatial extent at the last layer. Weights are
    // unit-variance normal draws from the given seed.
    static FilterBank fixed_random(std::uint64_t seed = kDefaultFilterBankSeed) {
        const std::vector<ConvLayerSpec> specs{{8, true},   {16, true}, {16, true},
                                               {32, false}, {32, false}};
        Rng rng(seed);
        std::vector<Layer> layers;
        int n_in = 1;
        for (const auto& spec : specs) {
            Layer layer;
            layer.n_in = n_in;
            layer.n_out = spec.n_filters;
            layer.pool = spec.pool;
            layer.weights.resize(static_cast<std::size_t>(spec.n_filters) * n_in * 27);
            for (double& w : layer.weights) w = rng.normal();
            layers.push_back(std::move(layer));
            n_in = spec.n_filters;
        }
        return FilterBank(std::move(layers));
    }

    // Test bank whose filters are scaled 3x3x3 box kernels; mirror-symmetric
    // by construction.
    static FilterBank averaging(const std::vector<ConvLayerSpec>& specs) {
        std::vector<Layer> layers;
        int n_in = 1;
        for (const auto& spec : specs) {
            Layer layer;
            layer.n_in = n_in;
            layer.n_out = spec.n_filters;
            layer.pool = spec.pool;
            layer.weights.resize(static_cast<std::size_t>(spec.n_filters) * n_in * 27);
            for (int out = 0; out < spec.n_filters; ++out) {
                const double scale = (1.0 + out) / 27.0;
                for (int in = 0; in < n_in; ++in)
                    for (int tap = 0; tap < 27; ++tap)
                        layer.weights[(static_cast<std::size_t>(out) * n_in + in) * 27 + tap] =
                            scale;
            }
            layers.push_back(std::move(layer));
            n_in = spec.n_filters;
        }
        return FilterBank(std::move(layers));
    }

    const std::vector<Layer>& layers() const { return layers_; }

    int pool_count() const {
        int n = 0;
        for (const auto& l : layers_) n += l.pool ? 1 : 0;
        return n;
    }

    int n_output_maps() const { return layers_.back().n_out; }

    // spatial size of the last layer for a given input, after padding
    Eigen::Index output_voxels(const Shape3& input_shape) const {
        const int multiple = 1 << pool_count();
        Eigen::Index voxels = 1;
        for (int dim : input_shape) {
            const int padded = ((dim + multiple - 1) / multiple) * multiple;
            voxels *= padded >> pool_count();
        }
        return voxels;
    }

    Eigen::Index descriptor_length(const Shape3& input_shape) const {
        return n_output_maps() * output_voxels(input_shape);
    }

    FeatureTensor extract(const Grid3<float>& volume) const;
    FeatureTensor extract(const AnomalyVolume& volume) const { return extract(volume.data); }

private:
    std::vector<Layer> layers_;
};

namespace detail {

// One channel of spatial data during bank evaluation.
using Channel = Grid3<double>;

inline std::vector<Channel> conv_relu(const std::vector<Channel>& in,
                                      const FilterBank::Layer& layer) {
    const Shape3 s = in.front().shape;
    std::vector<Channel> out(layer.n_out, Channel(s));
    for (int o = 0; o < layer.n_out; ++o) {
        Channel& dst = out[o];
        for (int c = 0; c < layer.n_in; ++c) {
            const Channel& src = in[c];
            const double* w = &layer.weights[(static_cast<std::size_t>(o) * layer.n_in + c) * 27];
            for (int z = 0; z < s[0]; ++z) {
                for (int y = 0; y < s[1]; ++y) {
                    for (int x = 0; x < s[2]; ++x) {
                        double acc = 0.0;
                        int tap = 0;
                        for (int dz = -1; dz <= 1; ++dz) {
                            const int zz = z + dz;
                            for (int dy = -1; dy <= 1; ++dy) {
                                const int yy = y + dy;
                                for (int dx = -1; dx <= 1; ++dx, ++tap) {
                                    const int xx = x + dx;
                                    if (zz < 0 || yy < 0 || xx < 0 || zz >= s[0] || yy >= s[1] ||
                                        xx >= s[2])
                                        continue;
                                    acc += w[tap] * src.at(zz, yy, xx);
                                }
                            }
                        }
                        dst.at(z, y, x) += acc;
                    }
                }
            }
        }
        for (double& v : dst.data) v = v > 0.0 ? v : 0.0;  // rectifier
    }
    return out;
}

inline Channel average_pool2(const Channel& in) {
    const Shape3 s = in.shape;
    const Shape3 half{s[0] / 2, s[1] / 2, s[2] / 2};
    Channel out(half);
    for (int z = 0; z < half[0]; ++z)
        for (int y = 0; y < half[1]; ++y)
            for (int x = 0; x < half[2]; ++x) {
                double acc = 0.0;
                for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            acc += in.at(2 * z + dz, 2 * y + dy, 2 * x + dx);
                out.at(z, y, x) = acc / 8.0;
            }
    return out;
}

}  // namespace detail

inline FeatureTensor FilterBank::extract(const Grid3<float>& volume) const {
    if (layers_.empty()) throw std::invalid_argument("FilterBank has no layers");

    // pad with zeros to a multiple of 2^pool_count along every axis
    const int multiple = 1 << pool_count();
    Shape3 padded{};
    for (int axis = 0; axis < 3; ++axis) {
        const int dim = volume.shape[axis];
        if (dim < 1) throw std::invalid_argument("FilterBank::extract: empty volume");
        padded[axis] = ((dim + multiple - 1) / multiple) * multiple;
        if (padded[axis] > 2 * dim)
            throw std::invalid_argument("FilterBank::extract: padding would exceed 2x input size");
    }

    detail::Channel input(padded);
    for (int z = 0; z < volume.shape[0]; ++z)
        for (int y = 0; y < volume.shape[1]; ++y)
            for (int x = 0; x < volume.shape[2]; ++x)
                input.at(z, y, x) = static_cast<double>(volume.at(z, y, x));

    std::vector<detail::Channel> channels{std::move(input)};
    for (const auto& layer : layers_) {
        if (layer.n_in != static_cast<int>(channels.size()))
            throw std::invalid_argument("FilterBank layer width mismatch");
        channels = detail::conv_relu(channels, layer);
        if (layer.pool)
            for (auto& ch : channels) ch = detail::average_pool2(ch);
    }

    FeatureTensor features;
    const auto n_voxels = static_cast<Eigen::Index>(channels.front().size());
    features.values.resize(static_cast<Eigen::Index>(channels.size()), n_voxels);
    for (std::size_t m = 0; m < channels.size(); ++m)
        for (Eigen::Index v = 0; v < n_voxels; ++v)
            features.values(static_cast<Eigen::Index>(m), v) = channels[m].data[v];
    return features;
}

// Inner products between all vectorized feature maps; symmetric PSD by
// construction (rank update + mirror of the lower triangle).
inline Eigen::MatrixXd gram_matrix(const FeatureTensor& features) {
    if (!features.values.allFinite())
        throw std::invalid_argument("gram_matrix: non-finite features");
    const Eigen::Index n = features.n_maps();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(features.values);
    gram.triangularView<Eigen::StrictlyUpper>() =
        gram.triangularView<Eigen::StrictlyLower>().transpose();
    return gram;
}

// Row-major flattening of gram * features: local spatial maps reweighted by
// global co-occurrence statistics.
inline Eigen::VectorXd fuse(const Eigen::MatrixXd& gram, const FeatureTensor& features) {
    if (gram.rows() != gram.cols() || gram.rows() != features.n_maps())
        throw std::invalid_argument("fuse: gram/features dimension mismatch");
    const Eigen::MatrixXd product = gram * features.values;
    Eigen::VectorXd flat(product.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < product.rows(); ++i)
        for (Eigen::Index j = 0; j < product.cols(); ++j) flat[k++] = product(i, j);
    return flat;
}

// Full per-case descriptor pipeline.
inline Eigen::VectorXd describe(const FilterBank& bank, const AnomalyVolume& volume) {
    const FeatureTensor features = bank.extract(volume);
    return fuse(gram_matrix(features), features);
}

}  // namespace onset
