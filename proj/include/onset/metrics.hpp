#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onset/features.hpp"
#include "onset/pca.hpp"
#include "onset/volume.hpp"

namespace onset {

struct DegenerateClassError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct LabeledEmbeddings {
    Eigen::MatrixXd vectors;          // n x d
    std::vector<std::string> labels;  // n entries
};

// Mean silhouette value: per sample, (b - a) / max(a, b) with a the mean
// intra-class distance (excluding self) and b the smallest mean distance to
// any other class. Requires >= 2 classes with >= 2 members each.
inline double silhouette(const LabeledEmbeddings& set) {
    const auto n = static_cast<std::size_t>(set.vectors.rows());
    if (set.labels.size() != n)
        throw std::invalid_argument("silhouette: label/vector count mismatch");
    if (!set.vectors.allFinite()) throw std::invalid_argument("silhouette: non-finite vectors");

    std::map<std::string, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < n; ++i) classes[set.labels[i]].push_back(i);
    if (classes.size() < 2) throw DegenerateClassError("silhouette: need at least 2 classes");
    for (const auto& [label, members] : classes)
        if (members.size() < 2)
            throw DegenerateClassError("silhouette: class " + label + " has fewer than 2 members");

    // one pass of pairwise distances, reused for every sample
    Eigen::MatrixXd dist(n, n);
    dist.diagonal().setZero();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (set.vectors.row(static_cast<Eigen::Index>(i)) -
                              set.vectors.row(static_cast<Eigen::Index>(j)))
                                 .norm();
            dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
        }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double intra = 0.0;
        double nearest_other = std::numeric_limits<double>::infinity();
        for (const auto& [label, members] : classes) {
            double sum = 0.0;
            for (std::size_t j : members)
                sum += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (label == set.labels[i]) {
                intra = sum / static_cast<double>(members.size() - 1);  // excludes self
            } else {
                nearest_other = std::min(nearest_other, sum / static_cast<double>(members.size()));
            }
        }
        const double denom = std::max(intra, nearest_other);
        if (denom == 0.0)
            throw DegenerateClassError("silhouette: coincident classes make the value undefined");
        total += (nearest_other - intra) / denom;
    }
    return total / static_cast<double>(n);
}

// Centered projection onto the top two principal components.
inline Eigen::MatrixXd project_2d(const Eigen::MatrixXd& vectors) {
    if (vectors.rows() < 3) throw std::invalid_argument("project_2d: need at least 3 rows");
    return pca_reduce(vectors, 2);
}

struct AblationResult {
    double raw_features = 0.0;  // flattened filter-bank maps
    double gram_only = 0.0;     // flattened co-occurrence matrix
    double fused = 0.0;         // gram * features
};

using VolumesByDisease = std::map<std::string, std::vector<AnomalyVolume>>;

// The three descriptor variants of one cohort, one row per case.
struct AblationDescriptors {
    Eigen::MatrixXd raw;
    Eigen::MatrixXd gram;
    Eigen::MatrixXd fused;
    std::vector<std::string> labels;
};

inline AblationDescriptors collect_ablation_descriptors(const VolumesByDisease& volumes,
                                                        const FilterBank& bank) {
    if (volumes.size() < 2) throw DegenerateClassError("ablation: need at least 2 diseases");
    std::size_t n_total = 0;
    for (const auto& [label, pool] : volumes) {
        if (pool.size() < 20)
            throw std::invalid_argument("ablation: need at least 20 volumes per disease, " +
                                        label + " has " + std::to_string(pool.size()));
        n_total += pool.size();
    }

    AblationDescriptors out;
    out.labels.reserve(n_total);
    Eigen::Index row = 0;
    for (const auto& [label, pool] : volumes) {
        for (const auto& volume : pool) {
            const FeatureTensor f = bank.extract(volume);
            const Eigen::MatrixXd m = gram_matrix(f);
            const Eigen::VectorXd fused_vec = fuse(m, f);
            if (out.raw.size() == 0) {
                out.raw.resize(static_cast<Eigen::Index>(n_total), f.values.size());
                out.gram.resize(static_cast<Eigen::Index>(n_total), m.size());
                out.fused.resize(static_cast<Eigen::Index>(n_total), fused_vec.size());
            }
            // row-major flattening for both map stacks
            Eigen::Index k = 0;
            for (Eigen::Index i = 0; i < f.values.rows(); ++i)
                for (Eigen::Index j = 0; j < f.values.cols(); ++j)
                    out.raw(row, k++) = f.values(i, j);
            k = 0;
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) out.gram(row, k++) = m(i, j);
            out.fused.row(row) = fused_vec.transpose();
            out.labels.push_back(label);
            ++row;
        }
    }
    return out;
}

// Compares the three descriptor variants on one cohort: all variants are
// reduced to the same dimension with the PCA reducer before the silhouette,
// so the comparison is not confounded by ambient dimension.
inline AblationResult ablation(const AblationDescriptors& descriptors,
                               Eigen::Index embedding_dim = 32) {
    AblationResult result;
    result.raw_features = silhouette({pca_reduce(descriptors.raw, embedding_dim),
                                      descriptors.labels});
    result.gram_only = silhouette({pca_reduce(descriptors.gram, embedding_dim),
                                   descriptors.labels});
    result.fused = silhouette({pca_reduce(descriptors.fused, embedding_dim),
                               descriptors.labels});
    return result;
}

inline AblationResult ablation(const VolumesByDisease& volumes, const FilterBank& bank,
                               Eigen::Index embedding_dim = 32) {
    return ablation(collect_ablation_descriptors(volumes, bank), embedding_dim);
}

}  // namespace onset
