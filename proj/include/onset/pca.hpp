#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace onset {

// Principal component analysis via eigendecomposition of the population
// covariance (1/n). When the ambient dimension exceeds the sample count the
// decomposition runs on the n x n inner-product matrix instead. Components
// beyond the data rank are zero, so requesting more dimensions than the data
// carries zero-pads the embedding.
struct Pca {
    Eigen::VectorXd mean;         // column means of the fitted data
    Eigen::MatrixXd components;   // d x k, orthonormal where nonzero
    Eigen::VectorXd eigenvalues;  // descending, length min(n, d)
    double total_variance = 0.0;  // trace of the covariance

    static Pca fit(const Eigen::MatrixXd& data, Eigen::Index k) {
        const Eigen::Index n = data.rows();
        const Eigen::Index d = data.cols();
        if (n < 2) throw std::invalid_argument("Pca::fit: need at least 2 rows");
        if (k < 1) throw std::invalid_argument("Pca::fit: need k >= 1");

        Pca pca;
        pca.mean = data.colwise().mean();
        const Eigen::MatrixXd centered = data.rowwise() - pca.mean.transpose();
        pca.total_variance = centered.squaredNorm() / static_cast<double>(n);
        pca.components = Eigen::MatrixXd::Zero(d, k);

        const Eigen::Index spectrum = std::min(n, d);
        pca.eigenvalues = Eigen::VectorXd::Zero(spectrum);

        if (d <= n) {
            const Eigen::MatrixXd cov =
                centered.transpose() * centered / static_cast<double>(n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
            if (eig.info() != Eigen::Success)
                throw std::runtime_error("Pca::fit: eigendecomposition failed");
            for (Eigen::Index i = 0; i < spectrum; ++i)
                pca.eigenvalues[i] = std::max(0.0, eig.eigenvalues()[d - 1 - i]);
            const Eigen::Index take = std::min(k, d);
            const double tol = 1e-12 * std::max(1.0, pca.eigenvalues[0]);
            for (Eigen::Index i = 0; i < take; ++i) {
                if (pca.eigenvalues[i] <= tol) break;  // null space stays zero-padded
                pca.components.col(i) = eig.eigenvectors().col(d - 1 - i);
            }
        } else {
            // dual formulation: eigenvectors of (1/n) Xc Xc^T lift to
            // covariance eigenvectors via Xc^T u / sqrt(n lambda)
            const Eigen::MatrixXd inner = centered * centered.transpose() / static_cast<double>(n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner);
            if (eig.info() != Eigen::Success)
                throw std::runtime_error("Pca::fit: eigendecomposition failed");
            for (Eigen::Index i = 0; i < spectrum; ++i)
                pca.eigenvalues[i] = std::max(0.0, eig.eigenvalues()[n - 1 - i]);
            const Eigen::Index take = std::min(k, spectrum);
            const double tol = 1e-12 * std::max(1.0, pca.eigenvalues[0]);
            for (Eigen::Index i = 0; i < take; ++i) {
                const double lambda = pca.eigenvalues[i];
                if (lambda <= tol) break;  // rank exhausted; rest stay zero
                pca.components.col(i) = centered.transpose() * eig.eigenvectors().col(n - 1 - i) /
                                        std::sqrt(static_cast<double>(n) * lambda);
            }
        }
        return pca;
    }

    Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const {
        return (data.rowwise() - mean.transpose()) * components;
    }

    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& embedded) const {
        return (embedded * components.transpose()).rowwise() + mean.transpose();
    }

    // mean over samples of the squared reconstruction residual norm;
    // equals the sum of discarded eigenvalues for fitted data
    double mean_squared_residual(const Eigen::MatrixXd& data) const {
        const Eigen::MatrixXd recon = reconstruct(transform(data));
        return (data - recon).squaredNorm() / static_cast<double>(data.rows());
    }

    // per-entry mean squared error, the same normalization autoencoder
    // training reports
    double reconstruction_mse(const Eigen::MatrixXd& data) const {
        return mean_squared_residual(data) / static_cast<double>(data.cols());
    }

    double retained_variance(Eigen::Index k) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < std::min(k, eigenvalues.size()); ++i) acc += eigenvalues[i];
        return acc;
    }
};

// Projection onto the top principal components.
inline Eigen::MatrixXd pca_reduce(const Eigen::MatrixXd& data, Eigen::Index k) {
    if (data.rows() < k + 1)
        throw std::invalid_argument("pca_reduce: need at least k + 1 rows");
    return Pca::fit(data, k).transform(data);
}

}  // namespace onset
