#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onset/errors.hpp"
#include "onset/rng.hpp"

namespace onset {

// Fully connected autoencoder: rectifier hidden layers, sigmoid output,
// mean-squared-error loss, plain SGD. decoder_widths must end in the input
// dimension; encoder_widths must end in the embedding dimension.
struct AutoencoderSpec {
    std::vector<int> encoder_widths{512, 128, 32};
    std::vector<int> decoder_widths{128, 512, 2048};
    double learning_rate = 0.1;
    int epochs = 100;
    int batch_size = 16;

    int embedding_dim() const { return encoder_widths.back(); }

    void validate(int input_dim) const {
        if (encoder_widths.empty() || decoder_widths.empty())
            throw ConfigError("autoencoder: encoder/decoder widths must be non-empty");
        for (int w : encoder_widths)
            if (w <= 0) throw ConfigError("autoencoder: encoder widths must be positive");
        for (int w : decoder_widths)
            if (w <= 0) throw ConfigError("autoencoder: decoder widths must be positive");
        if (decoder_widths.back() != input_dim)
            throw ConfigError("autoencoder: decoder must end in the input dimension (" +
                              std::to_string(input_dim) + ", got " +
                              std::to_string(decoder_widths.back()) + ")");
        if (learning_rate <= 0.0) throw ConfigError("autoencoder: learning_rate must be > 0");
        if (epochs < 1) throw ConfigError("autoencoder: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("autoencoder: batch_size must be >= 1");
    }
};

// Per-dimension min-max rescaling to [0, 1]; constant dimensions map to 0.
struct MinMaxScaler {
    Eigen::VectorXd offset;
    Eigen::VectorXd scale;  // 1 / (max - min), or 0 for constant dimensions

    static MinMaxScaler fit(const Eigen::MatrixXd& rows) {
        MinMaxScaler s;
        s.offset = rows.colwise().minCoeff().transpose();
        const Eigen::VectorXd range =
            rows.colwise().maxCoeff().transpose() - s.offset;
        s.scale = (range.array() > 0.0).select(range.cwiseInverse(), 0.0);
        return s;
    }

    Eigen::VectorXd transform(const Eigen::VectorXd& x) const {
        return (x - offset).cwiseProduct(scale);
    }

    Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const {
        return (rows.rowwise() - offset.transpose()) * scale.asDiagonal();
    }
};

class Autoencoder {
public:
    // init constant for rectified hidden biases; keeps units alive early
    static constexpr double kHiddenBiasInit = 0.1;

    struct Gradients {
        std::vector<Eigen::MatrixXd> weights;
        std::vector<Eigen::VectorXd> biases;
    };

    // Trains on row-major data (n x d) already rescaled to [0, 1].
    // Deterministic in (data, spec, seed). Throws NumericError if the loss
    // diverges to NaN/Inf, which signals a learning rate too high.
    static Autoencoder train(const Eigen::MatrixXd& data, const AutoencoderSpec& spec,
                             std::uint64_t seed) {
        const auto input_dim = static_cast<int>(data.cols());
        spec.validate(input_dim);
        if (data.rows() < 1) throw std::invalid_argument("Autoencoder::train: empty data");

        Autoencoder model(spec, input_dim, seed);
        Rng rng(derive_seed(seed, 0x5417));

        const auto n = data.rows();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);

        model.loss_history_.reserve(static_cast<std::size_t>(spec.epochs));
        for (int epoch = 0; epoch < spec.epochs; ++epoch) {
            // Fisher-Yates with the run rng; the sole nondeterminism knob
            for (Eigen::Index i = n - 1; i > 0; --i) {
                const auto j = static_cast<Eigen::Index>(
                    rng.next_below(static_cast<std::uint64_t>(i) + 1));
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
            }
            double epoch_loss = 0.0;
            for (Eigen::Index start = 0; start < n; start += spec.batch_size) {
                const Eigen::Index count = std::min<Eigen::Index>(spec.batch_size, n - start);
                Eigen::MatrixXd batch(input_dim, count);
                for (Eigen::Index c = 0; c < count; ++c)
                    batch.col(c) = data.row(order[static_cast<std::size_t>(start + c)]).transpose();
                epoch_loss +=
                    model.sgd_step(batch, spec.learning_rate) * static_cast<double>(count);
            }
            epoch_loss /= static_cast<double>(n);
            if (!std::isfinite(epoch_loss))
                throw NumericError("autoencoder diverged (loss is not finite); "
                                   "lower the learning rate");
            model.loss_history_.push_back(epoch_loss);
        }
        return model;
    }

    // Encoder half only; all layers rectified.
    Eigen::VectorXd encode(const Eigen::VectorXd& x) const {
        if (x.size() != input_dim_)
            throw std::invalid_argument("Autoencoder::encode: dimension mismatch");
        Eigen::VectorXd a = x;
        for (std::size_t l = 0; l < n_encoder_layers_; ++l)
            a = ((weights_[l] * a + biases_[l]).array().max(0.0)).matrix();
        return a;
    }

    Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& rows) const {
        Eigen::MatrixXd out(rows.rows(), embedding_dim());
        for (Eigen::Index i = 0; i < rows.rows(); ++i)
            out.row(i) = encode(rows.row(i).transpose()).transpose();
        return out;
    }

    Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd a = x;
        forward_activations(a);
        return a.col(0);
    }

    // mean over samples and dimensions of the squared reconstruction error
    double mse(const Eigen::MatrixXd& rows) const {
        Eigen::MatrixXd batch = rows.transpose();
        const Eigen::MatrixXd target = batch;
        forward_activations(batch);
        return (batch - target).squaredNorm() / static_cast<double>(target.size());
    }

    // Full-batch analytic gradient of mse(); used by the finite-difference
    // check and shared with sgd_step.
    Gradients gradients(const Eigen::MatrixXd& rows) const {
        Eigen::MatrixXd batch = rows.transpose();
        Gradients grads;
        backprop(batch, nullptr, &grads);
        return grads;
    }

    int input_dim() const { return input_dim_; }
    int embedding_dim() const { return static_cast<int>(biases_[n_encoder_layers_ - 1].size()); }
    const std::vector<double>& loss_history() const { return loss_history_; }
    double initial_loss() const { return loss_history_.front(); }
    double final_loss() const { return loss_history_.back(); }

    const AutoencoderSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    std::vector<Eigen::MatrixXd>& weights() { return weights_; }
    std::vector<Eigen::VectorXd>& biases() { return biases_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    // Builds an untrained model (deterministic Glorot-uniform init).
    Autoencoder(const AutoencoderSpec& spec, int input_dim, std::uint64_t seed)
        : spec_(spec), input_dim_(input_dim), seed_(seed) {
        std::vector<int> dims{input_dim};
        dims.insert(dims.end(), spec.encoder_widths.begin(), spec.encoder_widths.end());
        dims.insert(dims.end(), spec.decoder_widths.begin(), spec.decoder_widths.end());
        n_encoder_layers_ = spec.encoder_widths.size();

        Rng rng(derive_seed(seed, 0x1417));
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const int fan_in = dims[l];
            const int fan_out = dims[l + 1];
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            Eigen::MatrixXd w(fan_out, fan_in);
            for (Eigen::Index i = 0; i < w.size(); ++i)
                w.data()[i] = rng.uniform(-bound, bound);
            weights_.push_back(std::move(w));
            // small positive bias keeps rectified units alive at the start
            const bool output_layer = l + 2 == dims.size();
            biases_.push_back(output_layer ? Eigen::VectorXd::Zero(fan_out)
                                           : Eigen::VectorXd::Constant(fan_out, kHiddenBiasInit));
        }
    }

private:
    // columns of `batch` are samples; replaced by the output activations
    void forward_activations(Eigen::MatrixXd& batch) const {
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            batch = (weights_[l] * batch).colwise() + biases_[l];
            if (l + 1 == weights_.size())
                batch = (1.0 / (1.0 + (-batch.array()).exp())).matrix();  // sigmoid output
            else
                batch = batch.array().max(0.0).matrix();
        }
    }

    // Backpropagation through the whole stack. When `update_lr` is non-null,
    // applies an SGD step in place; when `out` is non-null, accumulates
    // gradients instead. Returns the batch loss.
    double backprop(const Eigen::MatrixXd& input, const double* update_lr,
                    Gradients* out) const {
        const auto n_layers = weights_.size();
        std::vector<Eigen::MatrixXd> activations(n_layers + 1);
        activations[0] = input;
        for (std::size_t l = 0; l < n_layers; ++l) {
            Eigen::MatrixXd z = (weights_[l] * activations[l]).colwise() + biases_[l];
            if (l + 1 == n_layers)
                activations[l + 1] = (1.0 / (1.0 + (-z.array()).exp())).matrix();
            else
                activations[l + 1] = z.array().max(0.0).matrix();
        }

        const double denom = static_cast<double>(input.size());
        const double loss = (activations[n_layers] - input).squaredNorm() / denom;

        // output delta: d(mse)/d(z) with sigmoid' = a (1 - a)
        Eigen::MatrixXd delta =
            ((2.0 / denom) * (activations[n_layers] - input).array() *
             activations[n_layers].array() * (1.0 - activations[n_layers].array()))
                .matrix();

        if (out) {
            out->weights.resize(n_layers);
            out->biases.resize(n_layers);
        }
        for (std::size_t l = n_layers; l-- > 0;) {
            Eigen::MatrixXd grad_w = delta * activations[l].transpose();
            Eigen::VectorXd grad_b = delta.rowwise().sum();
            if (l > 0) {
                // rectifier gate: activation > 0 <=> pre-activation > 0
                delta = ((weights_[l].transpose() * delta).array() *
                         (activations[l].array() > 0.0).cast<double>())
                            .matrix();
            }
            if (out) {
                out->weights[l] = std::move(grad_w);
                out->biases[l] = std::move(grad_b);
            } else {
                auto* self = const_cast<Autoencoder*>(this);
                self->weights_[l].noalias() -= *update_lr * grad_w;
                self->biases_[l] -= *update_lr * grad_b;
            }
        }
        return loss;
    }

    double sgd_step(const Eigen::MatrixXd& batch, double lr) {
        return backprop(batch, &lr, nullptr);
    }

    AutoencoderSpec spec_;
    int input_dim_ = 0;
    std::uint64_t seed_ = 0;
    std::size_t n_encoder_layers_ = 0;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
    std::vector<double> loss_history_;
};

}  // namespace onset
