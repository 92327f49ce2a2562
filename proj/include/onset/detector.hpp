#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onset/errors.hpp"
#include "onset/parallel.hpp"
#include "onset/rng.hpp"
#include "onset/stream.hpp"

namespace onset {

enum class ScoreKind { PairwiseDistance, KdeLogLikelihood };

inline const char* score_name(ScoreKind kind) {
    return kind == ScoreKind::PairwiseDistance ? "ped" : "kde";
}

// Gaussian KDE settings. Scott's rule uses per-dimension bandwidths
// sd_j * n^(-1/(d+4)), floored at floor_ratio times the global embedding
// scale; a degenerate all-identical baseline falls back to an absolute
// bandwidth so the score stays finite.
struct KdeParams {
    enum class Bandwidth { Scott, Fixed };
    Bandwidth bandwidth = Bandwidth::Scott;
    double fixed_bandwidth = 1.0;
    double floor_ratio = 1e-3;

    static constexpr double kFallbackBandwidth = 1e-3;
};

// Mean Euclidean distance over all unordered row pairs.
inline double mean_pairwise_distance(const Eigen::MatrixXd& window) {
    const Eigen::Index n = window.rows();
    if (n < 2) throw std::invalid_argument("mean_pairwise_distance: need at least 2 cases");
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) total += (window.row(i) - window.row(j)).norm();
    return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

// Compactness-change score: absolute difference of the two window means.
inline double distance_deviation(const Eigen::MatrixXd& baseline,
                                 const Eigen::MatrixXd& detection) {
    return std::abs(mean_pairwise_distance(detection) - mean_pairwise_distance(baseline));
}

namespace detail {

constexpr double kLogDensityFloor = -690.77552789821368;  // log(1e-300)

// rms per-dimension deviation over the whole stream; reference scale for the
// bandwidth floor
inline double global_embedding_scale(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 2) return 0.0;
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    return std::sqrt((rows.rowwise() - mean).squaredNorm() /
                     static_cast<double>(rows.rows() * rows.cols()));
}

inline Eigen::VectorXd kde_bandwidths(const Eigen::MatrixXd& baseline, const KdeParams& params,
                                      double global_scale) {
    const Eigen::Index n = baseline.rows();
    const Eigen::Index d = baseline.cols();
    if (params.bandwidth == KdeParams::Bandwidth::Fixed) {
        if (!(params.fixed_bandwidth > 0.0))
            throw std::invalid_argument("kde: fixed bandwidth must be > 0");
        return Eigen::VectorXd::Constant(d, params.fixed_bandwidth);
    }
    if (n < 2) throw std::invalid_argument("kde: Scott bandwidth needs >= 2 baseline cases");
    const Eigen::RowVectorXd mean = baseline.colwise().mean();
    const Eigen::VectorXd var =
        (baseline.rowwise() - mean).colwise().squaredNorm().transpose() /
        static_cast<double>(n - 1);
    const double factor =
        std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    Eigen::VectorXd h = var.cwiseSqrt() * factor;
    const double floor = params.floor_ratio * global_scale;
    h = h.cwiseMax(floor);
    if (h.maxCoeff() <= 0.0) h.setConstant(KdeParams::kFallbackBandwidth);
    return h;
}

}  // namespace detail

// Mean log-likelihood of the detection window under a Gaussian KDE fitted to
// the baseline window (diagonal bandwidth). The density is floored at 1e-300
// before the log so the score is always finite.
inline double kde_score(const Eigen::MatrixXd& baseline, const Eigen::MatrixXd& detection,
                        const KdeParams& params = {}, double global_scale = 0.0) {
    if (baseline.rows() < 1) throw std::invalid_argument("kde_score: empty baseline");
    if (detection.rows() < 1) throw std::invalid_argument("kde_score: empty detection window");
    if (baseline.cols() != detection.cols())
        throw std::invalid_argument("kde_score: dimension mismatch");
    if (!baseline.allFinite() || !detection.allFinite())
        throw std::invalid_argument("kde_score: non-finite embeddings");

    const Eigen::VectorXd h = detail::kde_bandwidths(baseline, params, global_scale);
    const Eigen::Index n = baseline.rows();
    const Eigen::Index d = baseline.cols();
    const double log_norm =
        -h.array().log().sum() - 0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
    const Eigen::VectorXd inv_h = h.cwiseInverse();

    double total = 0.0;
    std::vector<double> exponents(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < detection.rows(); ++i) {
        double max_exp = -std::numeric_limits<double>::infinity();
        for (Eigen::Index b = 0; b < n; ++b) {
            const double q =
                ((detection.row(i) - baseline.row(b)).transpose().cwiseProduct(inv_h))
                    .squaredNorm();
            exponents[static_cast<std::size_t>(b)] = -0.5 * q;
            max_exp = std::max(max_exp, -0.5 * q);
        }
        // log-sum-exp over mixture components
        double acc = 0.0;
        for (double e : exponents) acc += std::exp(e - max_exp);
        double log_density =
            log_norm + max_exp + std::log(acc) - std::log(static_cast<double>(n));
        if (!(log_density >= detail::kLogDensityFloor)) log_density = detail::kLogDensityFloor;
        total += log_density;
    }
    return total / static_cast<double>(detection.rows());
}

// Mean and spread of one score collected over baseline-only streams; the
// detection thresholds are mean +/- sensitivity * stddev.
struct CalibrationStats {
    ScoreKind kind = ScoreKind::PairwiseDistance;
    int window_size = 0;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n_scores = 0;
    std::size_t n_streams = 0;
};

namespace detail {

// Sliding sums of pairwise distances for a window of fixed width; O(w d) per
// step instead of O(w^2 d).
class PairwiseWindowSum {
public:
    PairwiseWindowSum(const Eigen::MatrixXd& rows, Eigen::Index start, Eigen::Index width)
        : rows_(rows), start_(start), width_(width) {
        sum_ = 0.0;
        for (Eigen::Index i = start; i < start + width; ++i)
            for (Eigen::Index j = i + 1; j < start + width; ++j) sum_ += dist(i, j);
    }

    // advance the window from [start, start+w) to [start+1, start+w+1)
    void advance() {
        const Eigen::Index leaving = start_;
        const Eigen::Index entering = start_ + width_;
        for (Eigen::Index j = start_ + 1; j < start_ + width_; ++j)
            sum_ += dist(entering, j) - dist(leaving, j);
        ++start_;
    }

    double mean() const {
        return sum_ / (0.5 * static_cast<double>(width_) * static_cast<double>(width_ - 1));
    }

private:
    double dist(Eigen::Index a, Eigen::Index b) const {
        return (rows_.row(a) - rows_.row(b)).norm();
    }

    const Eigen::MatrixXd& rows_;
    Eigen::Index start_;
    Eigen::Index width_;
    double sum_;
};

inline Eigen::MatrixXd stream_matrix(const CaseStream& stream) {
    if (stream.cases.empty()) throw std::invalid_argument("empty stream");
    const auto d = stream.cases.front().vector.size();
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(stream.cases.size()), d);
    for (std::size_t i = 0; i < stream.cases.size(); ++i) {
        if (stream.cases[i].vector.size() != d)
            throw std::invalid_argument("stream embeddings have mixed dimensions");
        rows.row(static_cast<Eigen::Index>(i)) = stream.cases[i].vector.transpose();
    }
    return rows;
}

}  // namespace detail

// Collects the chosen score at every window step of every stream and pools
// the values. Streams must be novel-free; this is the caller's contract.
inline CalibrationStats calibrate(const std::vector<CaseStream>& streams, int window_size,
                                  ScoreKind kind, const KdeParams& kde_params = {}) {
    if (streams.size() < 10)
        throw ConfigError("calibrate: need at least 10 baseline-only streams");
    if (window_size < 2) throw std::invalid_argument("calibrate: window size must be >= 2");

    std::vector<double> scores;
    for (const auto& stream : streams) {
        const auto w = static_cast<Eigen::Index>(window_size);
        const Eigen::MatrixXd rows = detail::stream_matrix(stream);
        if (rows.rows() < 2 * w)
            throw std::invalid_argument("calibrate: stream shorter than two windows");
        const double scale = detail::global_embedding_scale(rows);
        const Eigen::Index n_steps = rows.rows() - 2 * w + 1;

        if (kind == ScoreKind::PairwiseDistance) {
            detail::PairwiseWindowSum base(rows, 0, w);
            detail::PairwiseWindowSum det(rows, w, w);
            for (Eigen::Index t = 0;; ++t) {
                scores.push_back(std::abs(det.mean() - base.mean()));
                if (t + 1 >= n_steps) break;
                base.advance();
                det.advance();
            }
        } else {
            for (Eigen::Index t = 0; t < n_steps; ++t) {
                scores.push_back(kde_score(rows.middleRows(t, w), rows.middleRows(t + w, w),
                                           kde_params, scale));
            }
        }
    }

    CalibrationStats stats;
    stats.kind = kind;
    stats.window_size = window_size;
    stats.n_scores = scores.size();
    stats.n_streams = streams.size();
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    stats.mean = mean;
    stats.stddev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
    if (!(stats.stddev > 0.0))
        throw NumericError("calibrate: zero score variance on baseline streams");
    return stats;
}

struct ScoreDetection {
    bool detected = false;
    double detection_day = std::numeric_limits<double>::quiet_NaN();
    double latency_days = std::numeric_limits<double>::quiet_NaN();
    int fp_episodes = 0;   // pre-onset trigger runs, consecutive steps collapsed
    int fp_steps = 0;      // raw pre-onset triggering steps
    double fp_per_100_days = 0.0;
};

struct TracePoint {
    double day = 0.0;
    double distance_deviation = 0.0;
    double kde_log_likelihood = 0.0;
};

struct DetectorOptions {
    KdeParams kde;
    bool kde_two_sided = false;    // default: only a low likelihood is novel
    bool fixed_baseline = false;   // pin the baseline to the first w_s cases
    bool keep_trace = true;
};

struct DetectionReport {
    ScoreDetection ped;
    ScoreDetection kde;
    std::vector<TracePoint> trace;
    double onset_day = 0.0;
    double first_step_day = 0.0;
    Eigen::Index n_steps = 0;
};

// Slides the baseline/detection window pair one case at a time. A step
// triggers the distance score when d > mean + s * sigma and the KDE score
// when s_kde < mean - s * sigma (optionally two-sided). The first triggering
// step at or after onset is the detection; earlier triggers count as false
// positives and do not stop the run.
inline DetectionReport detect(const CaseStream& stream, const CalibrationStats& ped_stats,
                              const CalibrationStats& kde_stats, int window_size,
                              double sensitivity, const DetectorOptions& options = {}) {
    if (window_size < 2) throw std::invalid_argument("detect: window size must be >= 2");
    const auto w = static_cast<Eigen::Index>(window_size);
    const Eigen::MatrixXd rows = detail::stream_matrix(stream);
    if (rows.rows() < 2 * w)
        throw std::invalid_argument("detect: stream shorter than two windows");
    if (!(sensitivity > 0.0)) throw std::invalid_argument("detect: sensitivity must be > 0");

    const double scale = detail::global_embedding_scale(rows);
    const Eigen::Index n_steps = rows.rows() - 2 * w + 1;
    const double ped_threshold = ped_stats.mean + sensitivity * ped_stats.stddev;
    const double kde_low = kde_stats.mean - sensitivity * kde_stats.stddev;
    const double kde_high = kde_stats.mean + sensitivity * kde_stats.stddev;

    DetectionReport report;
    report.onset_day = stream.onset_day;
    report.n_steps = n_steps;
    report.first_step_day = stream.cases[static_cast<std::size_t>(2 * w - 1)].timestamp;
    if (options.keep_trace) report.trace.reserve(static_cast<std::size_t>(n_steps));

    detail::PairwiseWindowSum base(rows, 0, w);
    detail::PairwiseWindowSum det(rows, w, w);

    bool ped_was_triggering = false;
    bool kde_was_triggering = false;

    for (Eigen::Index t = 0; t < n_steps; ++t) {
        if (t > 0) {
            if (!options.fixed_baseline) base.advance();
            det.advance();
        }
        const Eigen::Index newest = t + 2 * w - 1;
        const double day = stream.cases[static_cast<std::size_t>(newest)].timestamp;

        const Eigen::Index base_start = options.fixed_baseline ? 0 : t;
        const double ped_score = std::abs(det.mean() - base.mean());
        const double kde_value = kde_score(rows.middleRows(base_start, w),
                                           rows.middleRows(t + w, w), options.kde, scale);

        const bool ped_trigger = ped_score > ped_threshold;
        const bool kde_trigger =
            kde_value < kde_low || (options.kde_two_sided && kde_value > kde_high);

        if (options.keep_trace) report.trace.push_back({day, ped_score, kde_value});

        auto update = [&](ScoreDetection& sd, bool trigger, bool& was_triggering) {
            if (trigger) {
                if (day < report.onset_day) {
                    ++sd.fp_steps;
                    if (!was_triggering) ++sd.fp_episodes;
                } else if (!sd.detected) {
                    sd.detected = true;
                    sd.detection_day = day;
                    sd.latency_days = day - report.onset_day;
                }
            }
            was_triggering = trigger;
        };
        update(report.ped, ped_trigger, ped_was_triggering);
        update(report.kde, kde_trigger, kde_was_triggering);
    }

    const double monitored = report.onset_day - report.first_step_day;
    for (ScoreDetection* sd : {&report.ped, &report.kde}) {
        sd->fp_per_100_days =
            monitored > 0.0 ? 100.0 * static_cast<double>(sd->fp_episodes) / monitored : 0.0;
    }
    return report;
}

// One row of the sweep table.
struct SweepCell {
    std::string score;
    int window_size = 0;
    double reproduction_number = 0.0;
    double mean_latency = std::numeric_limits<double>::quiet_NaN();
    double detection_rate = 0.0;
    double fp_per_100_days = 0.0;
    int n_detected = 0;
    int n_replicates = 0;
    double mean_fp_episodes = 0.0;
    double mean_fp_steps = 0.0;
};

struct SweepParams {
    std::vector<double> r_values{1.1, 1.15, 1.2, 1.25, 1.3};
    std::vector<int> window_sizes{30, 50, 90};
    int n_replicates = 100;
    double sensitivity = 2.576;
    int n_calibration_streams = 20;
    DetectorOptions options;
    bool keep_reports = false;

    void validate() const {
        if (r_values.empty()) throw ConfigError("sweep: r_values must not be empty");
        for (double r : r_values)
            if (!(r > 1.0)) throw ConfigError("sweep: every R must be > 1");
        if (window_sizes.empty()) throw ConfigError("sweep: window_sizes must not be empty");
        for (int w : window_sizes)
            if (w < 2) throw ConfigError("sweep: window sizes must be >= 2");
        if (n_replicates < 1) throw ConfigError("sweep: n_replicates must be >= 1");
        if (n_calibration_streams < 10)
            throw ConfigError("sweep: need at least 10 calibration streams");
        if (!(sensitivity > 0.0)) throw ConfigError("sweep: sensitivity must be > 0");
    }
};

struct SweepResult {
    std::vector<SweepCell> cells;              // score-major, then w_s, then R
    std::vector<CalibrationStats> calibrations;  // per (score, w_s)
    // populated only when params.keep_reports: indexed [r][rep][w]
    std::vector<std::vector<std::vector<DetectionReport>>> reports;
};

namespace detail {
constexpr std::uint64_t kCalibrationTag = 0xCA11B;
constexpr std::uint64_t kSweepTag = 0x53EE9;
}  // namespace detail

// Novel-free streams for threshold calibration; the same construction is
// used by the sweep and by the standalone calibrate command.
inline std::vector<CaseStream> build_calibration_streams(const EmbeddingPools& pools,
                                                         const StreamConfig& base_config,
                                                         int n_streams,
                                                         std::uint64_t master_seed) {
    std::vector<CaseStream> streams;
    streams.reserve(static_cast<std::size_t>(n_streams));
    for (int i = 0; i < n_streams; ++i) {
        StreamConfig config = base_config;
        config.n_novel = 0;
        config.seed = derive_seed(master_seed, detail::kCalibrationTag,
                                  static_cast<std::uint64_t>(i));
        streams.push_back(build_stream(config, pools));
    }
    return streams;
}

// Full grid evaluation: calibrates per window size on novel-free streams,
// then runs 2 scores x |w_s| x |R| over n_replicates stream realizations.
// Replicate seeds derive from the master seed by index, so results do not
// depend on the thread count.
inline SweepResult evaluate_sweep(const EmbeddingPools& pools, const StreamConfig& base_config,
                                  const SweepParams& params, std::uint64_t master_seed,
                                  int n_threads = 0) {
    params.validate();

    const std::vector<CaseStream> calibration_streams = build_calibration_streams(
        pools, base_config, params.n_calibration_streams, master_seed);

    const auto n_windows = static_cast<int>(params.window_sizes.size());
    std::vector<CalibrationStats> ped_stats(static_cast<std::size_t>(n_windows));
    std::vector<CalibrationStats> kde_stats(static_cast<std::size_t>(n_windows));
    parallel_for(2 * n_windows, n_threads, [&](int task) {
        const int w_idx = task / 2;
        const int w = params.window_sizes[static_cast<std::size_t>(w_idx)];
        if (task % 2 == 0)
            ped_stats[static_cast<std::size_t>(w_idx)] =
                calibrate(calibration_streams, w, ScoreKind::PairwiseDistance);
        else
            kde_stats[static_cast<std::size_t>(w_idx)] = calibrate(
                calibration_streams, w, ScoreKind::KdeLogLikelihood, params.options.kde);
    });

    // replicate detection runs
    const auto n_r = static_cast<int>(params.r_values.size());
    const int n_tasks = n_r * params.n_replicates;
    std::vector<std::vector<std::vector<DetectionReport>>> reports(
        static_cast<std::size_t>(n_r),
        std::vector<std::vector<DetectionReport>>(
            static_cast<std::size_t>(params.n_replicates),
            std::vector<DetectionReport>(static_cast<std::size_t>(n_windows))));

    DetectorOptions options = params.options;
    options.keep_trace = params.keep_reports;

    parallel_for(n_tasks, n_threads, [&](int task) {
        const int r_idx = task / params.n_replicates;
        const int rep = task % params.n_replicates;
        StreamConfig config = base_config;
        config.reproduction_number = params.r_values[static_cast<std::size_t>(r_idx)];
        config.seed = derive_seed(master_seed, detail::kSweepTag + static_cast<std::uint64_t>(r_idx),
                                  static_cast<std::uint64_t>(rep));
        const CaseStream stream = build_stream(config, pools);
        for (int w_idx = 0; w_idx < n_windows; ++w_idx) {
            reports[static_cast<std::size_t>(r_idx)][static_cast<std::size_t>(rep)]
                   [static_cast<std::size_t>(w_idx)] =
                detect(stream, ped_stats[static_cast<std::size_t>(w_idx)],
                       kde_stats[static_cast<std::size_t>(w_idx)],
                       params.window_sizes[static_cast<std::size_t>(w_idx)], params.sensitivity,
                       options);
        }
    });

    SweepResult result;
    for (int s = 0; s < 2; ++s) {
        const bool is_ped = s == 0;
        for (int w_idx = 0; w_idx < n_windows; ++w_idx) {
            for (int r_idx = 0; r_idx < n_r; ++r_idx) {
                SweepCell cell;
                cell.score = is_ped ? "ped" : "kde";
                cell.window_size = params.window_sizes[static_cast<std::size_t>(w_idx)];
                cell.reproduction_number = params.r_values[static_cast<std::size_t>(r_idx)];
                cell.n_replicates = params.n_replicates;
                double latency_sum = 0.0, fp_rate_sum = 0.0, fp_episode_sum = 0.0,
                       fp_step_sum = 0.0;
                for (int rep = 0; rep < params.n_replicates; ++rep) {
                    const DetectionReport& report =
                        reports[static_cast<std::size_t>(r_idx)][static_cast<std::size_t>(rep)]
                               [static_cast<std::size_t>(w_idx)];
                    const ScoreDetection& sd = is_ped ? report.ped : report.kde;
                    if (sd.detected) {
                        ++cell.n_detected;
                        latency_sum += sd.latency_days;
                    }
                    fp_rate_sum += sd.fp_per_100_days;
                    fp_episode_sum += sd.fp_episodes;
                    fp_step_sum += sd.fp_steps;
                }
                const double n_rep = static_cast<double>(params.n_replicates);
                if (cell.n_detected > 0)
                    cell.mean_latency = latency_sum / static_cast<double>(cell.n_detected);
                cell.detection_rate = static_cast<double>(cell.n_detected) / n_rep;
                cell.fp_per_100_days = fp_rate_sum / n_rep;
                cell.mean_fp_episodes = fp_episode_sum / n_rep;
                cell.mean_fp_steps = fp_step_sum / n_rep;
                result.cells.push_back(std::move(cell));
            }
        }
    }
    for (int w_idx = 0; w_idx < n_windows; ++w_idx) {
        result.calibrations.push_back(ped_stats[static_cast<std::size_t>(w_idx)]);
        result.calibrations.push_back(kde_stats[static_cast<std::size_t>(w_idx)]);
    }
    if (params.keep_reports) result.reports = std::move(reports);
    return result;
}

}  // namespace onset
