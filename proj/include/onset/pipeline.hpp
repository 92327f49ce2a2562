#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "onset/config.hpp"
#include "onset/detector.hpp"
#include "onset/features.hpp"
#include "onset/io.hpp"
#include "onset/metrics.hpp"
#include "onset/parallel.hpp"
#include "onset/pca.hpp"

namespace onset {

namespace detail {
constexpr std::uint64_t kPoolTag = 0xD15E;
constexpr std::uint64_t kReducerTag = 0xAE00;
constexpr std::uint64_t kAblationTag = 0xAB1A;
}  // namespace detail

namespace paths {
namespace fs = std::filesystem;

inline fs::path descriptors_dir(const fs::path& out) { return out / "descriptors"; }
inline fs::path volumes_dir(const fs::path& out) { return out / "volumes"; }
inline fs::path embeddings_dir(const fs::path& out) { return out / "embeddings"; }
inline fs::path reducer_file(const fs::path& out) { return out / "model" / "reducer.bin"; }
inline fs::path calibration_csv(const fs::path& out) { return out / "calibration.csv"; }
inline fs::path calibration_json(const fs::path& out) { return out / "calibration.json"; }
inline fs::path results_csv(const fs::path& out) { return out / "results.csv"; }
inline fs::path results_json(const fs::path& out) { return out / "results.json"; }
inline fs::path traces_dir(const fs::path& out) { return out / "traces"; }
inline fs::path ablation_csv(const fs::path& out) { return out / "ablation.csv"; }
inline fs::path ablation_projection_csv(const fs::path& out) {
    return out / "ablation_projection.csv";
}
inline fs::path ablation_svg(const fs::path& out) { return out / "ablation_scatter.svg"; }
}  // namespace paths

inline std::string case_id_for(const std::string& disease, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", index);
    return disease + "-" + buf;
}

// ---- simulate: volumes -> descriptor pools on disk ----

inline std::map<std::string, CaseTable> run_simulate(const ExperimentConfig& config) {
    config.validate();
    const std::filesystem::path out(config.output_dir);
    ensure_directory(paths::descriptors_dir(out));
    ensure_directory(paths::volumes_dir(out));

    const FilterBank bank = FilterBank::fixed_random(config.filter_bank_seed);
    const auto n_diseases = static_cast<int>(config.diseases.size());
    const int per_disease = config.cases_per_disease;

    std::map<std::string, CaseTable> tables;
    std::vector<Eigen::MatrixXd*> matrices(static_cast<std::size_t>(n_diseases));
    const Eigen::Index descriptor_dim = bank.descriptor_length(config.volume_shape);
    for (int d = 0; d < n_diseases; ++d) {
        const auto& disease = config.diseases[static_cast<std::size_t>(d)];
        CaseTable& table = tables[disease.id];
        table.timestamps.assign(static_cast<std::size_t>(per_disease), 0.0);
        table.labels.assign(static_cast<std::size_t>(per_disease), disease.id);
        for (int i = 0; i < per_disease; ++i) table.case_ids.push_back(case_id_for(disease.id, i));
        table.values.resize(per_disease, descriptor_dim);
        matrices[static_cast<std::size_t>(d)] = &table.values;
    }

    parallel_for(n_diseases * per_disease, config.threads, [&](int task) {
        const int d = task / per_disease;
        const int i = task % per_disease;
        const auto& disease = config.diseases[static_cast<std::size_t>(d)];
        const std::uint64_t seed =
            derive_seed(config.master_seed, detail::kPoolTag + static_cast<std::uint64_t>(d),
                        static_cast<std::uint64_t>(i));
        const AnomalyVolume volume = synthesize_volume(disease, config.volume_shape, seed);
        matrices[static_cast<std::size_t>(d)]->row(i) = describe(bank, volume).transpose();

        const bool sample_case = i == 0;
        if (sample_case || config.write_volumes) {
            write_volume(volume, paths::volumes_dir(out) / case_id_for(disease.id, i),
                         disease.id, seed);
        }
    });

    for (const auto& disease : config.diseases)
        write_case_csv(paths::descriptors_dir(out) / (disease.id + ".csv"), tables[disease.id],
                       "v");
    return tables;
}

inline std::map<std::string, CaseTable> load_or_simulate_descriptors(
    const ExperimentConfig& config) {
    const std::filesystem::path dir = paths::descriptors_dir(config.output_dir);
    std::map<std::string, CaseTable> tables;
    bool all_present = true;
    for (const auto& disease : config.diseases)
        all_present = all_present && std::filesystem::exists(dir / (disease.id + ".csv"));
    if (!all_present) return run_simulate(config);
    for (const auto& disease : config.diseases)
        tables[disease.id] = read_case_csv(dir / (disease.id + ".csv"));
    return tables;
}

// ---- train-reducer: autoencoder on known-disease descriptors ----

struct ReducerArtifacts {
    Reducer reducer;
    std::map<std::string, CaseTable> embeddings;
};

inline ReducerArtifacts run_train_reducer(const ExperimentConfig& config) {
    config.validate();
    const auto descriptors = load_or_simulate_descriptors(config);
    const std::filesystem::path out(config.output_dir);
    ensure_directory(paths::reducer_file(out).parent_path());
    ensure_directory(paths::embeddings_dir(out));

    // training set: every configured disease except the novel one
    Eigen::Index n_train = 0, dim = 0;
    for (const auto& disease : config.diseases) {
        if (disease.id == config.novel_label) continue;
        const auto& table = descriptors.at(disease.id);
        n_train += table.values.rows();
        dim = table.values.cols();
    }
    Eigen::MatrixXd train(n_train, dim);
    Eigen::Index row = 0;
    for (const auto& disease : config.diseases) {
        if (disease.id == config.novel_label) continue;
        const auto& table = descriptors.at(disease.id);
        train.middleRows(row, table.values.rows()) = table.values;
        row += table.values.rows();
    }

    const MinMaxScaler scaler = MinMaxScaler::fit(train);
    const Autoencoder model =
        Autoencoder::train(scaler.transform(train), config.ae,
                           derive_seed(config.master_seed, detail::kReducerTag));
    ReducerArtifacts artifacts{Reducer{scaler, model}, {}};
    save_reducer(paths::reducer_file(out), artifacts.reducer);

    for (const auto& disease : config.diseases) {
        const auto& table = descriptors.at(disease.id);
        CaseTable embedded;
        embedded.case_ids = table.case_ids;
        embedded.timestamps = table.timestamps;
        embedded.labels = table.labels;
        embedded.values = model.encode_rows(artifacts.reducer.scaler.transform(table.values));
        write_case_csv(paths::embeddings_dir(out) / (disease.id + ".csv"), embedded, "e");
        artifacts.embeddings[disease.id] = std::move(embedded);
    }
    return artifacts;
}

inline std::map<std::string, CaseTable> load_or_train_embeddings(const ExperimentConfig& config) {
    const std::filesystem::path dir = paths::embeddings_dir(config.output_dir);
    bool all_present = std::filesystem::exists(paths::reducer_file(config.output_dir));
    for (const auto& disease : config.diseases)
        all_present = all_present && std::filesystem::exists(dir / (disease.id + ".csv"));
    if (!all_present) return run_train_reducer(config).embeddings;
    std::map<std::string, CaseTable> tables;
    for (const auto& disease : config.diseases)
        tables[disease.id] = read_case_csv(dir / (disease.id + ".csv"));
    return tables;
}

inline EmbeddingPools pools_from_tables(const std::map<std::string, CaseTable>& tables) {
    EmbeddingPools pools;
    for (const auto& [label, table] : tables) {
        auto& pool = pools[label];
        pool.reserve(table.case_ids.size());
        for (std::size_t i = 0; i < table.case_ids.size(); ++i) {
            CaseEmbedding c;
            c.case_id = table.case_ids[i];
            c.timestamp = 0.0;
            c.label = table.labels[i];
            c.vector = table.values.row(static_cast<Eigen::Index>(i)).transpose();
            pool.push_back(std::move(c));
        }
    }
    return pools;
}

// ---- calibrate: threshold statistics on novel-free streams ----

inline std::vector<CalibrationStats> run_calibrate(const ExperimentConfig& config) {
    config.validate();
    const EmbeddingPools pools = pools_from_tables(load_or_train_embeddings(config));
    const std::vector<CaseStream> streams = build_calibration_streams(
        pools, config.stream, config.sweep.n_calibration_streams, config.master_seed);

    const auto n_windows = static_cast<int>(config.sweep.window_sizes.size());
    std::vector<CalibrationStats> stats(static_cast<std::size_t>(2 * n_windows));
    parallel_for(2 * n_windows, config.threads, [&](int task) {
        const int w = config.sweep.window_sizes[static_cast<std::size_t>(task / 2)];
        stats[static_cast<std::size_t>(task)] =
            task % 2 == 0
                ? calibrate(streams, w, ScoreKind::PairwiseDistance)
                : calibrate(streams, w, ScoreKind::KdeLogLikelihood, config.sweep.options.kde);
    });

    const std::filesystem::path out(config.output_dir);
    ensure_directory(out);
    std::string csv = "score,w_s,mean,stddev,n_scores,n_streams\n";
    nlohmann::json json = nlohmann::json::array();
    for (const auto& s : stats) {
        csv += std::string(score_name(s.kind)) + "," + std::to_string(s.window_size) + "," +
               format_double(s.mean) + "," + format_double(s.stddev) + "," +
               std::to_string(s.n_scores) + "," + std::to_string(s.n_streams) + "\n";
        json.push_back({{"score", score_name(s.kind)},
                        {"w_s", s.window_size},
                        {"mean", s.mean},
                        {"stddev", s.stddev},
                        {"n_scores", s.n_scores},
                        {"n_streams", s.n_streams}});
    }
    write_text_file(paths::calibration_csv(out), csv);
    write_text_file(paths::calibration_json(out), json.dump(2) + "\n");
    return stats;
}

// ---- sweep: the full (score, w_s, R) grid ----

inline SweepResult run_sweep(const ExperimentConfig& config) {
    config.validate();
    const EmbeddingPools pools = pools_from_tables(load_or_train_embeddings(config));

    SweepParams params = config.sweep;
    params.keep_reports = config.dump_traces;
    const SweepResult result =
        evaluate_sweep(pools, config.stream, params, config.master_seed, config.threads);

    const std::filesystem::path out(config.output_dir);
    ensure_directory(out);

    std::string csv = "score,w_s,R,mean_latency,detection_rate,fp_per_100_days\n";
    for (const auto& cell : result.cells) {
        csv += cell.score + "," + std::to_string(cell.window_size) + "," +
               format_double(cell.reproduction_number) + "," + format_double(cell.mean_latency) +
               "," + format_double(cell.detection_rate) + "," +
               format_double(cell.fp_per_100_days) + "\n";
    }
    write_text_file(paths::results_csv(out), csv);

    nlohmann::json json{{"calibration", nlohmann::json::array()},
                        {"cells", nlohmann::json::array()}};
    for (const auto& s : result.calibrations) {
        json["calibration"].push_back({{"score", score_name(s.kind)},
                                       {"w_s", s.window_size},
                                       {"mean", s.mean},
                                       {"stddev", s.stddev},
                                       {"n_scores", s.n_scores},
                                       {"n_streams", s.n_streams}});
    }
    for (const auto& cell : result.cells) {
        json["cells"].push_back({{"score", cell.score},
                                 {"w_s", cell.window_size},
                                 {"R", cell.reproduction_number},
                                 {"mean_latency", cell.mean_latency},
                                 {"detection_rate", cell.detection_rate},
                                 {"fp_per_100_days", cell.fp_per_100_days},
                                 {"n_detected", cell.n_detected},
                                 {"n_replicates", cell.n_replicates},
                                 {"mean_fp_episodes", cell.mean_fp_episodes},
                                 {"mean_fp_steps", cell.mean_fp_steps}});
    }
    write_text_file(paths::results_json(out), json.dump(2) + "\n");

    if (config.dump_traces && !result.reports.empty()) {
        ensure_directory(paths::traces_dir(out));
        for (std::size_t r = 0; r < result.reports.size(); ++r) {
            for (std::size_t rep = 0; rep < result.reports[r].size(); ++rep) {
                for (std::size_t w = 0; w < result.reports[r][rep].size(); ++w) {
                    const DetectionReport& report = result.reports[r][rep][w];
                    std::string trace = "day,ped,kde\n";
                    for (const TracePoint& p : report.trace) {
                        trace += format_double(p.day) + "," +
                                 format_double(p.distance_deviation) + "," +
                                 format_double(p.kde_log_likelihood) + "\n";
                    }
                    const std::string name =
                        "trace_R" + format_double(params.r_values[r]) + "_w" +
                        std::to_string(params.window_sizes[w]) + "_rep" + std::to_string(rep) +
                        ".csv";
                    write_text_file(paths::traces_dir(out) / name, trace);
                }
            }
        }
    }
    return result;
}

// ---- ablation: descriptor-variant comparison ----

inline VolumesByDisease build_ablation_cohort(const ExperimentConfig& config) {
    VolumesByDisease volumes;
    const auto n_diseases = static_cast<int>(config.diseases.size());
    const int per_disease = config.ablation_cases_per_disease;
    for (const auto& disease : config.diseases)
        volumes[disease.id].resize(static_cast<std::size_t>(per_disease));
    parallel_for(n_diseases * per_disease, config.threads, [&](int task) {
        const int d = task / per_disease;
        const int i = task % per_disease;
        const auto& disease = config.diseases[static_cast<std::size_t>(d)];
        const std::uint64_t seed =
            derive_seed(config.master_seed, detail::kAblationTag + static_cast<std::uint64_t>(d),
                        static_cast<std::uint64_t>(i));
        volumes[disease.id][static_cast<std::size_t>(i)] =
            synthesize_volume(disease, config.volume_shape, seed);
    });
    return volumes;
}

struct AblationArtifacts {
    AblationResult result;
    AblationDescriptors descriptors;
};

inline AblationArtifacts run_ablation(const ExperimentConfig& config, bool with_projection) {
    config.validate();
    const std::filesystem::path out(config.output_dir);
    ensure_directory(out);

    const FilterBank bank = FilterBank::fixed_random(config.filter_bank_seed);
    AblationArtifacts artifacts;
    artifacts.descriptors = collect_ablation_descriptors(build_ablation_cohort(config), bank);
    artifacts.result = ablation(artifacts.descriptors, config.ablation_embedding_dim);

    std::string csv = "variant,silhouette\n";
    csv += "fused," + format_double(artifacts.result.fused) + "\n";
    csv += "gram_only," + format_double(artifacts.result.gram_only) + "\n";
    csv += "raw_features," + format_double(artifacts.result.raw_features) + "\n";
    write_text_file(paths::ablation_csv(out), csv);

    if (with_projection) {
        const Eigen::MatrixXd projected = project_2d(artifacts.descriptors.fused);
        std::string proj = "label,x,y\n";
        for (Eigen::Index i = 0; i < projected.rows(); ++i) {
            proj += artifacts.descriptors.labels[static_cast<std::size_t>(i)] + "," +
                    format_double(projected(i, 0)) + "," + format_double(projected(i, 1)) + "\n";
        }
        write_text_file(paths::ablation_projection_csv(out), proj);
        write_scatter_svg(paths::ablation_svg(out), projected, artifacts.descriptors.labels);
    }
    return artifacts;
}

// Minimal SVG scatter of labeled 2D points.
inline void write_scatter_svg(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                              const std::vector<std::string>& labels) {
    static const std::vector<std::string> palette = {"#4c72b0", "#dd8452", "#55a868",
                                                     "#c44e52", "#8172b3", "#937860"};
    std::map<std::string, std::string> color;
    for (const auto& label : labels)
        if (!color.count(label)) color[label] = palette[color.size() % palette.size()];

    const double x_min = points.col(0).minCoeff(), x_max = points.col(0).maxCoeff();
    const double y_min = points.col(1).minCoeff(), y_max = points.col(1).maxCoeff();
    const double span_x = std::max(x_max - x_min, 1e-12);
    const double span_y = std::max(y_max - y_min, 1e-12);
    constexpr double kSize = 640.0, kMargin = 50.0;

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
                      "viewBox=\"0 0 640 640\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"white\"/>\n";
    svg += "<rect x=\"" + format_double(kMargin) + "\" y=\"" + format_double(kMargin) +
           "\" width=\"" + format_double(kSize - 2 * kMargin) + "\" height=\"" +
           format_double(kSize - 2 * kMargin) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double px =
            kMargin + (points(i, 0) - x_min) / span_x * (kSize - 2 * kMargin);
        const double py =
            kSize - kMargin - (points(i, 1) - y_min) / span_y * (kSize - 2 * kMargin);
        svg += "<circle cx=\"" + format_double(px) + "\" cy=\"" + format_double(py) +
               "\" r=\"4\" fill=\"" + color[labels[static_cast<std::size_t>(i)]] +
               "\" fill-opacity=\"0.7\"/>\n";
    }
    double ly = kMargin + 14.0;
    for (const auto& [label, c] : color) {
        svg += "<circle cx=\"" + format_double(kMargin + 12.0) + "\" cy=\"" +
               format_double(ly - 4.0) + "\" r=\"5\" fill=\"" + c + "\"/>\n";
        svg += "<text x=\"" + format_double(kMargin + 24.0) + "\" y=\"" + format_double(ly) +
               "\" font-family=\"sans-serif\" font-size=\"14\">" + label + "</text>\n";
        ly += 20.0;
    }
    svg += "</svg>\n";
    write_text_file(path, svg);
}

}  // namespace onset
