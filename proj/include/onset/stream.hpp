#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onset/errors.hpp"
#include "onset/rng.hpp"

namespace onset {

// One case in the monitored stream. The label is ground truth for
// evaluation only; detection never reads it.
struct CaseEmbedding {
    std::string case_id;
    double timestamp = 0.0;  // days
    std::string label;
    Eigen::VectorXd vector;
};

struct StreamConfig {
    double horizon_days = 100.0;
    double onset_day = 50.0;
    double reproduction_number = 1.2;  // only used when n_novel > 0
    int n_known_per_disease = 200;
    int n_novel = 200;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(horizon_days > 0.0)) throw ConfigError("stream: horizon_days must be > 0");
        if (!(onset_day > 0.0 && onset_day < horizon_days))
            throw ConfigError("stream: need 0 < onset_day < horizon_days");
        if (n_known_per_disease < 0 || n_novel < 0)
            throw ConfigError("stream: case counts must be >= 0");
        if (n_novel > 0 && !(reproduction_number > 1.0))
            throw ConfigError("stream: reproduction_number must be > 1");
    }
};

struct CaseStream {
    std::vector<CaseEmbedding> cases;  // sorted by (timestamp, case_id)
    double onset_day = 0.0;
    double horizon_days = 0.0;
};

// Exponential arrival scale 1/ln(R); diverges as R -> 1 (no growth).
inline double exponential_scale(double reproduction_number) {
    if (!(reproduction_number > 1.0))
        throw ConfigError("exponential_scale: reproduction number must be > 1");
    return 1.0 / std::log(reproduction_number);
}

// i.i.d. uniform arrival times on [0, horizon]
inline std::vector<double> sample_known_timestamps(int n, double horizon, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_known_timestamps: n must be >= 0");
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (double& t : out) t = rng.uniform(0.0, horizon);
    return out;
}

// onset + Exp(1/ln(R)) arrival times, redrawing any draw that lands past the
// horizon so the within-window shape stays exponential.
inline std::vector<double> sample_novel_timestamps(int n, double onset, double horizon, double r,
                                                   std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_novel_timestamps: n must be >= 0");
    if (!(onset < horizon))
        throw ConfigError("sample_novel_timestamps: onset must precede horizon");
    const double scale = exponential_scale(r);
    const double accept = 1.0 - std::exp(-(horizon - onset) / scale);
    if (accept < 0.01)
        throw ConfigError("sample_novel_timestamps: acceptance rate below 1% "
                          "(reproduction number too close to 1 for this window)");
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (double& t : out) {
        do {
            t = onset + rng.exponential(scale);
        } while (t > horizon);
    }
    return out;
}

// Embedding pools keyed by disease label.
using EmbeddingPools = std::map<std::string, std::vector<CaseEmbedding>>;

// Merges known diseases (uniform arrivals) with the novel disease
// (exponential arrivals after onset) into one time-ordered stream.
// Pure function of (config, pools).
inline CaseStream build_stream(const StreamConfig& config, const EmbeddingPools& pools,
                               const std::string& novel_label = "D5") {
    config.validate();

    CaseStream stream;
    stream.onset_day = config.onset_day;
    stream.horizon_days = config.horizon_days;

    Rng rng(derive_seed(config.seed, 0x57F3A0));
    auto take = [](const EmbeddingPools::mapped_type& pool, int n, const std::string& label) {
        if (static_cast<int>(pool.size()) < n)
            throw ConfigError("stream: pool for " + label + " has " +
                              std::to_string(pool.size()) + " embeddings, needs " +
                              std::to_string(n));
    };

    for (const auto& [label, pool] : pools) {
        if (label == novel_label) continue;
        take(pool, config.n_known_per_disease, label);
        for (int i = 0; i < config.n_known_per_disease; ++i) {
            CaseEmbedding c = pool[static_cast<std::size_t>(i)];
            c.timestamp = rng.uniform(0.0, config.horizon_days);
            stream.cases.push_back(std::move(c));
        }
    }

    if (config.n_novel > 0) {
        const auto it = pools.find(novel_label);
        if (it == pools.end())
            throw ConfigError("stream: missing pool for novel disease " + novel_label);
        take(it->second, config.n_novel, novel_label);
        const double scale = exponential_scale(config.reproduction_number);
        const double accept =
            1.0 - std::exp(-(config.horizon_days - config.onset_day) / scale);
        if (accept < 0.01)
            throw ConfigError("stream: novel arrival acceptance rate below 1%");
        for (int i = 0; i < config.n_novel; ++i) {
            CaseEmbedding c = it->second[static_cast<std::size_t>(i)];
            do {
                c.timestamp = config.onset_day + rng.exponential(scale);
            } while (c.timestamp > config.horizon_days);
            stream.cases.push_back(std::move(c));
        }
    }

    std::sort(stream.cases.begin(), stream.cases.end(),
              [](const CaseEmbedding& a, const CaseEmbedding& b) {
                  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                  return a.case_id < b.case_id;
              });
    return stream;
}

}  // namespace onset
