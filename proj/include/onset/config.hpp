#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "onset/autoencoder.hpp"
#include "onset/detector.hpp"
#include "onset/errors.hpp"
#include "onset/io.hpp"
#include "onset/stream.hpp"
#include "onset/volume.hpp"

namespace onset {

// Whole-experiment configuration: a flat key = value file with '#' comments.
// Unknown keys are rejected so typos cannot silently fall back to defaults.
struct ExperimentConfig {
    std::uint64_t master_seed = 42;
    int threads = 0;  // 0 = all hardware threads
    std::string output_dir = "out";

    Shape3 volume_shape = kDefaultVolumeShape;
    std::uint64_t filter_bank_seed = kDefaultFilterBankSeed;
    int cases_per_disease = 200;
    bool write_volumes = false;

    std::vector<DiseaseConfig> diseases = canonical_disease_configs();
    std::string novel_label = "D5";

    AutoencoderSpec ae;

    StreamConfig stream;  // seed and reproduction_number are set per run

    SweepParams sweep;
    bool dump_traces = false;

    int ablation_cases_per_disease = 100;
    int ablation_embedding_dim = 32;

    void validate() const {
        for (int d : volume_shape)
            if (d < 8) throw ConfigError("volume.shape dims must be >= 8");
        if (cases_per_disease < 1) throw ConfigError("volume.cases_per_disease must be >= 1");
        if (diseases.empty()) throw ConfigError("no disease configs");
        bool has_novel = false;
        for (const auto& d : diseases) {
            d.validate();
            has_novel = has_novel || d.id == novel_label;
        }
        if (!has_novel) throw ConfigError("novel disease " + novel_label + " not configured");
        stream.validate();
        sweep.validate();
        if (ablation_cases_per_disease < 20)
            throw ConfigError("ablation.cases_per_disease must be >= 20");
        if (ablation_embedding_dim < 2) throw ConfigError("ablation.embedding_dim must be >= 2");
        if (threads < 0) throw ConfigError("threads must be >= 0");
    }

    DiseaseConfig& disease(const std::string& id) {
        for (auto& d : diseases)
            if (d.id == id) return d;
        throw ConfigError("unknown disease id " + id);
    }
    const DiseaseConfig& disease(const std::string& id) const {
        return const_cast<ExperimentConfig*>(this)->disease(id);
    }
};

namespace detail {

inline Fragmentation parse_fragmentation(const std::string& v) {
    if (v == "low") return Fragmentation::Low;
    if (v == "high") return Fragmentation::High;
    throw ConfigError("fragmentation must be low|high, got '" + v + "'");
}

inline Location parse_location(const std::string& v) {
    if (v == "random") return Location::Random;
    if (v == "front") return Location::Front;
    if (v == "back") return Location::Back;
    throw ConfigError("location must be random|front|back, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& v) {
    std::vector<int> out;
    for (const auto& tok : split_whitespace(v)) out.push_back(static_cast<int>(parse_int(tok)));
    return out;
}

inline std::vector<double> parse_double_list(const std::string& v) {
    std::vector<double> out;
    for (const auto& tok : split_whitespace(v)) out.push_back(parse_double(tok));
    return out;
}

}  // namespace detail

// Applies one key = value assignment. Shared by the file loader and by
// command-line overrides.
inline void apply_config_entry(ExperimentConfig& config, const std::string& key,
                               const std::string& value) {
    using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"master_seed", [](auto& c, const auto& v) { c.master_seed = parse_uint64(v); }},
        {"threads", [](auto& c, const auto& v) { c.threads = static_cast<int>(parse_int(v)); }},
        {"output_dir", [](auto& c, const auto& v) { c.output_dir = v; }},
        {"volume.shape",
         [](auto& c, const auto& v) {
             const auto dims = detail::parse_int_list(v);
             if (dims.size() != 3) throw ConfigError("volume.shape needs 3 dims");
             c.volume_shape = {dims[0], dims[1], dims[2]};
         }},
        {"volume.filter_bank_seed",
         [](auto& c, const auto& v) { c.filter_bank_seed = parse_uint64(v); }},
        {"volume.cases_per_disease",
         [](auto& c, const auto& v) { c.cases_per_disease = static_cast<int>(parse_int(v)); }},
        {"volume.write_volumes", [](auto& c, const auto& v) { c.write_volumes = parse_bool(v); }},
        {"stream.horizon_days",
         [](auto& c, const auto& v) { c.stream.horizon_days = parse_double(v); }},
        {"stream.onset_day", [](auto& c, const auto& v) { c.stream.onset_day = parse_double(v); }},
        {"stream.n_known_per_disease",
         [](auto& c, const auto& v) {
             c.stream.n_known_per_disease = static_cast<int>(parse_int(v));
         }},
        {"stream.n_novel",
         [](auto& c, const auto& v) { c.stream.n_novel = static_cast<int>(parse_int(v)); }},
        {"stream.novel_disease", [](auto& c, const auto& v) { c.novel_label = v; }},
        {"ae.encoder_widths",
         [](auto& c, const auto& v) { c.ae.encoder_widths = detail::parse_int_list(v); }},
        {"ae.decoder_widths",
         [](auto& c, const auto& v) { c.ae.decoder_widths = detail::parse_int_list(v); }},
        {"ae.learning_rate",
         [](auto& c, const auto& v) { c.ae.learning_rate = parse_double(v); }},
        {"ae.epochs", [](auto& c, const auto& v) { c.ae.epochs = static_cast<int>(parse_int(v)); }},
        {"ae.batch_size",
         [](auto& c, const auto& v) { c.ae.batch_size = static_cast<int>(parse_int(v)); }},
        {"detector.window_sizes",
         [](auto& c, const auto& v) { c.sweep.window_sizes = detail::parse_int_list(v); }},
        {"detector.sensitivity",
         [](auto& c, const auto& v) { c.sweep.sensitivity = parse_double(v); }},
        {"detector.r_values",
         [](auto& c, const auto& v) { c.sweep.r_values = detail::parse_double_list(v); }},
        {"detector.n_replicates",
         [](auto& c, const auto& v) { c.sweep.n_replicates = static_cast<int>(parse_int(v)); }},
        {"detector.n_calibration_streams",
         [](auto& c, const auto& v) {
             c.sweep.n_calibration_streams = static_cast<int>(parse_int(v));
         }},
        {"detector.kde_two_sided",
         [](auto& c, const auto& v) { c.sweep.options.kde_two_sided = parse_bool(v); }},
        {"detector.fixed_baseline",
         [](auto& c, const auto& v) { c.sweep.options.fixed_baseline = parse_bool(v); }},
        {"detector.dump_traces", [](auto& c, const auto& v) { c.dump_traces = parse_bool(v); }},
        {"ablation.cases_per_disease",
         [](auto& c, const auto& v) {
             c.ablation_cases_per_disease = static_cast<int>(parse_int(v));
         }},
        {"ablation.embedding_dim",
         [](auto& c, const auto& v) { c.ablation_embedding_dim = static_cast<int>(parse_int(v)); }},
    };

    const auto it = setters.find(key);
    if (it != setters.end()) {
        it->second(config, value);
        return;
    }

    // disease.<id>.<field>
    if (key.rfind("disease.", 0) == 0) {
        const std::string rest = key.substr(8);
        const std::size_t dot = rest.find('.');
        if (dot == std::string::npos) throw ConfigError("unknown config key '" + key + "'");
        const std::string id = rest.substr(0, dot);
        const std::string field = rest.substr(dot + 1);
        DiseaseConfig& d = config.disease(id);
        if (field == "fragmentation") {
            d.fragmentation = detail::parse_fragmentation(value);
        } else if (field == "location") {
            d.location = detail::parse_location(value);
        } else if (field == "lesion_fraction") {
            d.lesion_fraction = parse_double(value);
        } else if (field == "intensity") {
            const auto range = detail::parse_double_list(value);
            if (range.size() != 2) throw ConfigError("disease intensity needs 2 values");
            d.intensity_min = range[0];
            d.intensity_max = range[1];
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
        return;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            if (begin == std::string::npos) return std::string{};
            const auto end = s.find_last_not_of(" \t\r");
            return s.substr(begin, end - begin + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_number) + ": empty key");
        try {
            apply_config_entry(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    return config;
}

inline ExperimentConfig load_config(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

// Round-trippable dump of every setting.
inline std::string dump_config(const ExperimentConfig& c) {
    std::string out;
    auto line = [&out](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    auto join_ints = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
        return s;
    };
    auto join_doubles = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
        return s;
    };

    line("master_seed", std::to_string(c.master_seed));
    line("threads", std::to_string(c.threads));
    line("output_dir", c.output_dir);
    out += "\n";
    line("volume.shape", join_ints({c.volume_shape[0], c.volume_shape[1], c.volume_shape[2]}));
    line("volume.filter_bank_seed", std::to_string(c.filter_bank_seed));
    line("volume.cases_per_disease", std::to_string(c.cases_per_disease));
    line("volume.write_volumes", c.write_volumes ? "true" : "false");
    out += "\n";
    for (const auto& d : c.diseases) {
        line("disease." + d.id + ".fragmentation", to_string(d.fragmentation));
        line("disease." + d.id + ".location", to_string(d.location));
        line("disease." + d.id + ".lesion_fraction", format_double(d.lesion_fraction));
        line("disease." + d.id + ".intensity",
             format_double(d.intensity_min) + " " + format_double(d.intensity_max));
    }
    out += "\n";
    line("ae.encoder_widths", join_ints(c.ae.encoder_widths));
    line("ae.decoder_widths", join_ints(c.ae.decoder_widths));
    line("ae.learning_rate", format_double(c.ae.learning_rate));
    line("ae.epochs", std::to_string(c.ae.epochs));
    line("ae.batch_size", std::to_string(c.ae.batch_size));
    out += "\n";
    line("stream.horizon_days", format_double(c.stream.horizon_days));
    line("stream.onset_day", format_double(c.stream.onset_day));
    line("stream.n_known_per_disease", std::to_string(c.stream.n_known_per_disease));
    line("stream.n_novel", std::to_string(c.stream.n_novel));
    line("stream.novel_disease", c.novel_label);
    out += "\n";
    line("detector.window_sizes", join_ints(c.sweep.window_sizes));
    line("detector.sensitivity", format_double(c.sweep.sensitivity));
    line("detector.r_values", join_doubles(c.sweep.r_values));
    line("detector.n_replicates", std::to_string(c.sweep.n_replicates));
    line("detector.n_calibration_streams", std::to_string(c.sweep.n_calibration_streams));
    line("detector.kde_two_sided", c.sweep.options.kde_two_sided ? "true" : "false");
    line("detector.fixed_baseline", c.sweep.options.fixed_baseline ? "true" : "false");
    line("detector.dump_traces", c.dump_traces ? "true" : "false");
    out += "\n";
    line("ablation.cases_per_disease", std::to_string(c.ablation_cases_per_disease));
    line("ablation.embedding_dim", std::to_string(c.ablation_embedding_dim));
    return out;
}

}  // namespace onset
