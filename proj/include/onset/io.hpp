#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "onset/autoencoder.hpp"
#include "onset/errors.hpp"
#include "onset/stream.hpp"
#include "onset/volume.hpp"

namespace onset {

// Shortest round-trip decimal form; keeps CSV output byte-stable and
// re-readable without precision loss.
inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("expected a number, got '" + text + "'");
    return value;
}

inline long long parse_int(const std::string& text) {
    long long value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("expected an integer, got '" + text + "'");
    return value;
}

inline std::uint64_t parse_uint64(const std::string& text) {
    std::uint64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("expected an unsigned integer, got '" + text + "'");
    return value;
}

inline bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("expected true/false, got '" + text + "'");
}

inline std::vector<std::string> split_whitespace(const std::string& text) {
    std::vector<std::string> parts;
    std::istringstream in(text);
    std::string token;
    while (in >> token) parts.push_back(token);
    return parts;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    if (!std::filesystem::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// ---- anomaly volumes: raw little-endian float32 plus a JSON sidecar ----

inline void write_volume(const AnomalyVolume& volume, const std::filesystem::path& base_path,
                         const std::string& config_id, std::uint64_t seed) {
    const std::filesystem::path raw_path = base_path.string() + ".raw";
    std::ofstream out(raw_path, std::ios::binary);
    if (!out) throw IoError("cannot open " + raw_path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(volume.data.data.data()),
              static_cast<std::streamsize>(volume.data.size() * sizeof(float)));
    if (!out) throw IoError("write failed for " + raw_path.string());

    nlohmann::json sidecar{{"shape", {volume.data.shape[0], volume.data.shape[1],
                                      volume.data.shape[2]}},
                           {"config_id", config_id},
                           {"seed", seed},
                           {"dtype", "float32"},
                           {"byte_order", "little_endian"}};
    write_text_file(base_path.string() + ".json", sidecar.dump(2) + "\n");
}

inline Grid3<float> read_volume_raw(const std::filesystem::path& path, const Shape3& shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Grid3<float> grid(shape);
    in.read(reinterpret_cast<char*>(grid.data.data()),
            static_cast<std::streamsize>(grid.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != grid.size() * sizeof(float))
        throw IoError("short read from " + path.string());
    return grid;
}

// ---- case tables: case_id, timestamp, label, value columns ----

struct CaseTable {
    std::vector<std::string> case_ids;
    std::vector<double> timestamps;
    std::vector<std::string> labels;
    Eigen::MatrixXd values;
};

inline void write_case_csv(const std::filesystem::path& path, const CaseTable& table,
                           const std::string& value_prefix) {
    std::string out = "case_id,timestamp,label";
    for (Eigen::Index j = 0; j < table.values.cols(); ++j)
        out += "," + value_prefix + std::to_string(j);
    out += "\n";
    for (std::size_t i = 0; i < table.case_ids.size(); ++i) {
        out += table.case_ids[i];
        out += ",";
        out += format_double(table.timestamps[i]);
        out += ",";
        out += table.labels[i];
        for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
            out += ",";
            out += format_double(table.values(static_cast<Eigen::Index>(i), j));
        }
        out += "\n";
    }
    write_text_file(path, out);
}

inline CaseTable read_case_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv: " + path.string());

    std::vector<std::vector<double>> value_rows;
    CaseTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() < 4) throw IoError("malformed csv row in " + path.string());
        table.case_ids.push_back(fields[0]);
        table.timestamps.push_back(parse_double(fields[1]));
        table.labels.push_back(fields[2]);
        std::vector<double> values;
        values.reserve(fields.size() - 3);
        for (std::size_t j = 3; j < fields.size(); ++j) values.push_back(parse_double(fields[j]));
        value_rows.push_back(std::move(values));
    }
    if (value_rows.empty()) throw IoError("no rows in " + path.string());
    table.values.resize(static_cast<Eigen::Index>(value_rows.size()),
                        static_cast<Eigen::Index>(value_rows.front().size()));
    for (std::size_t i = 0; i < value_rows.size(); ++i) {
        if (value_rows[i].size() != value_rows.front().size())
            throw IoError("ragged csv rows in " + path.string());
        for (std::size_t j = 0; j < value_rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                value_rows[i][j];
    }
    return table;
}

// ---- trained reducer: JSON header line + float64 blob ----
// Blob layout: scaler offset, scaler scale, then per layer the Eigen
// column-major weight data followed by the bias.

struct Reducer {
    MinMaxScaler scaler;
    Autoencoder model;

    Eigen::VectorXd embed(const Eigen::VectorXd& descriptor) const {
        return model.encode(scaler.transform(descriptor));
    }
};

inline void save_reducer(const std::filesystem::path& path, const Reducer& reducer) {
    const auto& spec = reducer.model.spec();
    nlohmann::json header{{"format", "onset-reducer"},
                          {"version", 1},
                          {"input_dim", reducer.model.input_dim()},
                          {"encoder_widths", spec.encoder_widths},
                          {"decoder_widths", spec.decoder_widths},
                          {"learning_rate", spec.learning_rate},
                          {"epochs", spec.epochs},
                          {"batch_size", spec.batch_size},
                          {"seed", reducer.model.seed()},
                          {"byte_order", "little_endian"}};

    std::vector<double> blob;
    auto append = [&blob](const double* data, std::size_t count) {
        blob.insert(blob.end(), data, data + count);
    };
    append(reducer.scaler.offset.data(), static_cast<std::size_t>(reducer.scaler.offset.size()));
    append(reducer.scaler.scale.data(), static_cast<std::size_t>(reducer.scaler.scale.size()));
    for (std::size_t l = 0; l < reducer.model.weights().size(); ++l) {
        append(reducer.model.weights()[l].data(),
               static_cast<std::size_t>(reducer.model.weights()[l].size()));
        append(reducer.model.biases()[l].data(),
               static_cast<std::size_t>(reducer.model.biases()[l].size()));
    }
    header["n_values"] = blob.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << header.dump() << "\n";
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size() * sizeof(double)));
    if (!out) throw IoError("write failed for " + path.string());
}

inline Reducer load_reducer(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header_line;
    if (!std::getline(in, header_line)) throw IoError("truncated reducer file " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad reducer header in " + path.string() + ": " + e.what());
    }
    if (header.value("format", "") != "onset-reducer")
        throw IoError("not a reducer file: " + path.string());

    AutoencoderSpec spec;
    spec.encoder_widths = header.at("encoder_widths").get<std::vector<int>>();
    spec.decoder_widths = header.at("decoder_widths").get<std::vector<int>>();
    spec.learning_rate = header.at("learning_rate").get<double>();
    spec.epochs = header.at("epochs").get<int>();
    spec.batch_size = header.at("batch_size").get<int>();
    const int input_dim = header.at("input_dim").get<int>();
    const auto seed = header.at("seed").get<std::uint64_t>();
    const auto n_values = header.at("n_values").get<std::size_t>();

    std::vector<double> blob(n_values);
    in.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(n_values * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != n_values * sizeof(double))
        throw IoError("short read from " + path.string());

    Reducer reducer{MinMaxScaler{}, Autoencoder(spec, input_dim, seed)};
    std::size_t pos = 0;
    auto take = [&](double* dst, std::size_t count) {
        if (pos + count > blob.size()) throw IoError("truncated reducer blob " + path.string());
        std::memcpy(dst, blob.data() + pos, count * sizeof(double));
        pos += count;
    };
    reducer.scaler.offset.resize(input_dim);
    reducer.scaler.scale.resize(input_dim);
    take(reducer.scaler.offset.data(), static_cast<std::size_t>(input_dim));
    take(reducer.scaler.scale.data(), static_cast<std::size_t>(input_dim));
    for (std::size_t l = 0; l < reducer.model.weights().size(); ++l) {
        take(reducer.model.weights()[l].data(),
             static_cast<std::size_t>(reducer.model.weights()[l].size()));
        take(reducer.model.biases()[l].data(),
             static_cast<std::size_t>(reducer.model.biases()[l].size()));
    }
    if (pos != blob.size()) throw IoError("trailing data in reducer blob " + path.string());
    return reducer;
}

}  // namespace onset
