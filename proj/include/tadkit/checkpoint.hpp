#ifndef TADKIT_CHECKPOINT_HPP
#define TADKIT_CHECKPOINT_HPP

#include <fstream>
#include <string>
#include <vector>

#include "tadkit/config.hpp"
#include "tadkit/network.hpp"

namespace tadkit {

// Checkpoint container: "TADCKPT 1" magic, one JSON header line (precision,
// full run config, parameter names and shapes), a DATA sentinel, then raw
// little-endian arrays in header order.

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& model) {
    json header;
    header["precision"] = precision_name(model.config().precision);
    header["config"] = run_config_to_json(model.config());
    json params = json::array();
    for (const auto& p : model.params()) {
        params.push_back({{"name", p.name},
                          {"shape", {p.value.c, p.value.t, p.value.s}}});
    }
    header["params"] = params;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint to " + path);
    out << "TADCKPT 1\n" << header.dump() << "\nDATA\n";
    for (const auto& p : model.params()) {
        if (model.config().precision == Precision::f32) {
            std::vector<float> buf(p.value.v.begin(), p.value.v.end());
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
        } else {
            std::vector<double> buf(p.value.v.begin(), p.value.v.end());
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(double)));
        }
    }
}

inline json read_checkpoint_header(std::ifstream& in, const std::string& path) {
    std::string line;
    std::getline(in, line);
    if (line != "TADCKPT 1") throw DataError("bad checkpoint magic in " + path);
    std::getline(in, line);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError("checkpoint header parse error in " + path + ": " + e.what());
    }
    std::getline(in, line);
    if (line != "DATA") throw DataError("checkpoint missing DATA sentinel in " + path);
    return header;
}

// Config (and precision) stored in a checkpoint, without loading weights.
inline RunConfig checkpoint_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    const json header = read_checkpoint_header(in, path);
    RunConfig cfg = run_config_from_json(header.at("config"));
    cfg.precision = precision_from_name(header.at("precision").get<std::string>());
    return cfg;
}

template <typename T>
void load_checkpoint_params(const std::string& path, Model<T>& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    const json header = read_checkpoint_header(in, path);
    const Precision prec = precision_from_name(header.at("precision").get<std::string>());
    const json& params = header.at("params");
    if (params.size() != model.params().size()) {
        throw DataError("checkpoint parameter count mismatch");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = model.params()[i];
        if (params[i].at("name").get<std::string>() != p.name) {
            throw DataError("checkpoint parameter order mismatch at '" + p.name + "'");
        }
        const auto shape = params[i].at("shape").get<std::vector<int>>();
        if (shape != std::vector<int>{p.value.c, p.value.t, p.value.s}) {
            throw DataError("checkpoint shape mismatch for '" + p.name + "'");
        }
        if (prec == Precision::f32) {
            std::vector<float> buf(p.value.size());
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size() * sizeof(float)));
            for (size_t k = 0; k < buf.size(); ++k) p.value.v[k] = static_cast<T>(buf[k]);
        } else {
            std::vector<double> buf(p.value.size());
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size() * sizeof(double)));
            for (size_t k = 0; k < buf.size(); ++k) p.value.v[k] = static_cast<T>(buf[k]);
        }
        if (!in) throw DataError("truncated checkpoint payload in " + path);
    }
}

}  // namespace tadkit

#endif
