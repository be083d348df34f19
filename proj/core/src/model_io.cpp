#include "oscring/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace oscring {

namespace {

using nlohmann::json;

int require_int(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("model file: missing field '") + key + "'");
    if (!j.at(key).is_number_integer())
        throw ConfigError(std::string("model file: field '") + key + "' must be an integer");
    return j.at(key).get<int>();
}

/// "matrices"/"K" entries: offset string -> flat row-major array of n*n reals.
std::vector<Eigen::MatrixXd> parse_blocks(const json& j, const char* key, int n, int R) {
    std::vector<Eigen::MatrixXd> blocks(static_cast<size_t>(2 * R + 1),
                                        Eigen::MatrixXd::Zero(n, n));
    if (!j.contains(key)) return blocks;
    const json& table = j.at(key);
    if (!table.is_object())
        throw ConfigError(std::string("model file: '") + key + "' must map offsets to arrays");
    for (const auto& [offset_str, entry] : table.items()) {
        int offset = 0;
        try {
            size_t used = 0;
            offset = std::stoi(offset_str, &used);
            if (used != offset_str.size()) throw std::invalid_argument(offset_str);
        } catch (const std::exception&) {
            throw ConfigError(std::string("model file: '") + key + "' has non-integer offset key '" +
                              offset_str + "'");
        }
        if (offset < -R || offset > R)
            throw ConfigError(std::string("model file: '") + key + "' offset " + offset_str +
                              " outside [-R, R]");
        if (!entry.is_array() || static_cast<int>(entry.size()) != n * n)
            throw ConfigError(std::string("model file: '") + key + "' offset " + offset_str +
                              " must be a flat row-major array of " + std::to_string(n * n) +
                              " numbers");
        Eigen::MatrixXd block(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const json& value = entry.at(static_cast<size_t>(r * n + c));
                if (!value.is_number())
                    throw ConfigError(std::string("model file: '") + key + "' offset " + offset_str +
                                      " contains a non-numeric entry");
                block(r, c) = value.get<double>();
            }
        blocks[static_cast<size_t>(offset + R)] = block;
    }
    return blocks;
}

} // namespace

RingModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("model file: top level must be an object");
    static const char* known[] = {"n", "N", "R", "matrices", "K", "nonlinearity", "parameter_label"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* name : known) ok = ok || key == name;
        if (!ok) throw ConfigError("model file: unknown field '" + key + "'");
    }
    RingModel model;
    model.n = require_int(j, "n");
    model.N = require_int(j, "N");
    model.R = require_int(j, "R");
    if (model.n < 1 || model.N < 1 || model.R < 0)
        throw ConfigError("model file: need n >= 1, N >= 1, R >= 0");
    model.coupling_base = parse_blocks(j, "matrices", model.n, model.R);
    model.coupling_slope = parse_blocks(j, "K", model.n, model.R);
    if (j.contains("parameter_label")) {
        if (!j.at("parameter_label").is_string())
            throw ConfigError("model file: 'parameter_label' must be a string");
        model.parameter_label = j.at("parameter_label").get<std::string>();
    }

    std::string name = "none";
    if (j.contains("nonlinearity")) {
        const json& nl = j.at("nonlinearity");
        if (nl.is_string()) {
            name = nl.get<std::string>();
        } else if (nl.is_object()) {
            for (const auto& [key, value] : nl.items()) {
                (void)value;
                if (key != "name" && key != "params")
                    throw ConfigError("model file: unknown nonlinearity field '" + key + "'");
            }
            if (!nl.contains("name") || !nl.at("name").is_string())
                throw ConfigError("model file: nonlinearity needs a string 'name'");
            name = nl.at("name").get<std::string>();
            if (nl.contains("params")) {
                if (!nl.at("params").is_array())
                    throw ConfigError("model file: nonlinearity 'params' must be an array");
                for (const auto& value : nl.at("params")) {
                    if (!value.is_number())
                        throw ConfigError("model file: nonlinearity 'params' must be numbers");
                    model.nonlinearity_params.push_back(value.get<double>());
                }
            }
        } else {
            throw ConfigError("model file: 'nonlinearity' must be a name or {name, params}");
        }
    }
    set_builtin_nonlinearity(model, builtin_from_name(name));
    validate_model(model);
    return model;
}

RingModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& err) {
        throw ConfigError("model file '" + path + "': " + err.what());
    }
    return model_from_json(j);
}

nlohmann::json model_to_json(const RingModel& model) {
    json j;
    j["n"] = model.n;
    j["N"] = model.N;
    j["R"] = model.R;
    json matrices = json::object(), slopes = json::object();
    for (int m = -model.R; m <= model.R; ++m) {
        json base = json::array(), slope = json::array();
        for (int r = 0; r < model.n; ++r)
            for (int c = 0; c < model.n; ++c) {
                base.push_back(model.base_block(m)(r, c));
                slope.push_back(model.slope_block(m)(r, c));
            }
        matrices[std::to_string(m)] = base;
        slopes[std::to_string(m)] = slope;
    }
    j["matrices"] = matrices;
    j["K"] = slopes;
    if (model.builtin == BuiltinNonlinearity::custom)
        throw ConfigError("custom nonlinearities cannot be serialized to a model file");
    json nl;
    nl["name"] = builtin_name(model.builtin);
    if (!model.nonlinearity_params.empty()) nl["params"] = model.nonlinearity_params;
    j["nonlinearity"] = nl;
    j["parameter_label"] = model.parameter_label;
    return j;
}

void save_model(const RingModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << model_to_json(model).dump(2) << "\n";
}

} // namespace oscring
