#include "schedlab/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "schedlab/version.hpp"

namespace schedlab {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string hex64(std::uint64_t value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty())
        throw Error("model JSON: " + where + " must be a non-empty array of rows");
    const size_t cols = rows[0].is_array() ? rows[0].size() : 0;
    if (cols == 0) throw Error("model JSON: " + where + " rows must be non-empty arrays");
    Eigen::MatrixXd M(rows.size(), cols);
    for (size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != cols)
            throw Error("model JSON: " + where + " is ragged");
        for (size_t c = 0; c < cols; ++c) M(r, c) = rows[r][c].get<double>();
    }
    return M;
}

void append_matrix(std::string& out, const Eigen::MatrixXd& M) {
    out += '[';
    for (long r = 0; r < M.rows(); ++r) {
        if (r) out += ',';
        out += '[';
        for (long c = 0; c < M.cols(); ++c) {
            if (c) out += ',';
            out += format_double(M(r, c));
        }
        out += ']';
    }
    out += ']';
}

}  // namespace

std::vector<ProcessModel> parse_models(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model JSON: parse failure: ") + e.what());
    }
    const nlohmann::json* array = &doc;
    if (doc.is_object()) {
        if (!doc.contains("models"))
            throw Error("model JSON: object form requires a \"models\" array");
        array = &doc["models"];
    }
    if (!array->is_array()) throw Error("model JSON: expected an array of models");

    std::vector<ProcessModel> models;
    models.reserve(array->size());
    for (const auto& item : *array) {
        for (const char* key : {"id", "A", "C", "Q", "R", "lambda", "comm_cost"})
            if (!item.contains(key))
                throw Error(std::string("model JSON: missing field \"") + key + "\"");
        ProcessModel model;
        model.id = item["id"].get<int>();
        model.A = matrix_from_json(item["A"], "A");
        model.C = matrix_from_json(item["C"], "C");
        model.Q = matrix_from_json(item["Q"], "Q");
        model.R = matrix_from_json(item["R"], "R");
        model.lambda = item["lambda"].get<double>();
        model.comm_cost = item["comm_cost"].get<double>();
        validate(model);
        models.push_back(std::move(model));
    }
    return models;
}

std::vector<ProcessModel> load_models(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_models: cannot open " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_models(text.str());
}

std::string models_to_json(std::span<const ProcessModel> models,
                           const std::string& metadata_json) {
    std::string out = "{";
    if (!metadata_json.empty()) out += "\"metadata\":" + metadata_json + ",";
    out += "\"models\":[";
    bool first = true;
    for (const auto& model : models) {
        if (!first) out += ',';
        first = false;
        out += "{\"id\":" + std::to_string(model.id) + ",\"A\":";
        append_matrix(out, model.A);
        out += ",\"C\":";
        append_matrix(out, model.C);
        out += ",\"Q\":";
        append_matrix(out, model.Q);
        out += ",\"R\":";
        append_matrix(out, model.R);
        out += ",\"lambda\":" + format_double(model.lambda);
        out += ",\"comm_cost\":" + format_double(model.comm_cost) + "}";
    }
    out += "]}";
    return out;
}

void save_models(const std::string& path, std::span<const ProcessModel> models,
                 const std::string& metadata_json) {
    std::ofstream out(path);
    if (!out) throw Error("save_models: cannot open " + path);
    out << models_to_json(models, metadata_json) << '\n';
}

}  // namespace schedlab
