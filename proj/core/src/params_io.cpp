#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

namespace {

constexpr const char* kParamsFormat = "rsma-unfold-params";
constexpr const char* kParamsVersion = "1";

std::vector<double> to_vector(const double* data, Eigen::Index n) { return {data, data + n}; }

RVector read_array(const nlohmann::json& j, const char* key, std::size_t expected, std::size_t layer) {
    const auto values = j.at(key).get<std::vector<double>>();
    if (values.size() != expected) {
        throw std::runtime_error("params: layer " + std::to_string(layer + 1) + " field '" + key + "' has " +
                                 std::to_string(values.size()) + " entries, expected " + std::to_string(expected));
    }
    return Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

std::string params_to_json(const NetworkParams& params) {
    params.validate();
    const int U = params.num_users();
    nlohmann::json j;
    j["format"] = kParamsFormat;
    j["version"] = kParamsVersion;
    j["num_users"] = U;
    j["num_layers"] = params.num_layers();
    j["lambda"] = params.lambda;
    j["shapes"] = {{"w0", {U + 2}}, {"w", {U, U + 2}}, {"eta", {U, U + 1}}};
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerParams& l : params.layers) {
        const RMatrix w = l.w;
        const RMatrix eta = l.eta;
        layers.push_back({{"w0", to_vector(l.w0.data(), l.w0.size())},
                          {"w", to_vector(w.data(), w.size())},
                          {"eta", to_vector(eta.data(), eta.size())}});
    }
    j["layers"] = std::move(layers);
    return j.dump(2);
}

NetworkParams params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("params: malformed JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kParamsFormat) {
            throw std::runtime_error("params: unexpected format tag");
        }
        if (j.at("version").get<std::string>() != kParamsVersion) {
            throw std::runtime_error("params: unsupported version " + j.at("version").get<std::string>());
        }
        const int U = j.at("num_users").get<int>();
        const int N = j.at("num_layers").get<int>();
        const auto& layers = j.at("layers");
        if (U < 1 || N < 1 || static_cast<int>(layers.size()) != N) {
            throw std::runtime_error("params: layer count does not match num_layers");
        }
        NetworkParams params;
        params.lambda = j.at("lambda").get<double>();
        for (std::size_t n = 0; n < layers.size(); ++n) {
            LayerParams l = LayerParams::zeros(U);
            l.w0 = read_array(layers[n], "w0", U + 2, n);
            l.w = read_array(layers[n], "w", static_cast<std::size_t>(U) * (U + 2), n).reshaped<Eigen::RowMajor>(U, U + 2);
            l.eta = read_array(layers[n], "eta", static_cast<std::size_t>(U) * (U + 1), n)
                        .reshaped<Eigen::RowMajor>(U, U + 1);
            params.layers.push_back(std::move(l));
        }
        params.validate();
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("params: ") + e.what());
    }
}

void save_params(const std::string& path, const NetworkParams& params) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << params_to_json(params) << '\n';
}

NetworkParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return params_from_json(buffer.str());
}

} // namespace rsma
