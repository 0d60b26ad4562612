#include "genconv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace genconv {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

json parse_or_throw(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid JSON in " + what);
    if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
    return j;
}

OptimizerConfig optimizer_from_json(const json& j) {
    reject_unknown_keys(j, {"type", "learning_rate", "beta1", "beta2", "epsilon"}, "optimizer");
    OptimizerConfig cfg;
    if (j.contains("type")) {
        std::string type = j.at("type").get<std::string>();
        if (type == "adam") cfg.type = OptimizerType::Adam;
        else if (type == "sgd") cfg.type = OptimizerType::Sgd;
        else throw ConfigError("unknown optimizer type '" + type + "'");
    }
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    return cfg;
}

json optimizer_to_json(const OptimizerConfig& cfg) {
    return {{"type", cfg.type == OptimizerType::Adam ? "adam" : "sgd"},
            {"learning_rate", cfg.learning_rate},
            {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},
            {"epsilon", cfg.epsilon}};
}

ModelConfig model_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"spatial_dims", "input_feature_dims", "num_classes", "activation_slope",
                         "activate_filter_output", "layers", "head", "optimizer", "epochs", "seed"},
                        "model config");
    ModelConfig cfg;
    if (j.contains("spatial_dims")) cfg.spatial_dims = j.at("spatial_dims").get<int>();
    if (j.contains("input_feature_dims")) cfg.input_feature_dims = j.at("input_feature_dims").get<int>();
    if (j.contains("num_classes")) cfg.num_classes = j.at("num_classes").get<int>();
    if (j.contains("activation_slope")) cfg.activation_slope = j.at("activation_slope").get<double>();
    if (j.contains("activate_filter_output"))
        cfg.activate_filter_output = j.at("activate_filter_output").get<bool>();
    if (!j.contains("layers")) throw ConfigError("model config missing 'layers'");
    for (const auto& lj : j.at("layers")) {
        reject_unknown_keys(lj, {"k", "stride", "hidden", "out_channels"}, "layer spec");
        LayerSpec spec;
        spec.k = lj.at("k").get<std::size_t>();
        if (lj.contains("stride")) spec.stride_fraction = lj.at("stride").get<double>();
        if (lj.contains("hidden")) spec.hidden = lj.at("hidden").get<std::vector<std::size_t>>();
        spec.out_channels = lj.at("out_channels").get<std::size_t>();
        cfg.layers.push_back(std::move(spec));
    }
    if (j.contains("head")) {
        reject_unknown_keys(j.at("head"), {"hidden"}, "head spec");
        if (j.at("head").contains("hidden"))
            cfg.head.hidden = j.at("head").at("hidden").get<std::vector<std::size_t>>();
    }
    if (j.contains("optimizer")) cfg.optimizer = optimizer_from_json(j.at("optimizer"));
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

json model_to_json(const ModelConfig& cfg) {
    json layers = json::array();
    for (const auto& l : cfg.layers)
        layers.push_back({{"k", l.k},
                          {"stride", l.stride_fraction},
                          {"hidden", l.hidden},
                          {"out_channels", l.out_channels}});
    return {{"spatial_dims", cfg.spatial_dims},
            {"input_feature_dims", cfg.input_feature_dims},
            {"num_classes", cfg.num_classes},
            {"activation_slope", cfg.activation_slope},
            {"activate_filter_output", cfg.activate_filter_output},
            {"layers", layers},
            {"head", {{"hidden", cfg.head.hidden}}},
            {"optimizer", optimizer_to_json(cfg.optimizer)},
            {"epochs", cfg.epochs},
            {"seed", cfg.seed}};
}

}  // namespace

std::string serialize_model_config(const ModelConfig& config) {
    return model_to_json(config).dump();
}

ModelConfig parse_model_config(const std::string& text) {
    return model_from_json(parse_or_throw(text, "model config"));
}

RunConfig parse_run_config(const std::string& text) {
    json j = parse_or_throw(text, "run config");
    reject_unknown_keys(j, {"model", "dataset", "out_dir"}, "run config");
    RunConfig cfg;
    if (!j.contains("model")) throw ConfigError("run config missing 'model'");
    cfg.model = model_from_json(j.at("model"));
    if (j.contains("dataset")) {
        const auto& dj = j.at("dataset");
        reject_unknown_keys(dj, {"type", "path", "points_per_cloud"}, "dataset config");
        cfg.dataset.type = dj.at("type").get<std::string>();
        if (cfg.dataset.type != "pcld" && cfg.dataset.type != "modelnet10")
            throw ConfigError("dataset type must be 'pcld' or 'modelnet10'");
        cfg.dataset.path = dj.at("path").get<std::string>();
        if (dj.contains("points_per_cloud"))
            cfg.dataset.points_per_cloud = dj.at("points_per_cloud").get<std::size_t>();
    }
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

}  // namespace genconv
