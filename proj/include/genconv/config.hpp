#pragma once

#include <filesystem>
#include <string>

#include "genconv/model.hpp"

namespace genconv {

struct DatasetConfig {
    std::string type;   // "pcld" or "modelnet10"
    std::string path;
    std::size_t points_per_cloud = 1000;
};

// Top-level CLI configuration; unknown keys are rejected.
struct RunConfig {
    ModelConfig model;
    DatasetConfig dataset;
    std::string out_dir = ".";
};

std::string serialize_model_config(const ModelConfig& config);
ModelConfig parse_model_config(const std::string& text);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace genconv
