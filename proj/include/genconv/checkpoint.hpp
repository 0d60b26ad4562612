#pragma once

#include <filesystem>

#include "genconv/model.hpp"

namespace genconv {

// Checkpoint file ("GCKP"): version, model config echo, flattened f32
// parameters, Adam moments, epoch counter, training RNG state. Round-trips
// bit-exactly.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace genconv
