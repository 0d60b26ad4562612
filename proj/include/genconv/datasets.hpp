#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genconv/cloud.hpp"
#include "genconv/common.hpp"

namespace genconv {

struct TriangleMesh {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<int, 3>> faces;
};

enum class ToyShape { Square, Circle };

ToyShape toy_shape_from_name(const std::string& name);

// Points sampled uniformly along the shape perimeter with Gaussian jitter of
// std = jitter * size. Circle radius = size; square side = size. D = 0.
LabeledCloud gen_toy_cloud(ToyShape shape, std::size_t n_points, float center_x, float center_y,
                           float size, float jitter, std::uint64_t seed);

// OFF mesh reader. Tolerates the ModelNet malformation where "OFF" and the
// counts share the first line. Faces with more than 3 vertices are
// fan-triangulated.
TriangleMesh parse_off(const std::string& text);
TriangleMesh load_off(const std::filesystem::path& path);

// Area-weighted triangle choice + uniform barycentric sampling.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed);

// Internal cloud cache format ("PCLD").
void save_pcld(const LabeledCloud& sample, const std::filesystem::path& path);
LabeledCloud load_pcld(const std::filesystem::path& path);

struct ModelNetData {
    std::vector<LabeledCloud> train;
    std::vector<LabeledCloud> test;
    std::vector<std::string> class_names;
    std::vector<std::string> warnings;   // itemized per-file load failures
};

// ModelNet10 layout: root/<class>/{train,test}/*.off. Classes sorted
// lexicographically for stable label indices; each mesh sampled to
// `points_per_cloud` points and unit-sphere normalized.
ModelNetData load_modelnet10(const std::filesystem::path& root, std::size_t points_per_cloud = 1000,
                             std::uint64_t seed = 0);

}  // namespace genconv
