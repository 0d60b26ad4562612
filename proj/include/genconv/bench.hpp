#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace genconv {

struct BenchRow {
    std::size_t n_points = 0;
    double knn_ms = 0.0;       // KD-tree build + query, median over runs
    double forward_ms = 0.0;   // one genconv forward pass, median over runs
    std::vector<double> knn_samples;
    std::vector<double> forward_samples;
};

struct BenchLayerSpec {
    std::vector<std::size_t> hidden{16, 16};
    std::size_t out_channels = 16;
};

// Times KNN (build + query) and one layer forward on seeded random 3D
// clouds, single-threaded, one unmeasured warm-up run per N. Point counts
// must be ascending.
std::vector<BenchRow> bench_scaling(const std::vector<std::size_t>& point_counts, std::size_t k,
                                    const BenchLayerSpec& layer, int repetitions,
                                    std::uint64_t seed = 0);

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

}  // namespace genconv
