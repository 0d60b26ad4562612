#include "genconv/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include "genconv/genconv.hpp"
#include "genconv/rng.hpp"

namespace genconv {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

PointCloud random_cloud(std::size_t n, Rng& rng) {
    PointCloud cloud(3, 0, n);
    for (auto& v : cloud.points.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return cloud;
}

template <typename Fn>
double time_ms(Fn&& fn) {
    auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

std::vector<BenchRow> bench_scaling(const std::vector<std::size_t>& point_counts, std::size_t k,
                                    const BenchLayerSpec& layer_spec, int repetitions,
                                    std::uint64_t seed) {
    if (!std::is_sorted(point_counts.begin(), point_counts.end()))
        throw ConfigError("bench_scaling: point counts must be ascending");
    if (repetitions < 1) throw ConfigError("bench_scaling: repetitions must be >= 1");

    Rng init_rng(seed, "bench-init");
    GenConvLayerT<float> layer;
    std::vector<std::size_t> widths{4};   // dx, dy, dz, distance; D = 0
    for (auto h : layer_spec.hidden) widths.push_back(h);
    widths.push_back(layer_spec.out_channels);
    layer.filter = FilterNetwork<float>::random(widths, init_rng);
    layer.k = k;
    layer.stride_fraction = 1.0f;

    std::vector<BenchRow> rows;
    for (std::size_t n : point_counts) {
        BenchRow row;
        row.n_points = n;
        for (int rep = -1; rep < repetitions; ++rep) {   // rep -1 is warm-up
            Rng data_rng(derive_seed(seed, "bench-data") ^ splitmix64(n * 1000 + static_cast<std::size_t>(rep + 1)));
            auto cloud = random_cloud(n, data_rng);
            double knn_ms = time_ms([&] {
                KdTree tree(cloud.points, 3);
                auto table = tree.knn_query(cloud.points, k);
                (void)table;
            });
            double fwd_ms = time_ms([&] {
                Rng stride_rng(seed, "bench-stride");
                auto out = genconv_forward(layer, cloud, stride_rng,
                                           static_cast<LayerCacheT<float>*>(nullptr));
                (void)out;
            });
            if (rep >= 0) {
                row.knn_samples.push_back(knn_ms);
                row.forward_samples.push_back(fwd_ms);
            }
        }
        row.knn_ms = median(row.knn_samples);
        row.forward_ms = median(row.forward_samples);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write bench CSV: " + path.string());
    out << "N,knn_ms,forward_ms\n";
    for (const auto& row : rows)
        out << row.n_points << ',' << row.knn_ms << ',' << row.forward_ms << '\n';
}

}  // namespace genconv
