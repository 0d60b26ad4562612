#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "genconv/bench.hpp"
#include "genconv/rng.hpp"
#include "genconv/viz.hpp"

using namespace genconv;
namespace fs = std::filesystem;

namespace {

FilterNetwork<float> random_filter(std::vector<std::size_t> widths, std::uint64_t seed) {
    Rng rng(seed);
    return FilterNetwork<float>::random(widths, rng);
}

fs::path temp_file(const char* name) {
    auto dir = fs::temp_directory_path() / "genconv_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("probe_filter zero filter gives constant zero image") {
    auto filter = random_filter({3, 4, 2}, 1);
    filter.visit_params([](float& p) { p = 0.0f; });
    auto img = probe_filter(filter, 2, 0, 1.0, 7);
    for (double v : img.values) CHECK(v == 0.0);
}

TEST_CASE("probe_filter 51x51 grid probes the center at zero offset") {
    auto filter = random_filter({3, 4, 2}, 2);
    auto img = probe_filter(filter, 2, 1, 0.5, 51);
    CHECK(img.values.size() == 2601);
    // Center pixel equals a direct evaluation of the zero-offset unit sample.
    std::vector<float> zero_rel{0.0f, 0.0f, 0.0f};
    auto direct = filter.forward(zero_rel, nullptr);
    CHECK(img.at(0, 25, 25) == static_cast<double>(direct[1]));
}

TEST_CASE("probe_filter uses unit feature inputs") {
    // Filter reads only its feature channel: identity on input 4 of
    // (dx, dy, dist, feat).
    std::vector<AffineLayer<float>> layers(1);
    layers[0].weight = Matrix<float>(1, 4);
    layers[0].weight(0, 3) = 2.5f;
    layers[0].bias.assign(1, 0.0f);
    layers[0].activation = Activation::Identity;
    FilterNetwork<float> filter(std::move(layers));
    auto img = probe_filter(filter, 2, 0, 1.0, 3);
    for (double v : img.values) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("probe_filter linear in dx varies along x only") {
    std::vector<AffineLayer<float>> layers(1);
    layers[0].weight = Matrix<float>(1, 3);
    layers[0].weight(0, 0) = 1.0f;   // dx only
    layers[0].bias.assign(1, 0.0f);
    layers[0].activation = Activation::Identity;
    FilterNetwork<float> filter(std::move(layers));
    auto img = probe_filter(filter, 2, 0, 1.0, 9);
    for (std::size_t r = 1; r < 9; ++r)
        for (std::size_t c = 0; c < 9; ++c)
            CHECK(img.at(0, r, c) == doctest::Approx(img.at(0, 0, c)));
    for (std::size_t c = 1; c < 9; ++c) CHECK(img.at(0, 0, c) > img.at(0, 0, c - 1));
}

TEST_CASE("probe_filter 3D produces slices") {
    auto filter = random_filter({4, 5, 3}, 3);
    auto img = probe_filter(filter, 3, 0, 1.0, 5, 4);
    CHECK(img.slices == 4);
    CHECK(img.values.size() == 4 * 25);
}

TEST_CASE("probe_filter rejects bad channel") {
    auto filter = random_filter({3, 2}, 4);
    CHECK_THROWS_AS(probe_filter(filter, 2, 5, 1.0, 3), ShapeError);
}

TEST_CASE("write_image endpoints: red at low, blue at high") {
    FilterImage img;
    img.width = 2;
    img.height = 1;
    img.values = {-1.0, 1.0};
    img.vmin = -1.0;
    img.vmax = 1.0;
    auto path = temp_file("endpoints.ppm");
    write_image(img, path, Colormap::RedBlueDiverging);
    auto bytes = slurp(path);
    // Header "P6\n2 1\n255\n" then 6 bytes of pixels.
    auto body = bytes.substr(bytes.size() - 6);
    CHECK(static_cast<unsigned char>(body[0]) == 255);   // red pixel
    CHECK(static_cast<unsigned char>(body[1]) == 0);
    CHECK(static_cast<unsigned char>(body[2]) == 0);
    CHECK(static_cast<unsigned char>(body[3]) == 0);     // blue pixel
    CHECK(static_cast<unsigned char>(body[4]) == 0);
    CHECK(static_cast<unsigned char>(body[5]) == 255);
}

TEST_CASE("write_image constant zero image is uniform midpoint") {
    FilterImage img;
    img.width = 3;
    img.height = 2;
    img.values.assign(6, 0.0);
    auto ppm = temp_file("constant.ppm");
    write_image(img, ppm, Colormap::RedBlueDiverging);
    auto bytes = slurp(ppm);
    for (std::size_t i = bytes.size() - 18; i < bytes.size(); ++i)
        CHECK(static_cast<unsigned char>(bytes[i]) == 255);   // all white

    auto pgm = temp_file("constant.pgm");
    write_image(img, pgm, Colormap::Grayscale);
    auto gray = slurp(pgm);
    for (std::size_t i = gray.size() - 6; i < gray.size(); ++i)
        CHECK(static_cast<unsigned char>(gray[i]) == 128);
}

TEST_CASE("write_image grayscale intensity is monotone in value") {
    FilterImage img;
    img.width = 5;
    img.height = 1;
    img.values = {-2.0, -0.5, 0.0, 1.0, 2.0};
    img.vmin = -2.0;
    img.vmax = 2.0;
    auto path = temp_file("monotone.pgm");
    write_image(img, path, Colormap::Grayscale);
    auto bytes = slurp(path);
    auto body = bytes.substr(bytes.size() - 5);
    for (std::size_t i = 1; i < 5; ++i)
        CHECK(static_cast<unsigned char>(body[i]) > static_cast<unsigned char>(body[i - 1]));
}

TEST_CASE("write_image CSV cell count matches image size") {
    auto filter = random_filter({3, 4, 2}, 5);
    auto img = probe_filter(filter, 2, 0, 1.0, 6);
    auto path = temp_file("grid.ppm");
    write_image(img, path, Colormap::RedBlueDiverging);
    std::ifstream csv(path.string() + ".csv");
    std::string line;
    std::size_t cells = 0, rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        cells += static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    }
    CHECK(rows == 6);
    CHECK(cells == 36);
}

TEST_CASE("bench_scaling plumbing") {
    BenchLayerSpec spec;
    spec.hidden = {4};
    spec.out_channels = 2;
    auto rows = bench_scaling({1, 64}, 4, spec, 5, 0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].n_points == 1);
    CHECK(rows[0].knn_samples.size() == 5);
    CHECK(rows[0].forward_samples.size() == 5);
    CHECK(rows[0].forward_ms >= 0.0);
    CHECK(std::isfinite(rows[0].forward_ms));

    auto path = temp_file("bench.csv");
    write_bench_csv(rows, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "N,knn_ms,forward_ms");
    std::string l1, l2;
    CHECK(std::getline(in, l1));
    CHECK(std::getline(in, l2));
}

TEST_CASE("bench_scaling validates input") {
    CHECK_THROWS_AS(bench_scaling({100, 50}, 4, BenchLayerSpec{}, 3, 0), ConfigError);
    CHECK_THROWS_AS(bench_scaling({100}, 4, BenchLayerSpec{}, 0, 0), ConfigError);
}
