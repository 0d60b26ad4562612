#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "genconv/datasets.hpp"
#include "genconv/rng.hpp"

using namespace genconv;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    auto dir = fs::temp_directory_path() / "genconv_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("gen_toy_cloud circle radius invariant at zero jitter") {
    auto sample = gen_toy_cloud(ToyShape::Circle, 64, 0.5f, -0.25f, 2.0f, 0.0f, 7);
    CHECK(sample.label == 0);
    for (std::size_t i = 0; i < sample.cloud.size(); ++i) {
        auto c = sample.cloud.coords(i);
        double r = std::hypot(c[0] - 0.5, c[1] + 0.25);
        CHECK(std::abs(r - 2.0) < 1e-6);
    }
}

TEST_CASE("gen_toy_cloud square Chebyshev radius invariant at zero jitter") {
    auto sample = gen_toy_cloud(ToyShape::Square, 64, -1.0f, 0.5f, 3.0f, 0.0f, 8);
    CHECK(sample.label == 1);
    for (std::size_t i = 0; i < sample.cloud.size(); ++i) {
        auto c = sample.cloud.coords(i);
        double cheb = std::max(std::abs(c[0] + 1.0), std::abs(c[1] - 0.5));
        CHECK(std::abs(cheb - 1.5) < 1e-6);
    }
}

TEST_CASE("gen_toy_cloud determinism and validation") {
    auto a = gen_toy_cloud(ToyShape::Circle, 32, 0, 0, 1.0f, 0.05f, 99);
    auto b = gen_toy_cloud(ToyShape::Circle, 32, 0, 0, 1.0f, 0.05f, 99);
    CHECK(a.cloud.points.data == b.cloud.points.data);
    CHECK_THROWS_AS(gen_toy_cloud(ToyShape::Circle, 4, 0, 0, 1.0f, 0.0f, 1), ConfigError);
    CHECK_THROWS_AS(toy_shape_from_name("triangle"), ConfigError);
}

TEST_CASE("parse_off minimal file") {
    auto mesh = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    CHECK(mesh.vertices.size() == 3);
    CHECK(mesh.faces.size() == 1);
    CHECK(mesh.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("parse_off quad face fan-triangulates") {
    auto mesh = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
    CHECK(mesh.faces.size() == 2);
    CHECK(mesh.faces[0] == std::array<int, 3>{0, 1, 2});
    CHECK(mesh.faces[1] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("parse_off merged ModelNet header parses identically") {
    std::string body = "\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
    auto clean = parse_off("OFF\n3 1 0" + body);
    auto merged = parse_off("OFF3 1 0" + body);
    CHECK(clean.vertices == merged.vertices);
    CHECK(clean.faces == merged.faces);
}

TEST_CASE("parse_off comments and blank lines are skipped") {
    auto mesh = parse_off("OFF\n# comment\n\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n\n3 0 1 2\n");
    CHECK(mesh.vertices.size() == 3);
}

TEST_CASE("parse_off errors carry line numbers") {
    CHECK_THROWS_AS(parse_off(""), ParseError);
    CHECK_THROWS_AS(parse_off("PLY\n3 1 0\n"), ParseError);
    CHECK_THROWS_AS(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n"), ParseError);
    try {
        parse_off("OFF\n2 0 0\n0 0 0\nbad 0 0\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 4);
    }
}

TEST_CASE("sample_mesh points satisfy barycentric re-solve") {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 3, 0}};
    mesh.faces = {{0, 1, 2}};
    auto cloud = sample_mesh(mesh, 200, 5);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto p = cloud.coords(i);
        // For this triangle: p = u*(2,0,0) + v*(0,3,0), w = 1-u-v.
        double u = p[0] / 2.0;
        double v = p[1] / 3.0;
        double w = 1.0 - u - v;
        CHECK(u >= -1e-6);
        CHECK(v >= -1e-6);
        CHECK(w >= -1e-6);
        CHECK(std::abs(p[2]) < 1e-6);
    }
}

TEST_CASE("sample_mesh area weighting 9:1") {
    TriangleMesh mesh;
    // Areas 4.5 and 0.5 (ratio 9:1).
    mesh.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}, {10, 0, 0}, {11, 0, 0}, {10, 1, 0}};
    mesh.faces = {{0, 1, 2}, {3, 4, 5}};
    auto cloud = sample_mesh(mesh, 10000, 12);
    std::size_t big = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.coords(i)[0] < 5.0f) ++big;
    // Binomial 3-sigma bounds around p = 0.9, n = 10000.
    double sigma = std::sqrt(10000 * 0.9 * 0.1);
    CHECK(std::abs(static_cast<double>(big) - 9000.0) < 3.0 * sigma);
}

TEST_CASE("sample_mesh edge cases") {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    mesh.faces = {{0, 1, 2}};
    CHECK(sample_mesh(mesh, 1, 0).size() == 1);

    TriangleMesh degenerate;
    degenerate.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    degenerate.faces = {{0, 1, 2}};
    CHECK_THROWS_AS(sample_mesh(degenerate, 10, 0), DataError);
    TriangleMesh empty;
    CHECK_THROWS_AS(sample_mesh(empty, 10, 0), DataError);
}

TEST_CASE("normalize_cloud idempotence, similarity invariance, degenerate") {
    Rng rng(44);
    PointCloud cloud(3, 0, 50);
    for (auto& v : cloud.points.data) v = static_cast<float>(rng.uniform(-4.0, 4.0));

    auto once = normalize_cloud(cloud);
    auto twice = normalize_cloud(once);
    for (std::size_t i = 0; i < once.points.data.size(); ++i)
        CHECK(std::abs(once.points.data[i] - twice.points.data[i]) < 1e-6f);

    auto scaled = cloud;
    for (auto& v : scaled.points.data) v = v * 5.0f + 2.0f;
    auto norm_scaled = normalize_cloud(scaled);
    for (std::size_t i = 0; i < once.points.data.size(); ++i)
        CHECK(std::abs(once.points.data[i] - norm_scaled.points.data[i]) < 1e-5f);

    PointCloud single(2, 0, 1);
    single.coords(0)[0] = 42.0f;
    single.coords(0)[1] = -13.0f;
    auto origin = normalize_cloud(single);
    CHECK(origin.coords(0)[0] == 0.0f);
    CHECK(origin.coords(0)[1] == 0.0f);
}

TEST_CASE("pcld round trip preserves bytes") {
    auto dir = temp_dir("pcld");
    auto sample = gen_toy_cloud(ToyShape::Square, 32, 0, 0, 1.0f, 0.1f, 3);
    auto path = dir / "a.pcld";
    save_pcld(sample, path);
    auto loaded = load_pcld(path);
    CHECK(loaded.cloud.points.data == sample.cloud.points.data);
    CHECK(loaded.label == sample.label);
    auto path2 = dir / "b.pcld";
    save_pcld(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("pcld corruption detection") {
    auto dir = temp_dir("pcld_bad");
    auto sample = gen_toy_cloud(ToyShape::Circle, 16, 0, 0, 1.0f, 0.0f, 1);
    auto path = dir / "c.pcld";
    save_pcld(sample, path);
    auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS_AS(load_pcld(path), DataError);
}

TEST_CASE("load_modelnet10 synthetic fixture") {
    auto root = temp_dir("modelnet");
    const char* off = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
    for (const char* cls : {"chair", "bed"}) {
        for (const char* split : {"train", "test"}) {
            fs::create_directories(root / cls / split);
            for (int i = 0; i < 3; ++i) {
                std::ofstream out(root / cls / split / ("m" + std::to_string(i) + ".off"));
                out << off;
            }
        }
    }
    auto data = load_modelnet10(root, 50, 1);
    CHECK(data.class_names == std::vector<std::string>{"bed", "chair"});
    CHECK(data.train.size() == 6);
    CHECK(data.test.size() == 6);
    for (const auto& s : data.train) {
        CHECK(s.cloud.size() == 50);
        CHECK((s.label == 0 || s.label == 1));
        CHECK(s.class_name == (s.label == 0 ? "bed" : "chair"));
    }
}

TEST_CASE("load_modelnet10 empty root errors") {
    auto root = temp_dir("modelnet_empty");
    CHECK_THROWS_AS(load_modelnet10(root, 50, 1), DataError);
    CHECK_THROWS_AS(load_modelnet10(root / "missing", 50, 1), DataError);
}
