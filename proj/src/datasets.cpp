#include "genconv/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "genconv/rng.hpp"

namespace genconv {

ToyShape toy_shape_from_name(const std::string& name) {
    if (name == "square") return ToyShape::Square;
    if (name == "circle") return ToyShape::Circle;
    throw ConfigError("unknown toy shape '" + name + "' (expected square or circle)");
}

LabeledCloud gen_toy_cloud(ToyShape shape, std::size_t n_points, float center_x, float center_y,
                           float size, float jitter, std::uint64_t seed) {
    if (n_points < 8) throw ConfigError("gen_toy_cloud: need at least 8 points");
    if (size <= 0.0f) throw ConfigError("gen_toy_cloud: size must be positive");
    if (jitter < 0.0f) throw ConfigError("gen_toy_cloud: jitter must be >= 0");
    Rng rng(seed);
    LabeledCloud sample;
    sample.cloud = PointCloud(2, 0, n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        double t = rng.uniform();
        double x, y;
        if (shape == ToyShape::Circle) {
            double theta = 2.0 * 3.14159265358979323846 * t;
            x = center_x + size * std::cos(theta);
            y = center_y + size * std::sin(theta);
        } else {
            // Walk the square perimeter: side length = size, centered.
            double half = size / 2.0;
            double u = 4.0 * t;
            int side = static_cast<int>(u);
            double frac = u - side;
            switch (side) {
                case 0: x = -half + size * frac; y = -half; break;
                case 1: x = half; y = -half + size * frac; break;
                case 2: x = half - size * frac; y = half; break;
                default: x = -half; y = half - size * frac; break;
            }
            x += center_x;
            y += center_y;
        }
        if (jitter > 0.0f) {
            x += rng.normal() * jitter * size;
            y += rng.normal() * jitter * size;
        }
        auto c = sample.cloud.coords(i);
        c[0] = static_cast<float>(x);
        c[1] = static_cast<float>(y);
    }
    sample.label = shape == ToyShape::Circle ? 0 : 1;
    sample.class_name = shape == ToyShape::Circle ? "circle" : "square";
    return sample;
}

namespace {

// Reads meaningful tokens, tracking line numbers for error reports. Skips
// blank lines and '#' comments.
struct OffTokenizer {
    std::istringstream stream;
    std::string line;
    std::istringstream line_stream;
    int line_number = 0;

    explicit OffTokenizer(const std::string& text) : stream(text) {}

    bool next_token(std::string& out) {
        while (true) {
            if (line_stream >> out) {
                if (out[0] == '#') {
                    line_stream.str("");
                    line_stream.clear();
                    continue;
                }
                return true;
            }
            if (!std::getline(stream, line)) return false;
            ++line_number;
            line_stream.str(line);
            line_stream.clear();
        }
    }

    long require_long(const char* what) {
        std::string tok;
        if (!next_token(tok)) throw ParseError(std::string("unexpected end of file reading ") + what, line_number);
        try {
            std::size_t used = 0;
            long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError(std::string("expected integer for ") + what + ", got '" + tok + "'", line_number);
        }
    }

    double require_double(const char* what) {
        std::string tok;
        if (!next_token(tok)) throw ParseError(std::string("unexpected end of file reading ") + what, line_number);
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'", line_number);
        }
    }
};

}  // namespace

TriangleMesh parse_off(const std::string& text) {
    OffTokenizer tok(text);
    std::string first;
    if (!tok.next_token(first)) throw ParseError("empty OFF file", 0);
    long nv = 0, nf = 0;
    if (first == "OFF") {
        nv = tok.require_long("vertex count");
        nf = tok.require_long("face count");
        tok.require_long("edge count");
    } else if (first.rfind("OFF", 0) == 0) {
        // ModelNet quirk: "OFF" glued to the vertex count on line one.
        std::istringstream rest(first.substr(3));
        if (!(rest >> nv)) throw ParseError("malformed merged OFF header '" + first + "'", tok.line_number);
        nf = tok.require_long("face count");
        tok.require_long("edge count");
    } else {
        throw ParseError("missing OFF header, got '" + first + "'", tok.line_number);
    }
    if (nv < 0 || nf < 0) throw ParseError("negative vertex or face count", tok.line_number);
    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        double x = tok.require_double("vertex x");
        double y = tok.require_double("vertex y");
        double z = tok.require_double("vertex z");
        mesh.vertices.push_back({x, y, z});
    }
    for (long i = 0; i < nf; ++i) {
        long arity = tok.require_long("face vertex count");
        if (arity < 3) throw ParseError("face with fewer than 3 vertices", tok.line_number);
        std::vector<int> poly(static_cast<std::size_t>(arity));
        for (long j = 0; j < arity; ++j) {
            long idx = tok.require_long("face vertex index");
            if (idx < 0 || idx >= nv)
                throw ParseError("vertex index " + std::to_string(idx) + " out of range", tok.line_number);
            poly[static_cast<std::size_t>(j)] = static_cast<int>(idx);
        }
        for (std::size_t j = 1; j + 1 < poly.size(); ++j)
            mesh.faces.push_back({poly[0], poly[j], poly[j + 1]});
    }
    return mesh;
}

TriangleMesh load_off(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open OFF file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_off(buf.str());
}

namespace {

double triangle_area(const TriangleMesh& mesh, const std::array<int, 3>& f) {
    const auto& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const auto& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const auto& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    double cx = uy * vz - uz * vy;
    double cy = uz * vx - ux * vz;
    double cz = ux * vy - uy * vx;
    return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

}  // namespace

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed) {
    if (mesh.faces.empty()) throw DataError("sample_mesh: mesh has no faces");
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        total += triangle_area(mesh, mesh.faces[i]);
        cumulative[i] = total;
    }
    if (total <= 0.0) throw DataError("sample_mesh: zero total surface area");
    Rng rng(seed);
    PointCloud cloud(3, 0, n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        double r = rng.uniform() * total;
        std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
        if (t >= mesh.faces.size()) t = mesh.faces.size() - 1;
        const auto& f = mesh.faces[t];
        const auto& a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const auto& c = mesh.vertices[static_cast<std::size_t>(f[2])];
        double u = rng.uniform();
        double v = rng.uniform();
        if (u + v > 1.0) {   // fold into the triangle
            u = 1.0 - u;
            v = 1.0 - v;
        }
        auto out = cloud.coords(i);
        for (int d = 0; d < 3; ++d)
            out[static_cast<std::size_t>(d)] =
                static_cast<float>(a[d] + u * (b[d] - a[d]) + v * (c[d] - a[d]));
    }
    return cloud;
}

namespace {

constexpr std::uint16_t kPcldVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_le(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated PCLD file: " + path.string());
    return v;
}

}  // namespace

void save_pcld(const LabeledCloud& sample, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write PCLD file: " + path.string());
    out.write("PCLD", 4);
    write_le<std::uint16_t>(out, kPcldVersion);
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(sample.cloud.spatial_dims));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(sample.cloud.feature_dims));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample.cloud.size()));
    out.write(reinterpret_cast<const char*>(sample.cloud.points.data.data()),
              static_cast<std::streamsize>(sample.cloud.points.data.size() * sizeof(float)));
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(sample.label));
    if (!out) throw DataError("write failed: " + path.string());
}

LabeledCloud load_pcld(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open PCLD file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PCLD", 4) != 0)
        throw DataError("bad PCLD magic: " + path.string());
    auto version = read_le<std::uint16_t>(in, path);
    if (version != kPcldVersion)
        throw DataError("unsupported PCLD version " + std::to_string(version) + ": " + path.string());
    int s = read_le<std::uint8_t>(in, path);
    int d = read_le<std::uint8_t>(in, path);
    auto n = read_le<std::uint32_t>(in, path);
    if (n == 0) throw DataError("PCLD file with zero points: " + path.string());
    LabeledCloud sample;
    sample.cloud = PointCloud(s, d, n);
    in.read(reinterpret_cast<char*>(sample.cloud.points.data.data()),
            static_cast<std::streamsize>(sample.cloud.points.data.size() * sizeof(float)));
    if (!in) throw DataError("truncated PCLD file: " + path.string());
    sample.label = read_le<std::uint16_t>(in, path);
    return sample;
}

ModelNetData load_modelnet10(const std::filesystem::path& root, std::size_t points_per_cloud,
                             std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
    ModelNetData data;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) data.class_names.push_back(entry.path().filename().string());
    std::sort(data.class_names.begin(), data.class_names.end());
    if (data.class_names.empty()) throw DataError("no class directories under " + root.string());

    auto load_split = [&](const std::string& cls, int label, const char* split,
                          std::vector<LabeledCloud>& out) {
        fs::path dir = root / cls / split;
        if (!fs::is_directory(dir)) {
            data.warnings.push_back("missing split directory: " + dir.string());
            return;
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".off")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            try {
                auto mesh = load_off(file);
                // Per-file seed so parallel load order cannot change output.
                std::uint64_t file_seed = derive_seed(seed, file.string());
                LabeledCloud sample;
                sample.cloud = normalize_cloud(sample_mesh(mesh, points_per_cloud, file_seed));
                sample.label = label;
                sample.class_name = cls;
                out.push_back(std::move(sample));
            } catch (const DataError& e) {
                data.warnings.push_back(std::string(e.what()));
            }
        }
    };

    for (std::size_t i = 0; i < data.class_names.size(); ++i) {
        load_split(data.class_names[i], static_cast<int>(i), "train", data.train);
        load_split(data.class_names[i], static_cast<int>(i), "test", data.test);
    }
    if (data.train.empty() && data.test.empty())
        throw DataError("no OFF files loaded from " + root.string());
    return data;
}

}  // namespace genconv
