#include "genconv/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "genconv/config.hpp"

namespace genconv {

namespace {

constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    return v;
}

void write_blob(std::ofstream& out, const std::vector<float>& blob) {
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size() * sizeof(float)));
}

std::vector<float> read_blob(std::ifstream& in, std::size_t count,
                             const std::filesystem::path& path) {
    std::vector<float> blob(count);
    in.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    return blob;
}

void write_string(std::ofstream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const std::filesystem::path& path) {
    auto len = read_pod<std::uint32_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    return s;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    out.write("GCKP", 4);
    write_pod<std::uint16_t>(out, kCheckpointVersion);
    write_string(out, serialize_model_config(model.config));
    std::vector<float> params;
    params.reserve(model.parameter_count());
    model.visit_params([&](const float& p) { params.push_back(p); });
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
    write_blob(out, params);
    write_pod<std::uint64_t>(out, model.optimizer.step_count());
    write_blob(out, model.optimizer.first_moments());
    write_blob(out, model.optimizer.second_moments());
    write_pod<std::uint64_t>(out, model.epoch);
    write_string(out, model.train_rng.serialize());
    if (!out) throw DataError("write failed: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GCKP", 4) != 0)
        throw DataError("bad checkpoint magic: " + path.string());
    auto version = read_pod<std::uint16_t>(in, path);
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " +
                        path.string());
    auto config = parse_model_config(read_string(in, path));
    Model model = build_model<float>(config);
    auto count = read_pod<std::uint64_t>(in, path);
    if (count != model.parameter_count())
        throw DataError("checkpoint parameter count " + std::to_string(count) +
                        " does not match config (" + std::to_string(model.parameter_count()) +
                        "): " + path.string());
    auto params = read_blob(in, count, path);
    std::size_t idx = 0;
    model.visit_params([&](float& p) { p = params[idx++]; });
    auto steps = read_pod<std::uint64_t>(in, path);
    auto m = read_blob(in, count, path);
    auto v = read_blob(in, count, path);
    model.optimizer.restore(std::move(m), std::move(v), steps);
    model.epoch = read_pod<std::uint64_t>(in, path);
    model.train_rng = Rng::deserialize(read_string(in, path));
    // Anything past the trailer is corruption.
    char extra;
    if (in.read(&extra, 1)) throw DataError("trailing bytes in checkpoint: " + path.string());
    return model;
}

}  // namespace genconv
