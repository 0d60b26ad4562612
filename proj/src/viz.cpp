#include "genconv/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "genconv/common.hpp"

namespace genconv {

namespace {

double grid_coord(std::size_t i, std::size_t count, double extent) {
    if (count <= 1) return 0.0;
    return -extent + 2.0 * extent * static_cast<double>(i) / static_cast<double>(count - 1);
}

}  // namespace

FilterImage probe_filter(const FilterNetwork<float>& filter, int spatial_dims,
                         std::size_t channel, double extent, std::size_t resolution,
                         std::size_t slices) {
    if (spatial_dims != 2 && spatial_dims != 3) throw ShapeError("probe_filter: spatial dims must be 2 or 3");
    if (extent <= 0.0) throw ConfigError("probe_filter: extent must be positive");
    if (resolution < 1) throw ConfigError("probe_filter: resolution must be >= 1");
    if (channel >= filter.output_width()) throw ShapeError("probe_filter: channel out of range");
    const std::size_t srel = static_cast<std::size_t>(spatial_dims) + 1;
    if (filter.input_width() < srel)
        throw ShapeError("probe_filter: filter input narrower than spatial relation");
    const std::size_t feature_count = filter.input_width() - srel;
    if (spatial_dims == 2) slices = 1;

    FilterImage img;
    img.width = resolution;
    img.height = resolution;
    img.slices = slices;
    img.values.resize(slices * resolution * resolution);
    std::vector<float> input(filter.input_width());
    // Unit sample: every feature channel fixed to 1.
    std::fill(input.begin() + static_cast<std::ptrdiff_t>(srel), input.end(), 1.0f);
    for (std::size_t s = 0; s < slices; ++s) {
        double z = grid_coord(s, slices, extent);
        for (std::size_t r = 0; r < resolution; ++r) {
            double y = grid_coord(r, resolution, extent);
            for (std::size_t c = 0; c < resolution; ++c) {
                double x = grid_coord(c, resolution, extent);
                input[0] = static_cast<float>(x);
                input[1] = static_cast<float>(y);
                double n2 = x * x + y * y;
                if (spatial_dims == 3) {
                    input[2] = static_cast<float>(z);
                    n2 += z * z;
                }
                input[static_cast<std::size_t>(spatial_dims)] = static_cast<float>(std::sqrt(n2));
                auto out = filter.forward(input, nullptr);
                img.values[(s * resolution + r) * resolution + c] =
                    static_cast<double>(out[channel]);
            }
        }
    }
    auto [mn, mx] = std::minmax_element(img.values.begin(), img.values.end());
    img.vmin = *mn;
    img.vmax = *mx;
    for (double v : img.values)
        if (!std::isfinite(v)) throw NumericError("probe_filter: non-finite response");
    return img;
}

void write_image(const FilterImage& img, const std::filesystem::path& path, Colormap colormap) {
    // Symmetric scale pins 0 at the midpoint and keeps pixel ordering
    // monotone in the raw response.
    double scale = std::max(std::abs(img.vmin), std::abs(img.vmax));
    auto normalized = [&](double v) { return scale > 0.0 ? v / scale : 0.0; };  // in [-1, 1]

    const std::size_t out_w = img.width * img.slices;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image: " + path.string());
    if (colormap == Colormap::Grayscale) {
        out << "P5\n" << out_w << ' ' << img.height << "\n255\n";
        for (std::size_t r = 0; r < img.height; ++r)
            for (std::size_t s = 0; s < img.slices; ++s)
                for (std::size_t c = 0; c < img.width; ++c) {
                    double t = normalized(img.at(s, r, c));
                    auto g = static_cast<unsigned char>(std::lround(127.5 + 127.5 * t));
                    out.put(static_cast<char>(g));
                }
    } else {
        out << "P6\n" << out_w << ' ' << img.height << "\n255\n";
        for (std::size_t r = 0; r < img.height; ++r)
            for (std::size_t s = 0; s < img.slices; ++s)
                for (std::size_t c = 0; c < img.width; ++c) {
                    double t = normalized(img.at(s, r, c));
                    // red at -1, white at 0, blue at +1
                    unsigned char rr = 255, gg = 255, bb = 255;
                    if (t < 0.0) {
                        gg = bb = static_cast<unsigned char>(std::lround(255.0 * (1.0 + t)));
                    } else if (t > 0.0) {
                        rr = gg = static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
                    }
                    out.put(static_cast<char>(rr));
                    out.put(static_cast<char>(gg));
                    out.put(static_cast<char>(bb));
                }
    }
    if (!out) throw DataError("image write failed: " + path.string());

    std::filesystem::path csv_path = path;
    csv_path += ".csv";
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write CSV: " + csv_path.string());
    csv.precision(9);
    for (std::size_t s = 0; s < img.slices; ++s)
        for (std::size_t r = 0; r < img.height; ++r) {
            for (std::size_t c = 0; c < img.width; ++c) {
                if (c) csv << ',';
                csv << img.at(s, r, c);
            }
            csv << '\n';
        }
}

}  // namespace genconv
