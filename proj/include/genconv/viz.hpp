#pragma once

#include <filesystem>
#include <vector>

#include "genconv/mlp.hpp"

namespace genconv {

// Grid of raw filter responses for one output channel. 3D filters are
// stored as `slices` axial z-slices of width x height each.
struct FilterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t slices = 1;
    std::vector<double> values;   // slice-major, then row-major
    double vmin = 0.0;
    double vmax = 0.0;

    double at(std::size_t slice, std::size_t row, std::size_t col) const {
        return values[(slice * height + row) * width + col];
    }
};

enum class Colormap { Grayscale, RedBlueDiverging };

// Probes the continuous filter on a [-extent, +extent]^S grid by evaluating
// it on a unit sample: spatial relation = grid offset, distance = its norm,
// feature inputs fixed to 1. spatial_dims = 2 probes a single plane,
// 3 probes `slices` z-planes.
FilterImage probe_filter(const FilterNetwork<float>& filter, int spatial_dims,
                         std::size_t channel, double extent, std::size_t resolution,
                         std::size_t slices = 9);

// 8-bit PGM (P5, grayscale) or PPM (P6, red = low / white = zero / blue =
// high) with symmetric scaling so zero maps to the midpoint. Also writes the
// raw responses as CSV alongside (path + ".csv"). Multi-slice images are
// tiled horizontally.
void write_image(const FilterImage& img, const std::filesystem::path& path, Colormap colormap);

}  // namespace genconv
