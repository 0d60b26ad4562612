#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "genconv/common.hpp"
#include "genconv/matrix.hpp"

namespace genconv {

// A point cloud: N rows of S spatial coordinates followed by D feature
// channels, row-major.
template <typename T>
struct PointCloudT {
    int spatial_dims = 0;   // S, 2 or 3
    int feature_dims = 0;   // D, may be 0
    Matrix<T> points;       // N x (S + D)

    PointCloudT() = default;
    PointCloudT(int s, int d, std::size_t n)
        : spatial_dims(s), feature_dims(d), points(n, static_cast<std::size_t>(s + d)) {
        if (s != 2 && s != 3) throw ShapeError("point cloud spatial dims must be 2 or 3");
        if (d < 0) throw ShapeError("negative feature dims");
    }

    std::size_t size() const { return points.rows; }

    std::span<const T> coords(std::size_t i) const {
        return {points.data.data() + i * points.cols, static_cast<std::size_t>(spatial_dims)};
    }
    std::span<T> coords(std::size_t i) {
        return {points.data.data() + i * points.cols, static_cast<std::size_t>(spatial_dims)};
    }
    std::span<const T> features(std::size_t i) const {
        return {points.data.data() + i * points.cols + spatial_dims,
                static_cast<std::size_t>(feature_dims)};
    }
    std::span<T> features(std::size_t i) {
        return {points.data.data() + i * points.cols + spatial_dims,
                static_cast<std::size_t>(feature_dims)};
    }
};

using PointCloud = PointCloudT<float>;

template <typename T>
struct LabeledCloudT {
    PointCloudT<T> cloud;
    int label = 0;
    std::string class_name;
};

using LabeledCloud = LabeledCloudT<float>;

// Centers the cloud at its centroid and scales so the farthest point sits at
// norm 1. Coincident clouds are centered but not scaled.
template <typename T>
PointCloudT<T> normalize_cloud(PointCloudT<T> cloud) {
    if (cloud.size() == 0) throw ShapeError("normalize_cloud: empty cloud");
    const int s = cloud.spatial_dims;
    std::vector<T> centroid(s, T(0));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto c = cloud.coords(i);
        for (int d = 0; d < s; ++d) centroid[d] += c[d];
    }
    for (int d = 0; d < s; ++d) centroid[d] /= static_cast<T>(cloud.size());
    T max_norm2 = T(0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto c = cloud.coords(i);
        T n2 = T(0);
        for (int d = 0; d < s; ++d) {
            c[d] -= centroid[d];
            n2 += c[d] * c[d];
        }
        max_norm2 = std::max(max_norm2, n2);
    }
    if (max_norm2 > T(0)) {
        T inv = T(1) / std::sqrt(max_norm2);
        for (std::size_t i = 0; i < cloud.size(); ++i)
            for (auto& v : cloud.coords(i)) v *= inv;
    }
    return cloud;
}

}  // namespace genconv
