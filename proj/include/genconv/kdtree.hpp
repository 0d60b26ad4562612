#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "genconv/common.hpp"
#include "genconv/matrix.hpp"

namespace genconv {

// KNN result: per query row, K candidate indices with Euclidean distances,
// sorted ascending by (distance, index).
template <typename T>
struct NeighborTableT {
    std::size_t query_count = 0;
    std::size_t k = 0;
    std::vector<int> indices;     // query_count x k
    std::vector<T> distances;     // query_count x k

    std::span<const int> row_indices(std::size_t q) const {
        return {indices.data() + q * k, k};
    }
    std::span<const T> row_distances(std::size_t q) const {
        return {distances.data() + q * k, k};
    }
};

using NeighborTable = NeighborTableT<float>;

namespace detail {

// Squared distance with a fixed accumulation order so the tree and the brute
// force oracle produce bit-identical values.
template <typename T>
inline T dist2(const T* a, const T* b, int dims) {
    T acc = T(0);
    for (int d = 0; d < dims; ++d) {
        T diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace detail

// Median-split KD-tree over 2D/3D coordinates; immutable after build, safe
// for concurrent read-only queries.
template <typename T>
class KdTreeT {
public:
    static constexpr int kDefaultLeafCapacity = 16;

    KdTreeT(const Matrix<T>& coords, int dims, int leaf_capacity = kDefaultLeafCapacity)
        : dims_(dims), leaf_capacity_(leaf_capacity), coords_(coords.data) {
        if (coords.rows == 0) throw ShapeError("build_kdtree: empty input");
        if (dims != 2 && dims != 3) throw ShapeError("build_kdtree: dims must be 2 or 3");
        if (coords.cols < static_cast<std::size_t>(dims)) throw ShapeError("build_kdtree: too few columns");
        n_ = coords.rows;
        stride_ = coords.cols;
        for (const auto& v : coords_)
            if (!std::isfinite(static_cast<double>(v))) throw ShapeError("build_kdtree: non-finite coordinate");
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * n_ / static_cast<std::size_t>(leaf_capacity_) + 2);
        root_ = build(0, n_, 0);
    }

    std::size_t point_count() const { return n_; }

    // Leaf-order traversal of stored point indices; a permutation of 0..N-1.
    const std::vector<int>& leaf_order() const { return order_; }

    // Exact K nearest neighbors for each query row. K larger than the point
    // count is clamped. Ties broken by smaller candidate index.
    NeighborTableT<T> knn_query(const Matrix<T>& queries, std::size_t k) const {
        if (k < 1) throw ShapeError("knn_query: K must be >= 1");
        k = std::min(k, n_);
        NeighborTableT<T> table;
        table.query_count = queries.rows;
        table.k = k;
        table.indices.resize(queries.rows * k);
        table.distances.resize(queries.rows * k);
        std::vector<std::pair<T, int>> heap;
        heap.reserve(k + 1);
        for (std::size_t q = 0; q < queries.rows; ++q) {
            heap.clear();
            const T* qc = queries.data.data() + q * queries.cols;
            search(root_, qc, k, heap);
            std::sort_heap(heap.begin(), heap.end());
            for (std::size_t j = 0; j < k; ++j) {
                table.indices[q * k + j] = heap[j].second;
                table.distances[q * k + j] = std::sqrt(heap[j].first);
            }
        }
        return table;
    }

private:
    struct Node {
        int split_dim = -1;
        T split_val = T(0);
        int left = -1, right = -1;   // children; -1 on leaves
        int begin = 0, end = 0;      // leaf range in order_
    };

    const T* point(int idx) const { return coords_.data() + static_cast<std::size_t>(idx) * stride_; }

    int build(std::size_t begin, std::size_t end, int depth) {
        int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (end - begin <= static_cast<std::size_t>(leaf_capacity_)) {
            std::sort(order_.begin() + begin, order_.begin() + end);
            nodes_[node_id].begin = static_cast<int>(begin);
            nodes_[node_id].end = static_cast<int>(end);
            return node_id;
        }
        int dim = depth % dims_;
        std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             T va = point(a)[dim], vb = point(b)[dim];
                             return va != vb ? va < vb : a < b;
                         });
        T split_val = point(order_[mid])[dim];
        int left = build(begin, mid, depth + 1);
        int right = build(mid, end, depth + 1);
        nodes_[node_id].split_dim = dim;
        nodes_[node_id].split_val = split_val;
        nodes_[node_id].left = left;
        nodes_[node_id].right = right;
        return node_id;
    }

    void consider(const T* qc, int idx, std::size_t k, std::vector<std::pair<T, int>>& heap) const {
        T d2 = detail::dist2(qc, point(idx), dims_);
        std::pair<T, int> cand{d2, idx};
        if (heap.size() < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end());
        }
    }

    void search(int node_id, const T* qc, std::size_t k, std::vector<std::pair<T, int>>& heap) const {
        const Node& node = nodes_[node_id];
        if (node.split_dim < 0) {
            for (int i = node.begin; i < node.end; ++i) consider(qc, order_[i], k, heap);
            return;
        }
        T delta = qc[node.split_dim] - node.split_val;
        int near = delta <= T(0) ? node.left : node.right;
        int far = delta <= T(0) ? node.right : node.left;
        search(near, qc, k, heap);
        // Equal plane distance can still hide an equal-distance candidate
        // with a smaller index, so prune only on strict excess.
        if (heap.size() < k || delta * delta <= heap.front().first) search(far, qc, k, heap);
    }

    int dims_;
    int leaf_capacity_;
    std::size_t n_ = 0;
    std::size_t stride_ = 0;
    std::vector<T> coords_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

using KdTree = KdTreeT<float>;

// Quadratic reference with the same (distance, index) tie-break contract as
// KdTreeT::knn_query; kept simple on purpose, it is the test oracle.
template <typename T>
NeighborTableT<T> brute_force_knn(const Matrix<T>& points, int dims, const Matrix<T>& queries,
                                  std::size_t k) {
    if (points.rows == 0) throw ShapeError("brute_force_knn: empty input");
    if (k < 1) throw ShapeError("brute_force_knn: K must be >= 1");
    k = std::min(k, points.rows);
    NeighborTableT<T> table;
    table.query_count = queries.rows;
    table.k = k;
    table.indices.resize(queries.rows * k);
    table.distances.resize(queries.rows * k);
    std::vector<std::pair<T, int>> all(points.rows);
    for (std::size_t q = 0; q < queries.rows; ++q) {
        const T* qc = queries.data.data() + q * queries.cols;
        for (std::size_t i = 0; i < points.rows; ++i)
            all[i] = {detail::dist2(qc, points.data.data() + i * points.cols, dims),
                      static_cast<int>(i)};
        std::partial_sort(all.begin(), all.begin() + k, all.end());
        for (std::size_t j = 0; j < k; ++j) {
            table.indices[q * k + j] = all[j].second;
            table.distances[q * k + j] = std::sqrt(all[j].first);
        }
    }
    return table;
}

}  // namespace genconv
