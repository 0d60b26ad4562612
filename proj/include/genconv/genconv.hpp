#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "genconv/cloud.hpp"
#include "genconv/common.hpp"
#include "genconv/kdtree.hpp"
#include "genconv/mlp.hpp"
#include "genconv/rng.hpp"

namespace genconv {

// One generalized convolution layer: KNN neighborhoods, relation extraction,
// shared filter network evaluated per neighbor, neighbor-sum, activation,
// absolute-coordinate concatenation.
template <typename T>
struct GenConvLayerT {
    FilterNetwork<T> filter;   // input width = S + 1 + D
    std::size_t k = 1;
    T stride_fraction = T(1);  // fraction of candidates used as queries
    bool concat_coords = true;
    bool activate_output = true;  // leaky ReLU after the neighbor sum
    T slope = T(0.01);

    std::size_t out_channels() const { return filter.output_width(); }
};

// Everything the backward pass needs from one forward application.
template <typename T>
struct LayerCacheT {
    std::vector<int> query_indices;            // indices into the input cloud
    Matrix<T> query_coords;                    // N_q x S
    NeighborTableT<T> table;
    Matrix<T> relations;                       // (N_q * K) x (S + 1 + D)
    std::vector<MlpCache<T>> filter_caches;    // one per (query, neighbor)
    Matrix<T> preact;                          // N_q x D', before activation
    std::size_t input_size = 0;
    int input_feature_dims = 0;
    int spatial_dims = 0;
    bool valid = false;
};

// Draws ceil(fraction * N) distinct indices without replacement; the result
// is sorted ascending. fraction == 1 returns 0..N-1.
inline std::vector<int> stride_sample(std::size_t n, double fraction, Rng& rng) {
    if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("stride fraction must be in (0, 1]");
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    if (fraction == 1.0) return all;
    std::size_t m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + rng.index(n - i);
        std::swap(all[i], all[j]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
}

// Relation features per (query, neighbor): delta coordinates, Euclidean
// distance, then the neighbor's feature channels verbatim. Absolute neighbor
// coordinates never appear, which makes relations translation invariant.
template <typename T>
Matrix<T> extract_relations(const PointCloudT<T>& cloud, const Matrix<T>& query_coords,
                            const NeighborTableT<T>& table) {
    const int s = cloud.spatial_dims;
    const int d = cloud.feature_dims;
    if (table.query_count != query_coords.rows)
        throw ShapeError("extract_relations: table/query count mismatch");
    if (query_coords.cols < static_cast<std::size_t>(s))
        throw ShapeError("extract_relations: query coords too narrow");
    const std::size_t rel_width = static_cast<std::size_t>(s + 1 + d);
    Matrix<T> rel(table.query_count * table.k, rel_width);
    for (std::size_t q = 0; q < table.query_count; ++q) {
        const T* qc = query_coords.data.data() + q * query_coords.cols;
        for (std::size_t j = 0; j < table.k; ++j) {
            int nb = table.indices[q * table.k + j];
            if (nb < 0 || static_cast<std::size_t>(nb) >= cloud.size())
                throw ShapeError("extract_relations: neighbor index out of range");
            T* out = rel.data.data() + (q * table.k + j) * rel_width;
            auto nc = cloud.coords(static_cast<std::size_t>(nb));
            for (int dd = 0; dd < s; ++dd) out[dd] = nc[dd] - qc[dd];
            out[s] = table.distances[q * table.k + j];
            auto nf = cloud.features(static_cast<std::size_t>(nb));
            for (int dd = 0; dd < d; ++dd) out[s + 1 + dd] = nf[dd];
        }
    }
    return rel;
}

namespace detail {

// Shared evaluation core: per-relation filter, neighbor sum, activation.
// Returns the activations (N_q x D'); fills the cache when given.
template <typename T>
Matrix<T> genconv_eval(const FilterNetwork<T>& filter, const NeighborTableT<T>& table,
                       const Matrix<T>& relations, bool activate, T slope,
                       LayerCacheT<T>* cache) {
    const std::size_t out_w = filter.output_width();
    Matrix<T> z(table.query_count, out_w);
    if (cache) cache->filter_caches.assign(table.query_count * table.k, MlpCache<T>{});
    for (std::size_t q = 0; q < table.query_count; ++q) {
        T* zq = z.data.data() + q * out_w;
        for (std::size_t j = 0; j < table.k; ++j) {
            std::size_t row = q * table.k + j;
            auto out = filter.forward(relations.row(row),
                                      cache ? &cache->filter_caches[row] : nullptr);
            for (std::size_t c = 0; c < out_w; ++c) zq[c] += out[c];
        }
    }
    if (cache) cache->preact = z;
    if (activate)
        for (auto& v : z.data) v = leaky_relu(v, slope);
    return z;
}

// Adjoint of genconv_eval: routes gradients into the filter parameters and
// into the input cloud's feature channels. Coordinates carry no gradient.
template <typename T>
Matrix<T> genconv_eval_backward(const FilterNetwork<T>& filter, const LayerCacheT<T>& cache,
                                const Matrix<T>& upstream, bool activate, T slope,
                                MlpGrads<T>& grads) {
    if (!cache.valid) throw StateError("genconv backward called before forward");
    const std::size_t out_w = filter.output_width();
    if (upstream.rows != cache.table.query_count || upstream.cols != out_w)
        throw ShapeError("genconv backward: upstream gradient shape mismatch");
    const int s = cache.spatial_dims;
    const int d = cache.input_feature_dims;
    Matrix<T> feature_grads(cache.input_size, static_cast<std::size_t>(d));
    std::vector<T> dz(out_w);
    // Fixed query-major, neighbor-minor accumulation order for reproducibility.
    for (std::size_t q = 0; q < cache.table.query_count; ++q) {
        const T* up = upstream.data.data() + q * out_w;
        const T* zq = cache.preact.data.data() + q * out_w;
        for (std::size_t c = 0; c < out_w; ++c)
            dz[c] = activate ? up[c] * leaky_relu_grad(zq[c], slope) : up[c];
        for (std::size_t j = 0; j < cache.table.k; ++j) {
            std::size_t row = q * cache.table.k + j;
            auto rel_grad = filter.backward(dz, cache.filter_caches[row], grads);
            int nb = cache.table.indices[row];
            T* fg = feature_grads.data.data() + static_cast<std::size_t>(nb) * d;
            for (int dd = 0; dd < d; ++dd) fg[dd] += rel_grad[static_cast<std::size_t>(s + 1 + dd)];
        }
    }
    return feature_grads;
}

}  // namespace detail

// Forward pass of one layer. `rng` drives stride sampling only. Pass a cache
// to enable a later backward; pass nullptr for inference.
template <typename T>
PointCloudT<T> genconv_forward(const GenConvLayerT<T>& layer, const PointCloudT<T>& cloud,
                               Rng& rng, LayerCacheT<T>* cache) {
    const int s = cloud.spatial_dims;
    const std::size_t rel_width = static_cast<std::size_t>(s + 1 + cloud.feature_dims);
    if (layer.filter.input_width() != rel_width)
        throw ShapeError("genconv_forward: filter expects input width " +
                         std::to_string(layer.filter.input_width()) + ", cloud provides " +
                         std::to_string(rel_width));
    auto query_idx = stride_sample(cloud.size(), static_cast<double>(layer.stride_fraction), rng);
    Matrix<T> query_coords(query_idx.size(), static_cast<std::size_t>(s));
    for (std::size_t q = 0; q < query_idx.size(); ++q) {
        auto c = cloud.coords(static_cast<std::size_t>(query_idx[q]));
        for (int dd = 0; dd < s; ++dd) query_coords(q, static_cast<std::size_t>(dd)) = c[dd];
    }
    KdTreeT<T> tree(cloud.points, s);
    auto table = tree.knn_query(query_coords, layer.k);
    auto relations = extract_relations(cloud, query_coords, table);
    if (cache) {
        cache->query_indices = query_idx;
        cache->query_coords = query_coords;
        cache->table = table;
        cache->relations = relations;
        cache->input_size = cloud.size();
        cache->input_feature_dims = cloud.feature_dims;
        cache->spatial_dims = s;
    }
    auto acts = detail::genconv_eval(layer.filter, table, relations, layer.activate_output,
                                     layer.slope, cache);
    if (cache) cache->valid = true;
    const int out_d = static_cast<int>(layer.out_channels());
    PointCloudT<T> out(s, out_d, query_idx.size());
    for (std::size_t q = 0; q < query_idx.size(); ++q) {
        auto oc = out.coords(q);
        for (int dd = 0; dd < s; ++dd)
            oc[dd] = layer.concat_coords ? query_coords(q, static_cast<std::size_t>(dd)) : T(0);
        auto of = out.features(q);
        for (int c = 0; c < out_d; ++c) of[c] = acts(q, static_cast<std::size_t>(c));
    }
    return out;
}

template <typename T>
PointCloudT<T> genconv_forward(const GenConvLayerT<T>& layer, const PointCloudT<T>& cloud,
                               std::uint64_t seed) {
    Rng rng(seed, "stride");
    return genconv_forward(layer, cloud, rng, static_cast<LayerCacheT<T>*>(nullptr));
}

// Gradients of the layer with respect to filter parameters (accumulated into
// `grads`) and the input cloud's feature channels (returned, N x D).
template <typename T>
Matrix<T> genconv_backward(const GenConvLayerT<T>& layer, const LayerCacheT<T>& cache,
                           const Matrix<T>& upstream, MlpGrads<T>& grads) {
    return detail::genconv_eval_backward(layer.filter, cache, upstream, layer.activate_output,
                                         layer.slope, grads);
}

// The global head: one query at the origin with every point as neighbor, no
// coordinate concatenation, raw logits out. The analog of a fully connected
// layer.
template <typename T>
std::vector<T> global_head_forward(const GenConvLayerT<T>& head, const PointCloudT<T>& cloud,
                                   LayerCacheT<T>* cache) {
    if (cloud.size() == 0) throw ShapeError("global_head_forward: empty cloud");
    const int s = cloud.spatial_dims;
    const std::size_t rel_width = static_cast<std::size_t>(s + 1 + cloud.feature_dims);
    if (head.filter.input_width() != rel_width)
        throw ShapeError("global_head_forward: filter/cloud width mismatch");
    NeighborTableT<T> table;
    table.query_count = 1;
    table.k = cloud.size();
    table.indices.resize(cloud.size());
    std::iota(table.indices.begin(), table.indices.end(), 0);
    table.distances.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto c = cloud.coords(i);
        T n2 = T(0);
        for (int dd = 0; dd < s; ++dd) n2 += c[dd] * c[dd];
        table.distances[i] = std::sqrt(n2);
    }
    Matrix<T> origin(1, static_cast<std::size_t>(s));
    auto relations = extract_relations(cloud, origin, table);
    if (cache) {
        cache->query_indices.clear();
        cache->query_coords = origin;
        cache->table = table;
        cache->relations = relations;
        cache->input_size = cloud.size();
        cache->input_feature_dims = cloud.feature_dims;
        cache->spatial_dims = s;
    }
    auto z = detail::genconv_eval(head.filter, table, relations, head.activate_output, head.slope,
                                  cache);
    if (cache) cache->valid = true;
    return std::vector<T>(z.data.begin(), z.data.end());
}

template <typename T>
Matrix<T> global_head_backward(const GenConvLayerT<T>& head, const LayerCacheT<T>& cache,
                               std::span<const T> logit_grad, MlpGrads<T>& grads) {
    Matrix<T> upstream(1, logit_grad.size());
    std::copy(logit_grad.begin(), logit_grad.end(), upstream.data.begin());
    return detail::genconv_eval_backward(head.filter, cache, upstream, head.activate_output,
                                         head.slope, grads);
}

// Dense (segmentation) mode: the head applied at every point instead of the
// origin. Forward only.
template <typename T>
Matrix<T> global_head_forward_dense(const GenConvLayerT<T>& head, const PointCloudT<T>& cloud) {
    if (cloud.size() == 0) throw ShapeError("global_head_forward_dense: empty cloud");
    const int s = cloud.spatial_dims;
    NeighborTableT<T> table;
    table.query_count = cloud.size();
    table.k = cloud.size();
    table.indices.resize(cloud.size() * cloud.size());
    table.distances.resize(cloud.size() * cloud.size());
    Matrix<T> queries(cloud.size(), static_cast<std::size_t>(s));
    for (std::size_t q = 0; q < cloud.size(); ++q) {
        auto qc = cloud.coords(q);
        for (int dd = 0; dd < s; ++dd) queries(q, static_cast<std::size_t>(dd)) = qc[dd];
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            table.indices[q * cloud.size() + i] = static_cast<int>(i);
            table.distances[q * cloud.size() + i] =
                std::sqrt(detail::dist2(qc.data(), cloud.coords(i).data(), s));
        }
    }
    auto relations = extract_relations(cloud, queries, table);
    return detail::genconv_eval(head.filter, table, relations, head.activate_output, head.slope,
                                static_cast<LayerCacheT<T>*>(nullptr));
}

}  // namespace genconv
