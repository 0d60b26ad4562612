#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "genconv/common.hpp"
#include "genconv/matrix.hpp"
#include "genconv/rng.hpp"

namespace genconv {

enum class Activation { LeakyRelu, Identity };

template <typename T>
inline T leaky_relu(T x, T slope) {
    return x >= T(0) ? x : slope * x;
}

template <typename T>
inline T leaky_relu_grad(T x, T slope) {
    return x >= T(0) ? T(1) : slope;
}

template <typename T>
struct AffineLayer {
    Matrix<T> weight;      // out x in
    std::vector<T> bias;   // out
    Activation activation = Activation::LeakyRelu;
    T slope = T(0.01);

    std::size_t in_width() const { return weight.cols; }
    std::size_t out_width() const { return weight.rows; }
    std::size_t parameter_count() const { return weight.size() + bias.size(); }
};

// Per-evaluation forward cache: layer inputs and pre-activations, needed by
// the backward pass. Kept outside the network so one shared filter can be
// evaluated many times per layer application.
template <typename T>
struct MlpCache {
    std::vector<std::vector<T>> inputs;    // input to each affine layer
    std::vector<std::vector<T>> preacts;   // W x + b, before activation
};

// Gradient accumulator shaped like the network parameters.
template <typename T>
struct MlpGrads {
    std::vector<Matrix<T>> weight;
    std::vector<std::vector<T>> bias;

    void add_scaled(const MlpGrads& other, T scale) {
        for (std::size_t l = 0; l < weight.size(); ++l) {
            for (std::size_t i = 0; i < weight[l].size(); ++i)
                weight[l].data[i] += scale * other.weight[l].data[i];
            for (std::size_t i = 0; i < bias[l].size(); ++i)
                bias[l][i] += scale * other.bias[l][i];
        }
    }
};

// The small MLP f mapping one relation row to the layer's output channels.
template <typename T>
class FilterNetwork {
public:
    FilterNetwork() = default;
    explicit FilterNetwork(std::vector<AffineLayer<T>> layers) : layers_(std::move(layers)) {
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            if (layers_[l].out_width() != layers_[l + 1].in_width())
                throw ShapeError("filter layer widths do not chain at layer " + std::to_string(l + 1));
        }
        for (auto& layer : layers_) {
            if (layer.bias.size() != layer.weight.rows)
                throw ShapeError("bias length does not match weight rows");
        }
    }

    // Builds a LeakyReLU-hidden / Identity-output MLP with the given widths,
    // weights uniform on +-sqrt(6/fan_in), biases zero.
    static FilterNetwork random(const std::vector<std::size_t>& widths, Rng& rng,
                                T slope = T(0.01)) {
        if (widths.size() < 2) throw ConfigError("filter network needs at least input and output widths");
        std::vector<AffineLayer<T>> layers;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            AffineLayer<T> layer;
            layer.weight = Matrix<T>(widths[l + 1], widths[l]);
            layer.bias.assign(widths[l + 1], T(0));
            T bound = std::sqrt(T(6) / static_cast<T>(widths[l]));
            for (auto& w : layer.weight.data) w = static_cast<T>(rng.uniform(-bound, bound));
            layer.activation = (l + 2 == widths.size()) ? Activation::Identity : Activation::LeakyRelu;
            layer.slope = slope;
            layers.push_back(std::move(layer));
        }
        return FilterNetwork(std::move(layers));
    }

    std::size_t input_width() const { return layers_.empty() ? 0 : layers_.front().in_width(); }
    std::size_t output_width() const { return layers_.empty() ? 0 : layers_.back().out_width(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.parameter_count();
        return n;
    }

    const std::vector<AffineLayer<T>>& layers() const { return layers_; }
    std::vector<AffineLayer<T>>& layers() { return layers_; }

    std::vector<T> forward(std::span<const T> input, MlpCache<T>* cache) const {
        if (input.size() != input_width())
            throw ShapeError("filter input width " + std::to_string(input.size()) +
                             ", expected " + std::to_string(input_width()));
        if (cache) {
            cache->inputs.clear();
            cache->preacts.clear();
        }
        std::vector<T> x(input.begin(), input.end());
        for (const auto& layer : layers_) {
            if (cache) cache->inputs.push_back(x);
            std::vector<T> z(layer.out_width());
            for (std::size_t r = 0; r < layer.out_width(); ++r) {
                T acc = layer.bias[r];
                const T* w = layer.weight.data.data() + r * layer.weight.cols;
                for (std::size_t c = 0; c < layer.in_width(); ++c) acc += w[c] * x[c];
                z[r] = acc;
            }
            if (cache) cache->preacts.push_back(z);
            if (layer.activation == Activation::LeakyRelu)
                for (auto& v : z) v = leaky_relu(v, layer.slope);
            x = std::move(z);
        }
        return x;
    }

    // Stateful variant per the operation contract: caches internally for a
    // following backward().
    std::vector<T> forward(std::span<const T> input) {
        last_cache_.emplace();
        return forward(input, &*last_cache_);
    }

    // Accumulates parameter gradients into `grads` and returns the gradient
    // with respect to the input vector.
    std::vector<T> backward(std::span<const T> upstream, const MlpCache<T>& cache,
                            MlpGrads<T>& grads) const {
        if (upstream.size() != output_width()) throw ShapeError("upstream gradient width mismatch");
        if (cache.inputs.size() != layers_.size()) throw StateError("forward cache does not match network");
        std::vector<T> g(upstream.begin(), upstream.end());
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const auto& layer = layers_[li];
            const auto& z = cache.preacts[li];
            const auto& x = cache.inputs[li];
            if (layer.activation == Activation::LeakyRelu)
                for (std::size_t r = 0; r < g.size(); ++r) g[r] *= leaky_relu_grad(z[r], layer.slope);
            auto& dw = grads.weight[li];
            auto& db = grads.bias[li];
            std::vector<T> gx(layer.in_width(), T(0));
            for (std::size_t r = 0; r < layer.out_width(); ++r) {
                db[r] += g[r];
                T* dwr = dw.data.data() + r * dw.cols;
                const T* wr = layer.weight.data.data() + r * layer.weight.cols;
                for (std::size_t c = 0; c < layer.in_width(); ++c) {
                    dwr[c] += g[r] * x[c];
                    gx[c] += g[r] * wr[c];
                }
            }
            g = std::move(gx);
        }
        return g;
    }

    std::pair<MlpGrads<T>, std::vector<T>> backward(std::span<const T> upstream) {
        if (!last_cache_) throw StateError("backward called before forward");
        MlpGrads<T> grads = make_grads();
        auto gx = backward(upstream, *last_cache_, grads);
        last_cache_.reset();
        return {std::move(grads), std::move(gx)};
    }

    MlpGrads<T> make_grads() const {
        MlpGrads<T> g;
        for (const auto& l : layers_) {
            g.weight.emplace_back(l.weight.rows, l.weight.cols);
            g.bias.emplace_back(l.bias.size(), T(0));
        }
        return g;
    }

    // Visits parameters (and matching gradient slots when given) in declared
    // order: per layer, weight row-major then bias. This order is the
    // checkpoint flattening order.
    template <typename Fn>
    void visit_params(Fn&& fn) {
        for (auto& l : layers_) {
            for (auto& w : l.weight.data) fn(w);
            for (auto& b : l.bias) fn(b);
        }
    }
    template <typename Fn>
    void visit_params(Fn&& fn) const {
        for (const auto& l : layers_) {
            for (const auto& w : l.weight.data) fn(w);
            for (const auto& b : l.bias) fn(b);
        }
    }

    template <typename Fn>
    static void visit_grads(MlpGrads<T>& g, Fn&& fn) {
        for (std::size_t l = 0; l < g.weight.size(); ++l) {
            for (auto& w : g.weight[l].data) fn(w);
            for (auto& b : g.bias[l]) fn(b);
        }
    }

private:
    std::vector<AffineLayer<T>> layers_;
    std::optional<MlpCache<T>> last_cache_;
};

}  // namespace genconv
