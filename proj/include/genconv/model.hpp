#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "genconv/cloud.hpp"
#include "genconv/common.hpp"
#include "genconv/genconv.hpp"
#include "genconv/loss.hpp"
#include "genconv/mlp.hpp"
#include "genconv/optimizer.hpp"
#include "genconv/rng.hpp"

namespace genconv {

struct LayerSpec {
    std::size_t k = 8;
    double stride_fraction = 1.0;
    std::vector<std::size_t> hidden;   // internal widths of the filter MLP
    std::size_t out_channels = 8;
};

struct HeadSpec {
    std::vector<std::size_t> hidden;
};

struct ModelConfig {
    int spatial_dims = 2;
    int input_feature_dims = 0;
    int num_classes = 2;
    double activation_slope = 0.01;
    // When true, the filter MLP also applies leaky ReLU on its final output
    // (before the neighbor sum); default keeps the output affine.
    bool activate_filter_output = false;
    std::vector<LayerSpec> layers;
    HeadSpec head;
    OptimizerConfig optimizer;
    int epochs = 30;
    std::uint64_t seed = 0;

    void validate() const {
        if (spatial_dims != 2 && spatial_dims != 3) throw ConfigError("spatial_dims must be 2 or 3");
        if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
        if (activation_slope <= 0.0 || activation_slope >= 1.0)
            throw ConfigError("activation_slope must be in (0, 1)");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            if (l.k < 1) throw ConfigError("layer " + std::to_string(i) + ": k must be >= 1");
            if (l.stride_fraction <= 0.0 || l.stride_fraction > 1.0)
                throw ConfigError("layer " + std::to_string(i) + ": stride_fraction must be in (0, 1]");
            if (l.out_channels < 1)
                throw ConfigError("layer " + std::to_string(i) + ": out_channels must be >= 1");
        }
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
    }
};

// Full classification model: a stack of generalized convolutions plus the
// origin-query global head producing class logits.
template <typename T>
class ModelT {
public:
    ModelConfig config;
    std::vector<GenConvLayerT<T>> layers;
    GenConvLayerT<T> head;
    Optimizer<T> optimizer;
    std::uint64_t epoch = 0;
    Rng train_rng{0};   // shuffle + training-time stride stream

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.filter.parameter_count();
        return n + head.filter.parameter_count();
    }

    template <typename Fn>
    void visit_params(Fn&& fn) {
        for (auto& l : layers) l.filter.visit_params(fn);
        head.filter.visit_params(fn);
    }
    template <typename Fn>
    void visit_params(Fn&& fn) const {
        for (const auto& l : layers) l.filter.visit_params(fn);
        head.filter.visit_params(fn);
    }

    // Forward through all layers and the head. `stride_rng` drives query
    // sampling; caches (one per layer + one for the head) enable backward.
    std::vector<T> forward(const PointCloudT<T>& cloud, Rng& stride_rng,
                           std::vector<LayerCacheT<T>>* caches) const {
        if (caches) caches->assign(layers.size() + 1, LayerCacheT<T>{});
        PointCloudT<T> x = cloud;
        for (std::size_t i = 0; i < layers.size(); ++i)
            x = genconv_forward(layers[i], x, stride_rng, caches ? &(*caches)[i] : nullptr);
        return global_head_forward(head, x, caches ? &caches->back() : nullptr);
    }

    // Deterministic inference path: per-cloud stride stream derived from the
    // model seed, independent of training RNG state.
    std::vector<T> predict(const PointCloudT<T>& cloud, std::uint64_t cloud_index = 0) const {
        Rng rng(derive_seed(config.seed, "stride-eval") ^ splitmix64(cloud_index));
        return forward(cloud, rng, nullptr);
    }

    // Backpropagates a logit gradient through head and layers, accumulating
    // parameter gradients into `grads` (layers order, then head last).
    void backward(const std::vector<LayerCacheT<T>>& caches, std::span<const T> logit_grad,
                  std::vector<MlpGrads<T>>& grads) const {
        if (caches.size() != layers.size() + 1) throw StateError("model backward: cache count mismatch");
        Matrix<T> upstream = global_head_backward(head, caches.back(), logit_grad, grads.back());
        for (std::size_t i = layers.size(); i-- > 0;)
            upstream = genconv_backward(layers[i], caches[i], upstream, grads[i]);
    }

    std::vector<MlpGrads<T>> make_grads() const {
        std::vector<MlpGrads<T>> g;
        for (const auto& l : layers) g.push_back(l.filter.make_grads());
        g.push_back(head.filter.make_grads());
        return g;
    }

    template <typename Fn>
    static void visit_grads(std::vector<MlpGrads<T>>& grads, Fn&& fn) {
        for (auto& g : grads) FilterNetwork<T>::visit_grads(g, fn);
    }
};

using Model = ModelT<float>;

// Builds a model from config with freshly initialized weights; filter input
// widths chain automatically: layer i consumes S+1 relation columns plus the
// previous layer's output channels.
template <typename T>
ModelT<T> build_model(const ModelConfig& config) {
    config.validate();
    ModelT<T> model;
    model.config = config;
    Rng init_rng(config.seed, "init");
    const int s = config.spatial_dims;
    const T slope = static_cast<T>(config.activation_slope);
    std::size_t in_features = static_cast<std::size_t>(config.input_feature_dims);
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        const auto& spec = config.layers[i];
        std::vector<std::size_t> widths;
        widths.push_back(static_cast<std::size_t>(s + 1) + in_features);
        for (auto h : spec.hidden) widths.push_back(h);
        widths.push_back(spec.out_channels);
        GenConvLayerT<T> layer;
        layer.filter = FilterNetwork<T>::random(widths, init_rng, slope);
        if (config.activate_filter_output)
            layer.filter.layers().back().activation = Activation::LeakyRelu;
        layer.k = spec.k;
        layer.stride_fraction = static_cast<T>(spec.stride_fraction);
        layer.concat_coords = true;
        layer.activate_output = true;
        layer.slope = slope;
        model.layers.push_back(std::move(layer));
        in_features = spec.out_channels;
    }
    std::vector<std::size_t> head_widths;
    head_widths.push_back(static_cast<std::size_t>(s + 1) + in_features);
    for (auto h : config.head.hidden) head_widths.push_back(h);
    head_widths.push_back(static_cast<std::size_t>(config.num_classes));
    model.head.filter = FilterNetwork<T>::random(head_widths, init_rng, slope);
    if (config.activate_filter_output)
        model.head.filter.layers().back().activation = Activation::LeakyRelu;
    model.head.k = 0;  // unused; the head always takes all points
    model.head.stride_fraction = T(1);
    model.head.concat_coords = false;
    model.head.activate_output = false;  // raw logits into softmax
    model.head.slope = slope;
    model.optimizer = Optimizer<T>(config.optimizer, model.parameter_count());
    model.train_rng = Rng(config.seed, "train");
    return model;
}

struct EpochLog {
    int epoch;
    double mean_loss;
    double train_accuracy;
    double wall_seconds;
};

struct EvalResult {
    double accuracy = 0.0;
    Matrix<int> confusion;   // rows = truth, cols = prediction
};

template <typename T>
std::size_t argmax_class(std::span<const T> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;   // ties keep the lowest index
    return best;
}

// One optimizer update on a single labeled cloud. Returns (loss, predicted).
template <typename T>
std::pair<T, std::size_t> train_step(ModelT<T>& model, const LabeledCloudT<T>& sample) {
    std::vector<LayerCacheT<T>> caches;
    auto logits = model.forward(sample.cloud, model.train_rng, &caches);
    auto res = softmax_cross_entropy<T>(logits, static_cast<std::size_t>(sample.label));
    auto grads = model.make_grads();
    model.backward(caches, res.grad, grads);
    std::vector<T*> params;
    params.reserve(model.parameter_count());
    model.visit_params([&](T& p) { params.push_back(&p); });
    std::vector<T> flat;
    flat.reserve(params.size());
    ModelT<T>::visit_grads(grads, [&](T& g) { flat.push_back(g); });
    model.optimizer.step(params, flat);
    return {res.loss, argmax_class<T>(logits)};
}

// Per-cloud (batch size 1) training with a seeded shuffle each epoch.
template <typename T>
std::vector<EpochLog> train(ModelT<T>& model, const std::vector<LabeledCloudT<T>>& train_set,
                            int epochs,
                            const std::function<void(const EpochLog&)>& progress = nullptr) {
    if (train_set.empty()) throw DataError("train: empty training set");
    std::vector<EpochLog> logs;
    std::vector<std::size_t> order(train_set.size());
    for (int e = 0; e < epochs; ++e) {
        auto start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[model.train_rng.index(i)]);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& sample = train_set[order[i]];
            auto [loss, predicted] = train_step(model, sample);
            if (!std::isfinite(static_cast<double>(loss)))
                throw NumericError("non-finite loss at epoch " + std::to_string(model.epoch) +
                                   ", cloud " + std::to_string(order[i]));
            loss_sum += static_cast<double>(loss);
            if (predicted == static_cast<std::size_t>(sample.label)) ++correct;
        }
        ++model.epoch;
        EpochLog log;
        log.epoch = static_cast<int>(model.epoch);
        log.mean_loss = loss_sum / static_cast<double>(train_set.size());
        log.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
        log.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (progress) progress(log);
        logs.push_back(log);
    }
    return logs;
}

template <typename T>
EvalResult evaluate(const ModelT<T>& model, const std::vector<LabeledCloudT<T>>& test_set) {
    if (test_set.empty()) throw DataError("evaluate: empty test set");
    const std::size_t c = static_cast<std::size_t>(model.config.num_classes);
    EvalResult result;
    result.confusion = Matrix<int>(c, c);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const auto& sample = test_set[i];
        if (static_cast<std::size_t>(sample.label) >= c)
            throw DataError("evaluate: label out of range for model");
        auto logits = model.predict(sample.cloud, i);
        std::size_t predicted = argmax_class<T>(logits);
        result.confusion(static_cast<std::size_t>(sample.label), predicted) += 1;
        if (predicted == static_cast<std::size_t>(sample.label)) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
    return result;
}

}  // namespace genconv
