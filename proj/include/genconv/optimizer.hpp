#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "genconv/common.hpp"

namespace genconv {

enum class OptimizerType { Adam, Sgd };

struct OptimizerConfig {
    OptimizerType type = OptimizerType::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam (or plain SGD) over a flat parameter vector. Moment accumulators
// mirror the parameter layout; callers supply params and grads in the same
// fixed visitation order every step.
template <typename T>
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(OptimizerConfig cfg, std::size_t param_count)
        : cfg_(cfg), m_(param_count, T(0)), v_(param_count, T(0)) {}

    void step(std::vector<T*>& params, const std::vector<T>& grads) {
        if (params.size() != grads.size() || (cfg_.type == OptimizerType::Adam && params.size() != m_.size()))
            throw ShapeError("optimizer: parameter / gradient shape mismatch");
        ++step_count_;
        if (cfg_.type == OptimizerType::Sgd) {
            T lr = static_cast<T>(cfg_.learning_rate);
            for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i];
            return;
        }
        T b1 = static_cast<T>(cfg_.beta1);
        T b2 = static_cast<T>(cfg_.beta2);
        T eps = static_cast<T>(cfg_.epsilon);
        T lr = static_cast<T>(cfg_.learning_rate);
        T bc1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, step_count_));
        T bc2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, step_count_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            T g = grads[i];
            m_[i] = b1 * m_[i] + (T(1) - b1) * g;
            v_[i] = b2 * v_[i] + (T(1) - b2) * g * g;
            T mhat = m_[i] / bc1;
            T vhat = v_[i] / bc2;
            *params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }

    std::uint64_t step_count() const { return step_count_; }
    const OptimizerConfig& config() const { return cfg_; }
    const std::vector<T>& first_moments() const { return m_; }
    const std::vector<T>& second_moments() const { return v_; }

    void restore(std::vector<T> m, std::vector<T> v, std::uint64_t steps) {
        m_ = std::move(m);
        v_ = std::move(v);
        step_count_ = steps;
    }

private:
    OptimizerConfig cfg_;
    std::vector<T> m_;
    std::vector<T> v_;
    std::uint64_t step_count_ = 0;
};

}  // namespace genconv
