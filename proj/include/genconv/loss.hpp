#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "genconv/common.hpp"

namespace genconv {

template <typename T>
struct LossResult {
    T loss;
    std::vector<T> grad;  // d loss / d logits
};

// Softmax cross entropy, stabilized by max subtraction. Gradient components
// sum to zero by construction (softmax - onehot).
template <typename T>
LossResult<T> softmax_cross_entropy(std::span<const T> logits, std::size_t label) {
    if (logits.empty()) throw ShapeError("softmax_cross_entropy: empty logits");
    if (label >= logits.size()) throw ShapeError("softmax_cross_entropy: label out of range");
    T max_logit = *std::max_element(logits.begin(), logits.end());
    T sum = T(0);
    std::vector<T> p(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - max_logit);
        sum += p[i];
    }
    T log_sum = std::log(sum);
    T loss = log_sum - (logits[label] - max_logit);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] /= sum;
    p[label] -= T(1);
    return {loss, std::move(p)};
}

}  // namespace genconv
