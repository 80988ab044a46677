#pragma once

#include <vector>

#include "mfp/tensor.hpp"

namespace mfp {

// Bias-corrected Adam over a fixed group of parameter tensors. Moment
// accumulators are allocated on the first step; `t` advances by exactly one
// per update call.
struct AdamState {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<Tensor> m, v;

    explicit AdamState(double learning_rate) : lr(learning_rate) {}
};

void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads);

}  // namespace mfp
