#include "mfp/adam.hpp"

#include <cmath>

namespace mfp {

void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads) {
    require(params.size() == grads.size(), "adam_step: ", params.size(), " params vs ",
            grads.size(), " grads");

    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.push_back(Tensor::zeros(p->shape));
            state.v.push_back(Tensor::zeros(p->shape));
        }
    }
    require(state.m.size() == params.size(), "adam_step: parameter group size changed");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        require(p.same_shape(state.m[i]), "adam_step: param ", i, " shape changed");
        require(p.same_shape(g), "adam_step: grad ", i, " shape mismatch");
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (size_t j = 0; j < p.data.size(); ++j) {
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g.data[j];
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g.data[j] * g.data[j];
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace mfp
