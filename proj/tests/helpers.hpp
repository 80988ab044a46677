#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mfp/tensor.hpp"

namespace testutil {

// central finite differences, one coordinate at a time
inline mfp::Tensor fd_gradient(const std::function<double(const mfp::Tensor&)>& f,
                               mfp::Tensor x, double h = 1e-5) {
    mfp::Tensor g = mfp::Tensor::zeros(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double orig = x.data[i];
        x.data[i] = orig + h;
        const double fp = f(x);
        x.data[i] = orig - h;
        const double fm = f(x);
        x.data[i] = orig;
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// worst |a-b| / max(|a|,|b|, atol/rtol) over all coordinates
inline double max_rel_err(const mfp::Tensor& a, const mfp::Tensor& b, double rtol,
                          double atol = 1e-9) {
    double worst = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double denom = std::max({std::fabs(a.data[i]), std::fabs(b.data[i]), atol / rtol});
        worst = std::max(worst, std::fabs(a.data[i] - b.data[i]) / denom);
    }
    return worst;
}

inline std::string data_path(const std::string& name) {
    return std::string(MFP_TEST_DATA_DIR) + "/" + name;
}

}  // namespace testutil
