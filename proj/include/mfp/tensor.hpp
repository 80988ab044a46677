#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mfp/common.hpp"

namespace mfp {

// Dense row-major tensor of 64-bit reals, rank 1 or 2. Rank-1 tensors are
// treated as a single row where a matrix is expected. A default-constructed
// tensor is the empty tensor (used for label-less datasets).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        require(numel() == static_cast<long long>(data.size()),
                "tensor data length ", data.size(), " does not match shape");
    }

    static Tensor zeros(std::vector<int> s) {
        Tensor t;
        t.shape = std::move(s);
        t.data.assign(static_cast<size_t>(t.numel()), 0.0);
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    int rank() const { return static_cast<int>(shape.size()); }

    long long numel() const {
        long long n = 1;
        for (int d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    bool empty() const { return data.empty(); }

    int rows() const { return rank() == 2 ? shape[0] : 1; }
    int cols() const { return rank() == 2 ? shape[1] : (shape.empty() ? 0 : shape[0]); }

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols() + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols() + j]; }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Tensor row(int i) const {
        Tensor r = zeros({1, cols()});
        for (int j = 0; j < cols(); ++j) r.at(0, j) = at(i, j);
        return r;
    }
};

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

}  // namespace mfp
