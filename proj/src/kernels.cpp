#include "mfp/kernels.hpp"

#include <atomic>
#include <cmath>

#include <omp.h>

namespace mfp::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::openmp};

// Work below this many flops/elements is not worth a parallel region.
constexpr long long kMatmulThreshold = 64 * 1024;
constexpr size_t kElemThreshold = 32 * 1024;
constexpr long long kRowThreshold = 64;

bool use_omp(long long work, long long threshold) {
    return g_backend.load(std::memory_order_relaxed) == Backend::openmp &&
           !omp_in_parallel() && work >= threshold;
}

constexpr double kLogFloor = 1e-300;

inline double apply_unary(Unary f, double x) {
    switch (f) {
        case Unary::relu: return x > 0.0 ? x : 0.0;
        case Unary::tanh: return std::tanh(x);
        case Unary::sigmoid:
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                            : std::exp(x) / (1.0 + std::exp(x));
        case Unary::log_floor: return std::log(x < kLogFloor ? kLogFloor : x);
    }
    return 0.0;
}

inline double unary_dx(Unary f, double x, double y, double dy) {
    switch (f) {
        case Unary::relu: return x > 0.0 ? dy : 0.0;
        case Unary::tanh: return dy * (1.0 - y * y);
        case Unary::sigmoid: return dy * y * (1.0 - y);
        case Unary::log_floor: return dy / (x < kLogFloor ? kLogFloor : x);
    }
    return 0.0;
}

inline void softmax_row(const double* x, double* y, int cols) {
    double mx = x[0];
    for (int j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
    }
    for (int j = 0; j < cols; ++j) y[j] /= sum;
}

inline void softmax_row_grad(const double* y, const double* dy, double* dx, int cols) {
    double dot = 0.0;
    for (int j = 0; j < cols; ++j) dot += dy[j] * y[j];
    for (int j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() { return g_backend.load(std::memory_order_relaxed); }

void matmul_nn_serial(const double* a, const double* b, double* y, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* yi = y + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) yi[j] = 0.0;
        const double* ai = a + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) yi[j] += aip * bp[j];
        }
    }
}

void matmul_nn_omp(const double* a, const double* b, double* y, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* yi = y + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) yi[j] = 0.0;
        const double* ai = a + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) yi[j] += aip * bp[j];
        }
    }
}

void matmul_nn(const double* a, const double* b, double* y, int m, int k, int n) {
    if (use_omp(1LL * m * k * n, kMatmulThreshold) && m >= 2)
        matmul_nn_omp(a, b, y, m, k, n);
    else
        matmul_nn_serial(a, b, y, m, k, n);
}

void matmul_nt_acc_serial(const double* a, const double* b, double* y, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* yi = y + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            yi[j] += acc;
        }
    }
}

void matmul_nt_acc_omp(const double* a, const double* b, double* y, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* yi = y + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            yi[j] += acc;
        }
    }
}

void matmul_nt_acc(const double* a, const double* b, double* y, int m, int k, int n) {
    if (use_omp(1LL * m * k * n, kMatmulThreshold) && m >= 2)
        matmul_nt_acc_omp(a, b, y, m, k, n);
    else
        matmul_nt_acc_serial(a, b, y, m, k, n);
}

// Accumulates a^T @ b row-block-wise: output row j of y is the fixed-order
// sum over p of a[p,j]*b[p,:], parallel over j so order per element is
// identical to the serial loop.
void matmul_tn_acc_serial(const double* a, const double* b, double* y, int m, int k, int n) {
    for (int j = 0; j < m; ++j) {
        double* yj = y + static_cast<size_t>(j) * n;
        for (int p = 0; p < k; ++p) {
            const double apj = a[static_cast<size_t>(p) * m + j];
            const double* bp = b + static_cast<size_t>(p) * n;
            for (int c = 0; c < n; ++c) yj[c] += apj * bp[c];
        }
    }
}

void matmul_tn_acc_omp(const double* a, const double* b, double* y, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < m; ++j) {
        double* yj = y + static_cast<size_t>(j) * n;
        for (int p = 0; p < k; ++p) {
            const double apj = a[static_cast<size_t>(p) * m + j];
            const double* bp = b + static_cast<size_t>(p) * n;
            for (int c = 0; c < n; ++c) yj[c] += apj * bp[c];
        }
    }
}

void matmul_tn_acc(const double* a, const double* b, double* y, int m, int k, int n) {
    if (use_omp(1LL * m * k * n, kMatmulThreshold) && m >= 2)
        matmul_tn_acc_omp(a, b, y, m, k, n);
    else
        matmul_tn_acc_serial(a, b, y, m, k, n);
}

void unary_serial(Unary f, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = apply_unary(f, x[i]);
}

void unary_omp(Unary f, const double* x, double* y, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        y[i] = apply_unary(f, x[i]);
}

void unary(Unary f, const double* x, double* y, size_t n) {
    if (use_omp(static_cast<long long>(n), kElemThreshold))
        unary_omp(f, x, y, n);
    else
        unary_serial(f, x, y, n);
}

void unary_grad_serial(Unary f, const double* x, const double* y, const double* dy,
                       double* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] += unary_dx(f, x[i], y[i], dy[i]);
}

void unary_grad_omp(Unary f, const double* x, const double* y, const double* dy,
                    double* dx, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        dx[i] += unary_dx(f, x[i], y[i], dy[i]);
}

void unary_grad(Unary f, const double* x, const double* y, const double* dy,
                double* dx, size_t n) {
    if (use_omp(static_cast<long long>(n), kElemThreshold))
        unary_grad_omp(f, x, y, dy, dx, n);
    else
        unary_grad_serial(f, x, y, dy, dx, n);
}

void softmax_rows_serial(const double* x, double* y, int rows, int cols) {
    for (int r = 0; r < rows; ++r)
        softmax_row(x + static_cast<size_t>(r) * cols, y + static_cast<size_t>(r) * cols, cols);
}

void softmax_rows_omp(const double* x, double* y, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r)
        softmax_row(x + static_cast<size_t>(r) * cols, y + static_cast<size_t>(r) * cols, cols);
}

void softmax_rows(const double* x, double* y, int rows, int cols) {
    if (use_omp(rows, kRowThreshold))
        softmax_rows_omp(x, y, rows, cols);
    else
        softmax_rows_serial(x, y, rows, cols);
}

void softmax_rows_grad_serial(const double* y, const double* dy, double* dx, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        size_t off = static_cast<size_t>(r) * cols;
        softmax_row_grad(y + off, dy + off, dx + off, cols);
    }
}

void softmax_rows_grad_omp(const double* y, const double* dy, double* dx, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        size_t off = static_cast<size_t>(r) * cols;
        softmax_row_grad(y + off, dy + off, dx + off, cols);
    }
}

void softmax_rows_grad(const double* y, const double* dy, double* dx, int rows, int cols) {
    if (use_omp(rows, kRowThreshold))
        softmax_rows_grad_omp(y, dy, dx, rows, cols);
    else
        softmax_rows_grad_serial(y, dy, dx, rows, cols);
}

}  // namespace mfp::kernels
