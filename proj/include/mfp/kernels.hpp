#pragma once

#include <cstddef>

namespace mfp::kernels {

// Every kernel has a serial reference and an OpenMP variant that produce
// bit-identical results (parallelism is only ever over independent output
// elements or rows; per-element reduction order is fixed). The dispatching
// wrappers pick the OpenMP path for large enough work when the backend is
// `openmp`, so numeric output never depends on the backend choice.
enum class Backend { serial, openmp };

void set_backend(Backend b);
Backend backend();

// y[m,n] = a[m,k] @ b[k,n]
void matmul_nn_serial(const double* a, const double* b, double* y, int m, int k, int n);
void matmul_nn_omp(const double* a, const double* b, double* y, int m, int k, int n);
void matmul_nn(const double* a, const double* b, double* y, int m, int k, int n);

// y[m,n] += a[m,k] @ b[n,k]^T
void matmul_nt_acc_serial(const double* a, const double* b, double* y, int m, int k, int n);
void matmul_nt_acc_omp(const double* a, const double* b, double* y, int m, int k, int n);
void matmul_nt_acc(const double* a, const double* b, double* y, int m, int k, int n);

// y[m,n] += a[k,m]^T @ b[k,n]
void matmul_tn_acc_serial(const double* a, const double* b, double* y, int m, int k, int n);
void matmul_tn_acc_omp(const double* a, const double* b, double* y, int m, int k, int n);
void matmul_tn_acc(const double* a, const double* b, double* y, int m, int k, int n);

enum class Unary { relu, tanh, sigmoid, log_floor };

// y[i] = f(x[i]); log_floor clamps its argument to >= 1e-300 before log
void unary_serial(Unary f, const double* x, double* y, size_t n);
void unary_omp(Unary f, const double* x, double* y, size_t n);
void unary(Unary f, const double* x, double* y, size_t n);

// dx[i] += dy[i] * f'(...); relu uses x, tanh/sigmoid use y, log_floor uses x
void unary_grad_serial(Unary f, const double* x, const double* y, const double* dy, double* dx, size_t n);
void unary_grad_omp(Unary f, const double* x, const double* y, const double* dy, double* dx, size_t n);
void unary_grad(Unary f, const double* x, const double* y, const double* dy, double* dx, size_t n);

// row-wise softmax with max subtraction
void softmax_rows_serial(const double* x, double* y, int rows, int cols);
void softmax_rows_omp(const double* x, double* y, int rows, int cols);
void softmax_rows(const double* x, double* y, int rows, int cols);

// dx[r,j] += y[r,j] * (dy[r,j] - sum_c dy[r,c]*y[r,c])
void softmax_rows_grad_serial(const double* y, const double* dy, double* dx, int rows, int cols);
void softmax_rows_grad_omp(const double* y, const double* dy, double* dx, int rows, int cols);
void softmax_rows_grad(const double* y, const double* dy, double* dx, int rows, int cols);

}  // namespace mfp::kernels
