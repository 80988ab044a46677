// Compares the serial reference kernels against the OpenMP variants and
// verifies bit-identical output while at it.
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include <omp.h>

#include "mfp/kernels.hpp"
#include "mfp/rng.hpp"

using namespace mfp;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        const double t0 = omp_get_wtime();
        fn();
        best = std::min(best, omp_get_wtime() - t0);
    }
    return best;
}

void bench_matmul(int m, int k, int n) {
    Rng rng(1);
    std::vector<double> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n);
    std::vector<double> y1(static_cast<size_t>(m) * n), y2(y1.size());
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();

    const double ts = time_best_of(3, [&] { kernels::matmul_nn_serial(a.data(), b.data(), y1.data(), m, k, n); });
    const double tp = time_best_of(3, [&] { kernels::matmul_nn_omp(a.data(), b.data(), y2.data(), m, k, n); });
    const bool same = y1 == y2;
    const double gflops = 2.0 * m * k * n / 1e9;
    std::printf("matmul %4dx%4dx%4d  serial %8.3f ms (%5.2f GF/s)  omp %8.3f ms (%5.2f GF/s)  speedup %.2fx  %s\n",
                m, k, n, ts * 1e3, gflops / ts, tp * 1e3, gflops / tp, ts / tp,
                same ? "bit-exact" : "MISMATCH");
}

void bench_unary(kernels::Unary f, const char* name, size_t n) {
    Rng rng(2);
    std::vector<double> x(n), y1(n), y2(n);
    for (double& v : x) v = rng.uniform(-4.0, 4.0);
    const double ts = time_best_of(3, [&] { kernels::unary_serial(f, x.data(), y1.data(), n); });
    const double tp = time_best_of(3, [&] { kernels::unary_omp(f, x.data(), y2.data(), n); });
    std::printf("%-7s n=%-9zu serial %8.3f ms  omp %8.3f ms  speedup %.2fx  %s\n", name, n,
                ts * 1e3, tp * 1e3, ts / tp, y1 == y2 ? "bit-exact" : "MISMATCH");
}

void bench_softmax(int rows, int cols) {
    Rng rng(3);
    std::vector<double> x(static_cast<size_t>(rows) * cols), y1(x.size()), y2(x.size());
    for (double& v : x) v = rng.uniform(-20.0, 20.0);
    const double ts = time_best_of(3, [&] { kernels::softmax_rows_serial(x.data(), y1.data(), rows, cols); });
    const double tp = time_best_of(3, [&] { kernels::softmax_rows_omp(x.data(), y2.data(), rows, cols); });
    std::printf("softmax %5dx%-4d      serial %8.3f ms  omp %8.3f ms  speedup %.2fx  %s\n",
                rows, cols, ts * 1e3, tp * 1e3, ts / tp, y1 == y2 ? "bit-exact" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    bench_matmul(128, 128, 128);
    bench_matmul(256, 256, 256);
    bench_matmul(512, 512, 512);
    bench_matmul(1024, 256, 128);
    bench_unary(kernels::Unary::tanh, "tanh", 1 << 22);
    bench_unary(kernels::Unary::sigmoid, "sigmoid", 1 << 22);
    bench_unary(kernels::Unary::relu, "relu", 1 << 22);
    bench_softmax(20000, 64);
    return 0;
}
