#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "mfp/adam.hpp"
#include "mfp/graph.hpp"
#include "mfp/kernels.hpp"
#include "mfp/rng.hpp"
#include "mfp/tensor.hpp"

using namespace mfp;
using testutil::fd_gradient;
using testutil::max_rel_err;

TEST_CASE("forward op values") {
    Graph g;

    Node* s = g.softmax(g.constant(Tensor({1, 2}, {0.0, 0.0})));
    CHECK(s->value.data[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s->value.data[1] == doctest::Approx(0.5).epsilon(1e-15));

    Node* t = g.tanh(g.constant(Tensor::scalar(0.0)));
    CHECK(t->value.data[0] == 0.0);

    Tensor eye = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Tensor v({3, 1}, {0.3, -1.7, 2.2});
    Node* mv = g.matmul(g.constant(eye), g.constant(v));
    for (int i = 0; i < 3; ++i) CHECK(mv->value.data[i] == v.data[i]);
}

TEST_CASE("forward is memoized and deterministic") {
    Graph g;
    Node* x = g.constant(Tensor({1, 3}, {0.1, 0.2, 0.3}));
    Node* y = g.softmax(x);
    const double* before = y->value.data.data();
    const Tensor& a = g.forward(y);
    const Tensor& b = g.forward(y);
    CHECK(a.data.data() == before);
    CHECK(a.data == b.data);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(7);
    Tensor x = Tensor::zeros({40, 9});
    for (double& v : x.data) v = rng.uniform(-30.0, 30.0);
    Graph g;
    Node* y = g.softmax(g.constant(x));
    for (int i = 0; i < 40; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 9; ++j) {
            CHECK(y->value.at(i, j) >= 0.0);
            sum += y->value.at(i, j);
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("backward: mean spreads gradient") {
    Graph g;
    Node* x = g.param(Tensor({4}, {1.0, 2.0, 3.0, 4.0}));
    Node* m = g.mean(x);
    g.backward(m);
    for (int i = 0; i < 4; ++i) CHECK(x->grad.data[i] == doctest::Approx(0.25));
}

TEST_CASE("backward: tanh' at zero is one") {
    Graph g;
    Node* w = g.param(Tensor::scalar(0.0));
    Node* t = g.tanh(w);
    g.backward(t);
    CHECK(w->grad.data[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("backward requires a scalar root") {
    Graph g;
    Node* x = g.param(Tensor({1, 2}, {1.0, 2.0}));
    Node* y = g.relu(x);
    CHECK_THROWS_AS(g.backward(y), Error);
}

TEST_CASE("off-path leaves receive zero gradients") {
    Graph g;
    Node* a = g.param(Tensor::scalar(2.0));
    Node* b = g.param(Tensor::scalar(3.0));
    Node* root = g.scale(a, 5.0);
    g.backward(root);
    CHECK(a->grad.data[0] == doctest::Approx(5.0));
    REQUIRE(b->grad.numel() == 1);
    CHECK(b->grad.data[0] == 0.0);
}

TEST_CASE("two-layer relu net matches finite differences") {
    // fixed random net: x[5,4] -> dense(4,6) relu -> dense(6,1), loss = mse to zeros
    Rng rng(42);
    Tensor x = Tensor::zeros({5, 4});
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    Tensor w1 = Tensor::zeros({4, 6}), b1 = Tensor::zeros({1, 6});
    Tensor w2 = Tensor::zeros({6, 1}), b2 = Tensor::zeros({1, 1});
    for (double& v : w1.data) v = rng.normal(0.0, 0.6);
    for (double& v : b1.data) v = rng.normal(0.0, 0.2);
    for (double& v : w2.data) v = rng.normal(0.0, 0.6);
    Tensor target = Tensor::zeros({5, 1});

    auto loss_at = [&](const Tensor& w1v, const Tensor& b1v, const Tensor& w2v,
                       const Tensor& b2v) {
        Graph g;
        Node* h = g.relu(g.add(g.matmul(g.constant(x), g.constant(w1v)), g.constant(b1v)));
        Node* out = g.add(g.matmul(h, g.constant(w2v)), g.constant(b2v));
        return g.mse(out, g.constant(target))->value.data[0];
    };

    Graph g;
    Node *w1n = g.param(w1), *b1n = g.param(b1), *w2n = g.param(w2), *b2n = g.param(b2);
    Node* h = g.relu(g.add(g.matmul(g.constant(x), w1n), b1n));
    Node* out = g.add(g.matmul(h, w2n), b2n);
    g.backward(g.mse(out, g.constant(target)));

    Tensor fd_w1 = fd_gradient([&](const Tensor& t) { return loss_at(t, b1, w2, b2); }, w1);
    Tensor fd_b1 = fd_gradient([&](const Tensor& t) { return loss_at(w1, t, w2, b2); }, b1);
    Tensor fd_w2 = fd_gradient([&](const Tensor& t) { return loss_at(w1, b1, t, b2); }, w2);
    Tensor fd_b2 = fd_gradient([&](const Tensor& t) { return loss_at(w1, b1, w2, t); }, b2);

    CHECK(max_rel_err(w1n->grad, fd_w1, 1e-6) < 1e-6);
    CHECK(max_rel_err(b1n->grad, fd_b1, 1e-6) < 1e-6);
    CHECK(max_rel_err(w2n->grad, fd_w2, 1e-6) < 1e-6);
    CHECK(max_rel_err(b2n->grad, fd_b2, 1e-6) < 1e-6);
}

TEST_CASE("composition of every op kind matches finite differences") {
    // matmul, add, relu, tanh, sigmoid, softmax, log, mean, concat, mse, scale
    Rng rng(99);
    Tensor w = Tensor::zeros({3, 4});
    for (double& v : w.data) v = rng.normal(0.0, 0.7);
    Tensor x = Tensor::zeros({2, 3});
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    Tensor bias = Tensor::zeros({1, 4});
    for (double& v : bias.data) v = rng.normal(0.0, 0.3);
    Tensor target = Tensor::scalar(0.2);

    auto value_at = [&](const Tensor& wv) {
        Graph g;
        Node* wn = g.constant(wv);
        Node* lin = g.add(g.matmul(g.constant(x), wn), g.constant(bias));
        Node* act = g.concat({g.relu(lin), g.tanh(lin), g.sigmoid(lin)});
        Node* probs = g.softmax(act);
        Node* lp = g.log(probs);
        Node* m = g.mean(lp);
        Node* sc = g.scale(m, -1.5);
        return g.mse(sc, g.constant(target))->value.data[0];
    };

    Graph g;
    Node* wn = g.param(w);
    Node* lin = g.add(g.matmul(g.constant(x), wn), g.constant(bias));
    Node* act = g.concat({g.relu(lin), g.tanh(lin), g.sigmoid(lin)});
    Node* probs = g.softmax(act);
    Node* lp = g.log(probs);
    Node* m = g.mean(lp);
    Node* sc = g.scale(m, -1.5);
    g.backward(g.mse(sc, g.constant(target)));

    Tensor fd = fd_gradient([&](const Tensor& t) { return value_at(t); }, w);
    CHECK(max_rel_err(wn->grad, fd, 1e-6) < 1e-6);
}

TEST_CASE("shape mismatch errors name the op") {
    Graph g;
    Node* a = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Node* b = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("matmul"), Error);
    Node* c = g.constant(Tensor({1, 2}, {1, 2}));
    CHECK_THROWS_WITH_AS(g.add(a, c), doctest::Contains("add"), Error);
    CHECK_THROWS_WITH_AS(g.mse(a, c), doctest::Contains("mse"), Error);
}

TEST_CASE("NaN aborts the producing operation") {
    Graph g;
    CHECK_THROWS_AS(g.constant(Tensor::scalar(std::nan(""))), Error);
    Node* big = g.constant(Tensor({1, 2}, {1e308, 1e308}));
    CHECK_THROWS_AS(g.add(big, big), Error);  // overflow to inf
}

TEST_CASE("adam: zero gradient leaves parameters and moments untouched") {
    Tensor p({1, 3}, {0.5, -0.5, 2.0});
    Tensor p0 = p;
    Tensor zero = Tensor::zeros({1, 3});
    AdamState st(0.001);
    adam_step(st, {&p}, {&zero});
    CHECK(st.t == 1);
    CHECK(bitwise_equal(p, p0));
    for (double v : st.m[0].data) CHECK(v == 0.0);
    for (double v : st.v[0].data) CHECK(v == 0.0);
}

TEST_CASE("adam: first step matches the hand-computed update") {
    const double lr = 0.001;
    Tensor p({1, 2}, {1.0, -2.0});
    Tensor grad({1, 2}, {0.3, -0.07});
    AdamState st(lr);
    adam_step(st, {&p}, {&grad});
    for (int j = 0; j < 2; ++j) {
        // bias correction makes mhat=g, vhat=g^2 on the very first step
        const double expected = (j == 0 ? 1.0 : -2.0) -
                                lr * grad.data[j] / (std::sqrt(grad.data[j] * grad.data[j]) + st.eps);
        CHECK(p.data[j] == doctest::Approx(expected).epsilon(1e-15));
        CHECK(std::fabs(std::fabs(p.data[j] - (j == 0 ? 1.0 : -2.0)) - lr) < 1e-6);
    }
}

TEST_CASE("adam: identical calls from identical states agree") {
    auto run = [] {
        Tensor p({2, 2}, {0.1, 0.2, 0.3, 0.4});
        Tensor g({2, 2}, {0.5, -0.25, 0.125, -1.0});
        AdamState st(0.01);
        for (int i = 0; i < 5; ++i) adam_step(st, {&p}, {&g});
        return p;
    };
    CHECK(bitwise_equal(run(), run()));
}

TEST_CASE("adam: shape mismatch is rejected") {
    Tensor p({1, 2}, {1.0, 2.0});
    Tensor g({1, 3}, {1.0, 2.0, 3.0});
    AdamState st(0.01);
    CHECK_THROWS_AS(adam_step(st, {&p}, {&g}), Error);
}

TEST_CASE("serial and openmp kernels are bit-identical") {
    Rng rng(2024);
    const int m = 374, k = 141, n = 89;
    std::vector<double> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n);
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();

    std::vector<double> y1(static_cast<size_t>(m) * n), y2(y1.size());
    kernels::matmul_nn_serial(a.data(), b.data(), y1.data(), m, k, n);
    kernels::matmul_nn_omp(a.data(), b.data(), y2.data(), m, k, n);
    CHECK(y1 == y2);

    std::vector<double> bt(static_cast<size_t>(n) * k);
    for (double& v : bt) v = rng.normal();
    std::vector<double> z1(static_cast<size_t>(m) * n, 0.125), z2(z1);
    kernels::matmul_nt_acc_serial(a.data(), bt.data(), z1.data(), m, k, n);
    kernels::matmul_nt_acc_omp(a.data(), bt.data(), z2.data(), m, k, n);
    CHECK(z1 == z2);

    std::vector<double> at(static_cast<size_t>(k) * m);
    for (double& v : at) v = rng.normal();
    std::vector<double> q1(static_cast<size_t>(m) * n, -0.5), q2(q1);
    kernels::matmul_tn_acc_serial(at.data(), b.data(), q1.data(), m, k, n);
    kernels::matmul_tn_acc_omp(at.data(), b.data(), q2.data(), m, k, n);
    CHECK(q1 == q2);

    std::vector<double> x(100003);
    for (double& v : x) v = rng.uniform(-5.0, 5.0);
    for (auto f : {kernels::Unary::relu, kernels::Unary::tanh, kernels::Unary::sigmoid}) {
        std::vector<double> u1(x.size()), u2(x.size());
        kernels::unary_serial(f, x.data(), u1.data(), x.size());
        kernels::unary_omp(f, x.data(), u2.data(), x.size());
        CHECK(u1 == u2);
    }

    const int rows = 257, cols = 19;
    std::vector<double> sx(static_cast<size_t>(rows) * cols), s1(sx.size()), s2(sx.size());
    for (double& v : sx) v = rng.uniform(-40.0, 40.0);
    kernels::softmax_rows_serial(sx.data(), s1.data(), rows, cols);
    kernels::softmax_rows_omp(sx.data(), s2.data(), rows, cols);
    CHECK(s1 == s2);

    std::vector<double> dy(sx.size()), d1(sx.size(), 0.0), d2(sx.size(), 0.0);
    for (double& v : dy) v = rng.normal();
    kernels::softmax_rows_grad_serial(s1.data(), dy.data(), d1.data(), rows, cols);
    kernels::softmax_rows_grad_omp(s1.data(), dy.data(), d2.data(), rows, cols);
    CHECK(d1 == d2);
}

TEST_CASE("backend switch does not change graph results") {
    auto run = [] {
        Rng rng(5);
        Tensor x = Tensor::zeros({64, 32});
        for (double& v : x.data) v = rng.normal();
        Tensor w = Tensor::zeros({32, 48});
        for (double& v : w.data) v = rng.normal();
        Graph g;
        Node* wn = g.param(w);
        Node* y = g.mean(g.tanh(g.matmul(g.constant(x), wn)));
        g.backward(y);
        return std::pair{y->value.data[0], wn->grad};
    };
    kernels::set_backend(kernels::Backend::serial);
    auto a = run();
    kernels::set_backend(kernels::Backend::openmp);
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(bitwise_equal(a.second, b.second));
}

TEST_CASE("counter-based rng streams are reproducible and splittable") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // substream values do not depend on how much of the parent was consumed
    Rng c(9);
    c.next_u64();
    c.next_u64();
    Rng d(9);
    CHECK(c.derive(4).next_u64() == d.derive(4).next_u64());

    Rng e(77);
    double mean = 0.0, var = 0.0;
    const int n = 20000;
    std::vector<double> xs(n);
    for (double& v : xs) v = e.normal();
    for (double v : xs) mean += v;
    mean /= n;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= n;
    CHECK(std::fabs(mean) < 0.03);
    CHECK(std::fabs(var - 1.0) < 0.05);
}
