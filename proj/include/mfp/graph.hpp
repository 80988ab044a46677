#pragma once

#include <deque>
#include <utility>
#include <vector>

#include "mfp/tensor.hpp"

namespace mfp {

enum class Op {
    leaf,
    matmul,
    add,
    relu,
    tanh,
    sigmoid,
    softmax,
    log,
    mean,
    concat,
    mse,
    scale,
};

const char* op_name(Op op);

struct Node {
    Op op = Op::leaf;
    std::vector<Node*> parents;
    Tensor value;
    Tensor grad;  // sized lazily by backward(); same shape as value
    bool requires_grad = false;
    double scalar_arg = 0.0;  // scale factor
};

// Computation graph with eager forward evaluation: a node's value is
// computed once at construction, so forward() is memoized by construction.
// Values are validated finite after every op; a NaN/Inf aborts with an error
// instead of propagating. Single-threaded per graph; distinct graphs may
// live on distinct threads.
class Graph {
public:
    Node* leaf(Tensor value, bool requires_grad = false);
    Node* param(Tensor value) { return leaf(std::move(value), true); }
    Node* constant(Tensor value) { return leaf(std::move(value), false); }

    Node* matmul(Node* a, Node* b);
    // same shape, or b a broadcast row [1,n] against a [m,n], or b scalar
    Node* add(Node* a, Node* b);
    Node* relu(Node* x);
    Node* tanh(Node* x);
    Node* sigmoid(Node* x);
    Node* softmax(Node* x);  // row-wise, max-subtracted
    Node* log(Node* x);      // input floored at 1e-300
    Node* mean(Node* x);     // mean over all elements -> shape {1}
    Node* concat(const std::vector<Node*>& xs);  // flatten row-major -> [1, total]
    Node* mse(Node* pred, Node* target);         // mean squared error -> shape {1}
    Node* scale(Node* x, double c);

    // The op's (memoized) value.
    const Tensor& forward(const Node* n) const { return n->value; }

    // Reverse-mode sweep from a scalar root. Every requires_grad leaf gets
    // d(root)/d(leaf); leaves not on a path to the root keep zero gradients.
    void backward(Node* root);

    // All requires_grad leaves with their gradients, in creation order.
    std::vector<std::pair<Node*, const Tensor*>> parameter_gradients();

    size_t size() const { return nodes_.size(); }

private:
    Node* make(Op op, std::vector<Node*> parents, Tensor value, double scalar_arg = 0.0);

    std::deque<Node> nodes_;
    std::vector<Node*> params_;
};

}  // namespace mfp
