#include "mfp/graph.hpp"

#include <algorithm>
#include <unordered_set>

#include "mfp/kernels.hpp"

namespace mfp {

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::relu: return "relu";
        case Op::tanh: return "tanh";
        case Op::sigmoid: return "sigmoid";
        case Op::softmax: return "softmax";
        case Op::log: return "log";
        case Op::mean: return "mean";
        case Op::concat: return "concat";
        case Op::mse: return "mse";
        case Op::scale: return "scale";
    }
    return "?";
}

namespace {

constexpr double kLogFloor = 1e-300;

void check_finite(const Tensor& t, Op op) {
    if (!t.all_finite()) fail(op_name(op), " produced a non-finite value");
}

bool is_broadcast_row(const Tensor& a, const Tensor& b) {
    return b.rows() == 1 && a.cols() == b.cols() && a.rows() > 1;
}

}  // namespace

Node* Graph::make(Op op, std::vector<Node*> parents, Tensor value, double scalar_arg) {
    bool rg = false;
    for (Node* p : parents) rg = rg || p->requires_grad;
    nodes_.push_back(Node{op, std::move(parents), std::move(value), Tensor{}, rg, scalar_arg});
    Node* n = &nodes_.back();
    if (op != Op::leaf) check_finite(n->value, op);
    return n;
}

Node* Graph::leaf(Tensor value, bool requires_grad) {
    check_finite(value, Op::leaf);
    nodes_.push_back(Node{Op::leaf, {}, std::move(value), Tensor{}, requires_grad, 0.0});
    Node* n = &nodes_.back();
    if (requires_grad) params_.push_back(n);
    return n;
}

Node* Graph::matmul(Node* a, Node* b) {
    const Tensor &A = a->value, &B = b->value;
    require(A.rank() == 2 && B.rank() == 2, "matmul: rank-2 operands required");
    require(A.cols() == B.rows(), "matmul: inner dims mismatch ", A.cols(), " vs ", B.rows());
    Tensor y = Tensor::zeros({A.rows(), B.cols()});
    kernels::matmul_nn(A.data.data(), B.data.data(), y.data.data(), A.rows(), A.cols(), B.cols());
    return make(Op::matmul, {a, b}, std::move(y));
}

Node* Graph::add(Node* a, Node* b) {
    const Tensor &A = a->value, &B = b->value;
    if (A.same_shape(B)) {
        Tensor y = A;
        for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += B.data[i];
        return make(Op::add, {a, b}, std::move(y));
    }
    if (is_broadcast_row(A, B)) {
        Tensor y = A;
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j) y.at(i, j) += B.data[j];
        return make(Op::add, {a, b}, std::move(y));
    }
    fail("add: incompatible shapes [", A.rows(), ",", A.cols(), "] vs [", B.rows(), ",", B.cols(), "]");
}

Node* Graph::relu(Node* x) {
    Tensor y = Tensor::zeros(x->value.shape);
    kernels::unary(kernels::Unary::relu, x->value.data.data(), y.data.data(), y.data.size());
    return make(Op::relu, {x}, std::move(y));
}

Node* Graph::tanh(Node* x) {
    Tensor y = Tensor::zeros(x->value.shape);
    kernels::unary(kernels::Unary::tanh, x->value.data.data(), y.data.data(), y.data.size());
    return make(Op::tanh, {x}, std::move(y));
}

Node* Graph::sigmoid(Node* x) {
    Tensor y = Tensor::zeros(x->value.shape);
    kernels::unary(kernels::Unary::sigmoid, x->value.data.data(), y.data.data(), y.data.size());
    return make(Op::sigmoid, {x}, std::move(y));
}

Node* Graph::softmax(Node* x) {
    Tensor y = Tensor::zeros(x->value.shape);
    kernels::softmax_rows(x->value.data.data(), y.data.data(), x->value.rows(), x->value.cols());
    return make(Op::softmax, {x}, std::move(y));
}

Node* Graph::log(Node* x) {
    Tensor y = Tensor::zeros(x->value.shape);
    kernels::unary(kernels::Unary::log_floor, x->value.data.data(), y.data.data(), y.data.size());
    return make(Op::log, {x}, std::move(y));
}

Node* Graph::mean(Node* x) {
    require(x->value.numel() > 0, "mean: empty tensor");
    double s = 0.0;
    for (double v : x->value.data) s += v;
    return make(Op::mean, {x}, Tensor::scalar(s / static_cast<double>(x->value.numel())));
}

Node* Graph::concat(const std::vector<Node*>& xs) {
    require(!xs.empty(), "concat: no inputs");
    long long total = 0;
    for (Node* x : xs) total += x->value.numel();
    Tensor y = Tensor::zeros({1, static_cast<int>(total)});
    size_t off = 0;
    for (Node* x : xs) {
        std::copy(x->value.data.begin(), x->value.data.end(), y.data.begin() + off);
        off += x->value.data.size();
    }
    return make(Op::concat, xs, std::move(y));
}

Node* Graph::mse(Node* pred, Node* target) {
    const Tensor &P = pred->value, &T = target->value;
    require(P.same_shape(T), "mse: shape mismatch [", P.rows(), ",", P.cols(), "] vs [",
            T.rows(), ",", T.cols(), "]");
    double s = 0.0;
    for (size_t i = 0; i < P.data.size(); ++i) {
        double d = P.data[i] - T.data[i];
        s += d * d;
    }
    return make(Op::mse, {pred, target}, Tensor::scalar(s / static_cast<double>(P.numel())));
}

Node* Graph::scale(Node* x, double c) {
    Tensor y = x->value;
    for (double& v : y.data) v *= c;
    return make(Op::scale, {x}, std::move(y), c);
}

void Graph::backward(Node* root) {
    require(root->value.numel() == 1, "backward: root must be scalar, got ",
            root->value.numel(), " elements");

    // iterative post-order DFS
    std::vector<Node*> topo;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++];
            if (seen.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : topo) n->grad = Tensor::zeros(n->value.shape);
    for (Node* p : params_)
        if (!seen.count(p)) p->grad = Tensor::zeros(p->value.shape);

    root->grad.data[0] = 1.0;

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->op == Op::leaf) continue;
        if (!n->requires_grad) continue;

        const Tensor& dy = n->grad;
        switch (n->op) {
            case Op::matmul: {
                Node *a = n->parents[0], *b = n->parents[1];
                const Tensor &A = a->value, &B = b->value;
                if (a->requires_grad)
                    kernels::matmul_nt_acc(dy.data.data(), B.data.data(), a->grad.data.data(),
                                           A.rows(), B.cols(), A.cols());
                if (b->requires_grad)
                    kernels::matmul_tn_acc(A.data.data(), dy.data.data(), b->grad.data.data(),
                                           B.rows(), A.rows(), B.cols());
                break;
            }
            case Op::add: {
                Node *a = n->parents[0], *b = n->parents[1];
                if (a->requires_grad)
                    for (size_t i = 0; i < dy.data.size(); ++i) a->grad.data[i] += dy.data[i];
                if (b->requires_grad) {
                    if (b->value.same_shape(n->value)) {
                        for (size_t i = 0; i < dy.data.size(); ++i) b->grad.data[i] += dy.data[i];
                    } else {
                        // broadcast row: column sums in fixed row order
                        for (int i = 0; i < dy.rows(); ++i)
                            for (int j = 0; j < dy.cols(); ++j) b->grad.data[j] += dy.at(i, j);
                    }
                }
                break;
            }
            case Op::relu:
            case Op::tanh:
            case Op::sigmoid:
            case Op::log: {
                Node* x = n->parents[0];
                if (!x->requires_grad) break;
                kernels::Unary f = n->op == Op::relu      ? kernels::Unary::relu
                                   : n->op == Op::tanh    ? kernels::Unary::tanh
                                   : n->op == Op::sigmoid ? kernels::Unary::sigmoid
                                                          : kernels::Unary::log_floor;
                kernels::unary_grad(f, x->value.data.data(), n->value.data.data(),
                                    dy.data.data(), x->grad.data.data(), dy.data.size());
                break;
            }
            case Op::softmax: {
                Node* x = n->parents[0];
                if (x->requires_grad)
                    kernels::softmax_rows_grad(n->value.data.data(), dy.data.data(),
                                               x->grad.data.data(), dy.rows(), dy.cols());
                break;
            }
            case Op::mean: {
                Node* x = n->parents[0];
                if (x->requires_grad) {
                    double g = dy.data[0] / static_cast<double>(x->value.numel());
                    for (double& v : x->grad.data) v += g;
                }
                break;
            }
            case Op::concat: {
                size_t off = 0;
                for (Node* x : n->parents) {
                    if (x->requires_grad)
                        for (size_t i = 0; i < x->value.data.size(); ++i)
                            x->grad.data[i] += dy.data[off + i];
                    off += x->value.data.size();
                }
                break;
            }
            case Op::mse: {
                Node *p = n->parents[0], *t = n->parents[1];
                double g = 2.0 * dy.data[0] / static_cast<double>(p->value.numel());
                for (size_t i = 0; i < p->value.data.size(); ++i) {
                    double d = p->value.data[i] - t->value.data[i];
                    if (p->requires_grad) p->grad.data[i] += g * d;
                    if (t->requires_grad) t->grad.data[i] -= g * d;
                }
                break;
            }
            case Op::scale: {
                Node* x = n->parents[0];
                if (x->requires_grad)
                    for (size_t i = 0; i < dy.data.size(); ++i)
                        x->grad.data[i] += n->scalar_arg * dy.data[i];
                break;
            }
            case Op::leaf:
                break;
        }
    }

    for (Node* n : topo)
        if (n->requires_grad && !n->grad.all_finite())
            fail("backward: non-finite gradient at ", op_name(n->op), " node");
}

std::vector<std::pair<Node*, const Tensor*>> Graph::parameter_gradients() {
    std::vector<std::pair<Node*, const Tensor*>> out;
    out.reserve(params_.size());
    for (Node* p : params_) out.push_back({p, &p->grad});
    return out;
}

}  // namespace mfp
