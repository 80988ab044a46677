#include "mfp/fingerprint.hpp"

#include <cmath>
#include <fstream>

#include "mfp/adam.hpp"
#include "mfp/kernels.hpp"
#include "mfp/rng.hpp"

namespace mfp {

Tensor AdaptiveFingerprint::inputs() const {
    Tensor x = Tensor::zeros(raw.shape);
    kernels::unary(kernels::Unary::tanh, raw.data.data(), x.data.data(), x.data.size());
    return x;
}

Tensor OutputAffine::apply(const Tensor& outputs) const {
    if (!enabled) return outputs;
    Tensor out = outputs;
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j)
            out.at(i, j) = (out.at(i, j) - center[j]) * inv_scale[j];
    return out;
}

AdaptiveFingerprint init_fingerprint(int n_examples, int d_in, uint64_t seed) {
    require(n_examples >= 1, "init_fingerprint: need at least one example");
    require(d_in >= 1, "init_fingerprint: d_in must be positive");
    AdaptiveFingerprint fp;
    fp.raw = Tensor::zeros({n_examples, d_in});
    Rng rng(seed);
    // N(0, 0.5^2) spreads tanh(raw) over (-1,1) without saturating
    for (double& v : fp.raw.data) v = rng.normal(0.0, 0.5);
    return fp;
}

namespace {

// columns select p_minus (index 0) / p_plus (index 1) out of the softmax pair
Tensor selector_column(int idx) {
    Tensor c = Tensor::zeros({2, 1});
    c.data[idx] = 1.0;
    return c;
}

struct AffineNodes {
    Node* neg_center = nullptr;
    Node* diag_inv_scale = nullptr;
};

AffineNodes affine_nodes(Graph& g, const OutputAffine& affine, int d_out) {
    AffineNodes nodes;
    if (!affine.enabled) return nodes;
    Tensor c = Tensor::zeros({1, d_out});
    for (int j = 0; j < d_out; ++j) c.data[j] = -affine.center[j];
    Tensor diag = Tensor::zeros({d_out, d_out});
    for (int j = 0; j < d_out; ++j) diag.at(j, j) = affine.inv_scale[j];
    nodes.neg_center = g.constant(std::move(c));
    nodes.diag_inv_scale = g.constant(std::move(diag));
    return nodes;
}

// log p_side for one suspect: forward through the (frozen) suspect, optional
// standardization, concat in fingerprint order, verifier, log, select.
Node* log_prob_term(Graph& g, const SequentialModel& suspect, Node* x,
                    const AffineNodes& affine, SequentialModel& verifier_net,
                    GraphForward* verifier_fwd, int side) {
    Node* out = model_forward(g, suspect, x, false).out;
    if (affine.neg_center)
        out = g.matmul(g.add(out, affine.neg_center), affine.diag_inv_scale);
    Node* flat = g.concat({out});
    GraphForward vf = model_forward(g, verifier_net, flat, true, {}, true);
    *verifier_fwd = vf;
    Node* probs = g.softmax(vf.out);
    return g.matmul(g.log(probs), g.constant(selector_column(side)));
}

}  // namespace

FingerprintPair construct_fingerprint(const EnsembleSplitView& construction,
                                      const ConstructOptions& opt, uint64_t seed) {
    require(construction.target != nullptr, "construct_fingerprint: no target model");
    require(!construction.positives.empty() && !construction.negatives.empty(),
            "construct_fingerprint: construction split is one-sided (",
            construction.positives.size(), " positives, ", construction.negatives.size(),
            " negatives)");
    require(opt.n_examples >= 1 && opt.iters >= 1, "construct_fingerprint: bad sizes");
    require(opt.lr > 0.0, "construct_fingerprint: learning rate must be positive");

    const SequentialModel& target = *construction.target;
    const int d_in = target.d_in;
    const int d_out = target.d_out;
    for (const auto* m : construction.positives)
        require(m->d_in == d_in && m->d_out == d_out, "construct_fingerprint: dim mismatch");
    for (const auto* m : construction.negatives)
        require(m->d_in == d_in && m->d_out == d_out, "construct_fingerprint: dim mismatch");

    Rng rng(seed);

    FingerprintPair pair;
    pair.d_in = d_in;
    pair.d_out = d_out;
    pair.seed = seed;
    pair.iters = opt.iters;
    pair.lr = opt.lr;
    pair.fingerprint = init_fingerprint(opt.n_examples, d_in, rng.derive(0).seed());
    pair.verifier.net =
        init_model(mlp_spec({opt.n_examples * d_out, opt.hidden, 2}, LayerKind::softmax),
                   TaskKind::classifier, rng.derive(1).seed(), "meta-verifier");

    if (opt.standardize_outputs) {
        // frozen from the target's outputs on the initial fingerprint
        Tensor out0 = predict(target, pair.fingerprint.inputs());
        pair.standardize.enabled = true;
        pair.standardize.center.assign(d_out, 0.0);
        pair.standardize.inv_scale.assign(d_out, 1.0);
        for (int j = 0; j < d_out; ++j) {
            double mean = 0.0;
            for (int i = 0; i < out0.rows(); ++i) mean += out0.at(i, j);
            mean /= out0.rows();
            double var = 0.0;
            for (int i = 0; i < out0.rows(); ++i) {
                const double d = out0.at(i, j) - mean;
                var += d * d;
            }
            var /= out0.rows();
            pair.standardize.center[j] = mean;
            pair.standardize.inv_scale[j] = 1.0 / (std::sqrt(var) + 1e-8);
        }
    }

    AdamState adam_w(opt.lr), adam_theta(opt.lr);
    Rng sampler = rng.derive(2);
    pair.loss_trace.reserve(opt.iters);

    for (int t = 0; t < opt.iters; ++t) {
        const SequentialModel& pos =
            *construction.positives[sampler.below(construction.positives.size())];
        const SequentialModel& neg =
            *construction.negatives[sampler.below(construction.negatives.size())];

        Graph g;
        Node* w = g.param(pair.fingerprint.raw);
        Node* x = g.tanh(w);
        AffineNodes affine = affine_nodes(g, pair.standardize, d_out);

        GraphForward vf_pos, vf_target, vf_neg;
        Node* term_pos = log_prob_term(g, pos, x, affine, pair.verifier.net, &vf_pos, 1);
        Node* term_target = log_prob_term(g, target, x, affine, pair.verifier.net, &vf_target, 1);
        Node* term_neg = log_prob_term(g, neg, x, affine, pair.verifier.net, &vf_neg, 0);
        Node* objective = g.add(g.add(term_pos, term_target), term_neg);
        // ascend: minimize the negated objective
        Node* loss = g.scale(objective, -1.0);
        try {
            g.backward(loss);
        } catch (const Error& e) {
            fail("construct_fingerprint: iteration ", t, ": ", e.what());
        }

        std::vector<Tensor*> w_params{&pair.fingerprint.raw};
        std::vector<const Tensor*> w_grads{&w->grad};
        adam_step(adam_w, w_params, w_grads);

        std::vector<Tensor*> theta_params = pair.verifier.net.params();
        std::vector<Tensor> theta_grads;
        theta_grads.reserve(theta_params.size());
        for (size_t i = 0; i < theta_params.size(); ++i) {
            Tensor sum = vf_pos.param_nodes[i]->grad;
            for (size_t j = 0; j < sum.data.size(); ++j)
                sum.data[j] += vf_target.param_nodes[i]->grad.data[j] +
                               vf_neg.param_nodes[i]->grad.data[j];
            theta_grads.push_back(std::move(sum));
        }
        std::vector<const Tensor*> theta_grad_ptrs;
        for (const Tensor& tg : theta_grads) theta_grad_ptrs.push_back(&tg);
        adam_step(adam_theta, theta_params, theta_grad_ptrs);

        const double objective_value = objective->value.data[0];
        if (!std::isfinite(objective_value))
            fail("construct_fingerprint: non-finite objective at iteration ", t);
        pair.loss_trace.push_back(objective_value);
    }
    return pair;
}

std::pair<double, double> verifier_score(const FingerprintPair& pair, const Tensor& outputs) {
    require(outputs.rank() == 2, "verifier_score: outputs must be rank 2");
    require(outputs.rows() == pair.fingerprint.count() && outputs.cols() == pair.d_out,
            "verifier_score: outputs shaped [", outputs.rows(), ",", outputs.cols(),
            "], expected [", pair.fingerprint.count(), ",", pair.d_out, "]");
    Tensor standardized = pair.standardize.apply(outputs);
    Tensor flat({1, static_cast<int>(standardized.data.size())}, standardized.data);
    Tensor probs = predict(pair.verifier.net, flat);
    return {probs.data[0], probs.data[1]};
}

namespace {

constexpr int kPairVersion = 1;

void write_tensor_values(std::ostream& os, const Tensor& t) {
    for (size_t i = 0; i < t.data.size(); ++i)
        os << fmt_g17(t.data[i]) << ((i + 1) % 8 == 0 || i + 1 == t.data.size() ? '\n' : ' ');
}

void read_tensor_values(std::istream& is, Tensor& t) {
    std::string tok;
    for (auto& v : t.data) {
        if (!(is >> tok)) fail("pair file truncated");
        v = parse_f64(tok);
    }
}

}  // namespace

void save_pair(const FingerprintPair& pair, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "cannot open '", path, "' for writing");
    os << "fingerprintpair " << kPairVersion << "\n";
    os << "d_in " << pair.d_in << "\n";
    os << "d_out " << pair.d_out << "\n";
    os << "n " << pair.fingerprint.count() << "\n";
    os << "seed " << pair.seed << "\n";
    os << "iters " << pair.iters << "\n";
    os << "lr " << fmt_g17(pair.lr) << "\n";
    os << "standardize " << (pair.standardize.enabled ? 1 : 0) << "\n";
    if (pair.standardize.enabled) {
        os << "center";
        for (double v : pair.standardize.center) os << " " << fmt_g17(v);
        os << "\ninv_scale";
        for (double v : pair.standardize.inv_scale) os << " " << fmt_g17(v);
        os << "\n";
    }
    os << "w\n";
    write_tensor_values(os, pair.fingerprint.raw);
    os << "verifier\n";
    write_model(os, pair.verifier.net);
    os << "loss_trace " << pair.loss_trace.size() << "\n";
    for (size_t i = 0; i < pair.loss_trace.size(); ++i)
        os << fmt_g17(pair.loss_trace[i])
           << ((i + 1) % 8 == 0 || i + 1 == pair.loss_trace.size() ? '\n' : ' ');
    require(os.good(), "write failed for '", path, "'");
}

FingerprintPair load_pair(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "cannot open pair file '", path, "'");
    std::string magic, key;
    int version = -1;
    if (!(is >> magic >> version)) fail(path, ": not a fingerprint pair file");
    require(magic == "fingerprintpair", path, ": bad magic '", magic, "'");
    require(version == kPairVersion, path, ": unsupported version ", version);

    FingerprintPair pair;
    int n = 0, standardize = 0;
    std::string tok;
    require(static_cast<bool>(is >> key >> pair.d_in) && key == "d_in", path, ": expected d_in");
    require(static_cast<bool>(is >> key >> pair.d_out) && key == "d_out", path, ": expected d_out");
    require(static_cast<bool>(is >> key >> n) && key == "n", path, ": expected n");
    require(static_cast<bool>(is >> key >> pair.seed) && key == "seed", path, ": expected seed");
    require(static_cast<bool>(is >> key >> pair.iters) && key == "iters", path, ": expected iters");
    require(static_cast<bool>(is >> key >> tok) && key == "lr", path, ": expected lr");
    pair.lr = parse_f64(tok);
    require(static_cast<bool>(is >> key >> standardize) && key == "standardize", path,
            ": expected standardize");
    if (standardize) {
        pair.standardize.enabled = true;
        pair.standardize.center.assign(pair.d_out, 0.0);
        pair.standardize.inv_scale.assign(pair.d_out, 1.0);
        require(static_cast<bool>(is >> key) && key == "center", path, ": expected center");
        for (double& v : pair.standardize.center) {
            require(static_cast<bool>(is >> tok), path, ": truncated center");
            v = parse_f64(tok);
        }
        require(static_cast<bool>(is >> key) && key == "inv_scale", path, ": expected inv_scale");
        for (double& v : pair.standardize.inv_scale) {
            require(static_cast<bool>(is >> tok), path, ": truncated inv_scale");
            v = parse_f64(tok);
        }
    }
    require(static_cast<bool>(is >> key) && key == "w", path, ": expected w");
    pair.fingerprint.raw = Tensor::zeros({n, pair.d_in});
    read_tensor_values(is, pair.fingerprint.raw);
    require(static_cast<bool>(is >> key) && key == "verifier", path, ": expected verifier");
    pair.verifier.net = read_model(is);
    require(pair.verifier.net.d_in == n * pair.d_out, path, ": verifier width mismatch");
    size_t trace_len = 0;
    require(static_cast<bool>(is >> key >> trace_len) && key == "loss_trace", path,
            ": expected loss_trace");
    pair.loss_trace.resize(trace_len);
    for (double& v : pair.loss_trace) {
        require(static_cast<bool>(is >> tok), path, ": truncated loss trace");
        v = parse_f64(tok);
    }
    return pair;
}

}  // namespace mfp
