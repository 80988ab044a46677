#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfp/ensemble.hpp"
#include "mfp/model.hpp"

namespace mfp {

// Trainable fingerprint inputs, parametrized as tanh of unconstrained reals
// so every derived input stays strictly inside (-1,1)^d_in.
struct AdaptiveFingerprint {
    Tensor raw;  // [N, d_in]

    int count() const { return raw.rows(); }
    int d_in() const { return raw.cols(); }
    Tensor inputs() const;  // tanh(raw), recomputed on demand
};

// Binary classifier over the concatenated suspect outputs: one ReLU hidden
// layer, softmax pair (p_minus, p_plus) on top.
struct MetaVerifier {
    SequentialModel net;  // dense(N*d_out, hidden) relu dense(hidden, 2) softmax
};

// Optional per-dimension affine applied to suspect outputs before the
// verifier; frozen from the target's outputs on the initial fingerprint.
struct OutputAffine {
    bool enabled = false;
    std::vector<double> center;     // per output dim
    std::vector<double> inv_scale;  // per output dim

    Tensor apply(const Tensor& outputs) const;
};

struct FingerprintPair {
    AdaptiveFingerprint fingerprint;
    MetaVerifier verifier;
    int d_in = 0, d_out = 0;
    OutputAffine standardize;
    uint64_t seed = 0;
    int iters = 0;
    double lr = 0.0;
    std::vector<double> loss_trace;  // objective value per iteration
};

struct ConstructOptions {
    int n_examples = 100;
    int iters = 1000;
    double lr = 0.001;
    int hidden = 100;
    bool standardize_outputs = false;
};

AdaptiveFingerprint init_fingerprint(int n_examples, int d_in, uint64_t seed);

// Joint stochastic ascent over fingerprint and verifier: each iteration
// samples one (negative, target, positive) tuple, scores all three on the
// current fingerprint and ascends log p+(positive) + log p+(target) +
// log p-(negative) with two Adam optimizers.
FingerprintPair construct_fingerprint(const EnsembleSplitView& construction,
                                      const ConstructOptions& opt, uint64_t seed);

// (p_minus, p_plus) for one suspect's outputs on the fingerprint, rows in
// fingerprint-index order.
std::pair<double, double> verifier_score(const FingerprintPair& pair, const Tensor& outputs);

void save_pair(const FingerprintPair& pair, const std::string& path);
FingerprintPair load_pair(const std::string& path);

}  // namespace mfp
