#pragma once

#include <cstdint>
#include <vector>

#include "mfp/model.hpp"
#include "mfp/tasks.hpp"

namespace mfp {

enum class LossKind { cross_entropy, mse };

struct TrainOptions {
    int epochs = 20;
    double lr = 0.01;
    LossKind loss = LossKind::cross_entropy;
    int batch_size = 32;
    uint64_t seed = 0;
    // Target affine for scale-heavy regression: training fits (y-center)/scale
    // and the affine is folded back into the final dense layer afterwards, so
    // the model still emits raw-scale outputs.
    double target_center = 0.0;
    double target_scale = 1.0;
    // cross-entropy at a distillation temperature: softmax(logits / T)
    double logit_temperature = 1.0;
    std::vector<char> trainable;  // empty = all parameters
};

struct TrainResult {
    std::vector<double> epoch_loss;
    double final_loss = 0.0;
};

TrainResult train_supervised(SequentialModel& m, const Dataset& data, const TrainOptions& opt);

// Cross-entropy between constant targets (one-hot or soft rows) and row
// probabilities obtained by softmaxing `logits`, composed from graph ops.
Node* cross_entropy_loss(Graph& g, Node* logits, const Tensor& targets);

struct GanOptions {
    int epochs = 200;
    double lr = 0.001;
    int batch_size = 64;
    uint64_t seed = 0;
};

struct GanResult {
    std::vector<double> gen_loss;
    std::vector<double> disc_loss;
};

// Alternating non-saturating GAN updates; the generator consumes standard
// normal latents of width gen.d_in and the discriminator must end in a
// sigmoid over one output.
GanResult train_gan(SequentialModel& gen, SequentialModel& disc, const Dataset& data,
                    const GanOptions& opt, const std::vector<char>& gen_trainable = {});

double classification_accuracy(const SequentialModel& m, const Dataset& data);

}  // namespace mfp
