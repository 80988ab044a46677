#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfp/model.hpp"
#include "mfp/tasks.hpp"

namespace mfp {

enum class FinetuneScope { last_layer, all_layers };

// Zeroes the floor(ratio * total) smallest-magnitude dense weights, ranked
// globally across layers; biases are never touched.
SequentialModel prune_weights(const SequentialModel& m, double ratio);

// Per hidden dense layer, zeroes the floor(ratio * width) neurons with the
// smallest incoming-weight L1 norm: incoming column, bias entry and outgoing
// row in the next dense layer. Shapes are preserved.
SequentialModel prune_neurons(const SequentialModel& m, double ratio);

struct TuneOptions {
    int epochs = 10;
    double lr = 0.01;
    int batch_size = 32;
    uint64_t seed = 0;
};

// Resumes training on `data` with either only the final dense layer or all
// parameters trainable. Loss follows the model's task kind; generators resume
// adversarial training against a freshly initialized discriminator.
SequentialModel finetune(const SequentialModel& m, const Dataset& data, FinetuneScope scope,
                         const TuneOptions& opt);

// As finetune, but the final dense layer is re-initialized from the seed
// before training resumes.
SequentialModel retrain(const SequentialModel& m, const Dataset& data, FinetuneScope scope,
                        const TuneOptions& opt);

using PredictFn = std::function<Tensor(const Tensor&)>;

struct DistillOptions {
    int epochs = 60;
    double lr = 0.01;
    int batch_size = 32;
    double temperature = 4.0;
    uint64_t seed = 0;
};

// Black-box distillation: the teacher is only ever queried through `teacher`.
// Classifiers soften teacher probabilities at the given temperature and
// minimize cross-entropy to them; regressors and generators minimize mse to
// teacher outputs (generators on shared seeded latent batches).
SequentialModel distill(const PredictFn& teacher, TaskKind task,
                        const std::vector<LayerSpec>& student_spec, const Dataset& transfer,
                        const DistillOptions& opt);

// Mean/std affine used to standardize large-scale regression targets during
// training; identity for other tasks.
struct TargetAffine {
    double center = 0.0;
    double scale = 1.0;
};
TargetAffine target_affine_for(TaskKind task, const Tensor& labels);

}  // namespace mfp
