#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfp/model.hpp"
#include "mfp/obfuscate.hpp"
#include "mfp/tasks.hpp"
#include "mfp/train.hpp"

namespace mfp {

struct SuspectEntry {
    std::string id;
    SequentialModel model;
    bool positive = false;
    std::string obfuscation;  // provenance descriptor
    bool construction = false;
    bool utility_ok = true;
    double utility_ratio = 1.0;
    uint64_t seed = 0;
};

// The construction stage only ever sees this view; holdout members are not
// reachable through it.
struct EnsembleSplitView {
    const SequentialModel* target = nullptr;
    std::vector<const SequentialModel*> positives;
    std::vector<const SequentialModel*> negatives;
};

struct ModelEnsemble {
    SequentialModel target;
    std::vector<SuspectEntry> suspects;
    TaskKind task = TaskKind::classifier;
    uint64_t forge_seed = 0;

    EnsembleSplitView construction_split() const;
    // stratified subsample of the construction split, for ensemble-size sweeps
    EnsembleSplitView construction_split(double fraction, uint64_t seed) const;
    std::vector<const SuspectEntry*> holdout() const;
    void validate() const;  // shared d_in/d_out, both labels present in both splits
};

struct ForgeComposition {
    int per_tune_kind = 2;  // FTLL, FTAL, RTLL, RTAL each
    std::vector<double> wp_ratios = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> np_ratios;  // defaults to 1/16 .. 15/16
    int distill_seeds_per_arch = 2;
    int negatives_train_per_arch = 3;
    int negatives_public_per_arch = 2;
    int negatives_irrelevant = 5;

    ForgeComposition();
};

struct ForgeInputs {
    TaskKind task = TaskKind::classifier;
    const DatasetTriple* data = nullptr;
    // diverse architectures (paper's S/M/L role) used for distillation
    // students and independently trained negatives
    std::vector<std::vector<LayerSpec>> alt_archs;
    TuneOptions tune;             // finetune/retrain, 10 epochs by default
    DistillOptions distill_opt;
    TrainOptions negative_train;  // from-scratch negatives (classifier/regressor)
    GanOptions negative_gan;      // from-scratch negatives (generator)
};

// Builds the labeled suspect ensemble around a trained target: positives by
// obfuscating the target (tuning on the public-domain split), negatives
// independently trained across architectures and data sources. Suspects are
// built on parallel workers with per-suspect derived seeds, so results do
// not depend on scheduling.
ModelEnsemble forge_ensemble(const SequentialModel& target, const ForgeInputs& in,
                             const ForgeComposition& comp, uint64_t seed);

// Desk-scale utility proxy used for the factor-3 flag: cross-entropy for
// classifiers, mse for regressors, one-sided sample distance for generators.
double utility_loss(const SequentialModel& m, const Dataset& eval_data, uint64_t latent_seed);

void save_ensemble(const ModelEnsemble& e, const std::string& dir);
ModelEnsemble load_ensemble(const std::string& dir);

}  // namespace mfp
