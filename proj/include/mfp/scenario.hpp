#pragma once

#include <cstdint>
#include <string>

#include "mfp/ensemble.hpp"
#include "mfp/tasks.hpp"
#include "mfp/train.hpp"

namespace mfp {

enum class ScenarioKind { classification, regression, generative };

ScenarioKind scenario_kind_from(const std::string& name);
const char* scenario_kind_name(ScenarioKind k);

// Desk-scale analogue of one evaluation scenario: datasets, target
// architecture and training recipe, plus forging defaults.
struct Scenario {
    ScenarioKind kind = ScenarioKind::classification;
    TaskKind task = TaskKind::classifier;
    DatasetTriple data;
    std::vector<LayerSpec> target_arch;
    std::vector<std::vector<LayerSpec>> alt_archs;  // S/M/L roles
    TrainOptions target_train;
    GanOptions target_gan;
    ForgeInputs forge;  // data pointer bound to this->data
    bool standardize_outputs = false;
};

Scenario make_scenario(ScenarioKind kind, uint64_t seed);

SequentialModel train_target(const Scenario& s, uint64_t seed);

// Convenience: trained target plus forged ensemble from one master seed.
ModelEnsemble forge_scenario_ensemble(const Scenario& s, const ForgeComposition& comp,
                                      uint64_t seed);

}  // namespace mfp
