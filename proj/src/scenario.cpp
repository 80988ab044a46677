#include "mfp/scenario.hpp"

#include "mfp/rng.hpp"

namespace mfp {

ScenarioKind scenario_kind_from(const std::string& name) {
    if (name == "classification") return ScenarioKind::classification;
    if (name == "regression") return ScenarioKind::regression;
    if (name == "generative") return ScenarioKind::generative;
    fail("unknown scenario '", name, "' (expected classification|regression|generative)");
}

const char* scenario_kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::classification: return "classification";
        case ScenarioKind::regression: return "regression";
        case ScenarioKind::generative: return "generative";
    }
    return "?";
}

Scenario make_scenario(ScenarioKind kind, uint64_t seed) {
    Scenario s;
    s.kind = kind;
    switch (kind) {
        case ScenarioKind::classification: {
            s.task = TaskKind::classifier;
            ClassificationRecipe r;
            s.data = make_classification(r, Rng::mix(seed, 0xda7a));
            // long training concentrates magnitude in useful weights, so the
            // pruning sweeps degrade the way larger nets do
            s.target_arch = mlp_spec({r.d_in, 64, r.classes}, LayerKind::softmax);
            s.alt_archs = {
                mlp_spec({r.d_in, 16, r.classes}, LayerKind::softmax),
                mlp_spec({r.d_in, 32, r.classes}, LayerKind::softmax),
                mlp_spec({r.d_in, 48, 48, r.classes}, LayerKind::softmax),
            };
            s.target_train.epochs = 120;
            s.target_train.lr = 0.02;
            s.target_train.loss = LossKind::cross_entropy;
            s.forge.tune.epochs = 10;
            s.forge.tune.lr = 0.01;
            s.forge.distill_opt.epochs = 40;
            s.forge.distill_opt.lr = 0.01;
            s.forge.negative_train = s.target_train;
            break;
        }
        case ScenarioKind::regression: {
            s.task = TaskKind::regressor;
            RegressionRecipe r;
            s.data = make_regression(r, Rng::mix(seed, 0xda7a));
            // the paper's Warfarin family: 31-100-1 target, deeper variants
            s.target_arch = mlp_spec({r.d_in, 100, 1}, LayerKind::dense);
            s.alt_archs = {
                mlp_spec({r.d_in, 100, 1}, LayerKind::dense),
                mlp_spec({r.d_in, 100, 100, 1}, LayerKind::dense),
                mlp_spec({r.d_in, 100, 100, 100, 1}, LayerKind::dense),
            };
            s.target_train.epochs = 40;
            s.target_train.lr = 0.01;
            s.target_train.loss = LossKind::mse;
            s.forge.tune.epochs = 10;
            s.forge.tune.lr = 0.005;
            s.forge.distill_opt.epochs = 40;
            s.forge.distill_opt.lr = 0.01;
            s.forge.negative_train = s.target_train;
            s.standardize_outputs = true;
            break;
        }
        case ScenarioKind::generative: {
            s.task = TaskKind::generator;
            GenerativeRecipe r;
            s.data = make_generative(r, Rng::mix(seed, 0xda7a));
            s.target_arch = mlp_spec({r.latent_dim, 64, 64, 2}, LayerKind::tanh);
            s.alt_archs = {
                mlp_spec({r.latent_dim, 32, 2}, LayerKind::tanh),
                mlp_spec({r.latent_dim, 64, 2}, LayerKind::tanh),
                mlp_spec({r.latent_dim, 64, 64, 2}, LayerKind::tanh),
            };
            s.target_gan.epochs = 150;
            s.target_gan.lr = 0.002;
            s.forge.tune.epochs = 10;
            s.forge.tune.lr = 0.001;
            s.forge.distill_opt.epochs = 60;
            s.forge.distill_opt.lr = 0.005;
            s.forge.negative_gan = s.target_gan;
            break;
        }
    }
    s.forge.task = s.task;
    s.forge.data = &s.data;
    s.forge.alt_archs = s.alt_archs;
    return s;
}

SequentialModel train_target(const Scenario& s, uint64_t seed) {
    const uint64_t init_seed = Rng::mix(seed, 0x7a26);
    if (s.task == TaskKind::generator) {
        SequentialModel gen = init_model(s.target_arch, TaskKind::generator, init_seed, "target");
        SequentialModel disc =
            init_model(mlp_spec({gen.d_out, 48, 1}, LayerKind::sigmoid), TaskKind::classifier,
                       Rng::mix(seed, 0xd15c));
        GanOptions opt = s.target_gan;
        opt.seed = Rng::mix(seed, 0x76a1);
        train_gan(gen, disc, fit_portion(s.data.train), opt);
        return gen;
    }
    SequentialModel m = init_model(s.target_arch, s.task, init_seed, "target");
    TrainOptions opt = s.target_train;
    opt.seed = Rng::mix(seed, 0x76a1);
    const Dataset fit = fit_portion(s.data.train);
    TargetAffine affine = target_affine_for(s.task, fit.labels);
    opt.target_center = affine.center;
    opt.target_scale = affine.scale;
    train_supervised(m, fit, opt);
    return m;
}

ModelEnsemble forge_scenario_ensemble(const Scenario& s, const ForgeComposition& comp,
                                      uint64_t seed) {
    SequentialModel target = train_target(s, seed);
    return forge_ensemble(target, s.forge, comp, Rng::mix(seed, 0xf02e));
}

}  // namespace mfp
