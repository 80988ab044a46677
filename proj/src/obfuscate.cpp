#include "mfp/obfuscate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "mfp/rng.hpp"
#include "mfp/train.hpp"

namespace mfp {

SequentialModel prune_weights(const SequentialModel& m, double ratio) {
    require(ratio >= 0.0 && ratio < 1.0, "prune_weights: ratio must be in [0,1), got ", ratio);
    SequentialModel out = m;
    if (ratio == 0.0) return out;

    // (magnitude, dense layer, flat index); index tiebreak keeps it deterministic
    std::vector<std::tuple<double, int, size_t>> entries;
    long long total = 0;
    for (size_t d = 0; d < out.dense.size(); ++d) {
        total += out.dense[d].w.numel();
        for (size_t i = 0; i < out.dense[d].w.data.size(); ++i)
            entries.emplace_back(std::fabs(out.dense[d].w.data[i]), static_cast<int>(d), i);
    }
    const size_t n_zero = static_cast<size_t>(std::floor(ratio * static_cast<double>(total)));
    std::partial_sort(entries.begin(), entries.begin() + n_zero, entries.end());
    for (size_t r = 0; r < n_zero; ++r) {
        auto [mag, d, i] = entries[r];
        out.dense[d].w.data[i] = 0.0;
    }
    return out;
}

SequentialModel prune_neurons(const SequentialModel& m, double ratio) {
    require(ratio >= 0.0 && ratio < 1.0, "prune_neurons: ratio must be in [0,1), got ", ratio);
    require(m.dense.size() >= 2, "prune_neurons: model has no hidden dense layer");
    SequentialModel out = m;
    if (ratio == 0.0) return out;

    for (size_t d = 0; d + 1 < out.dense.size(); ++d) {
        Tensor& w = out.dense[d].w;
        Tensor& b = out.dense[d].b;
        Tensor& next_w = out.dense[d + 1].w;
        const int width = w.cols();
        const int n_zero = static_cast<int>(std::floor(ratio * width));
        if (n_zero == 0) continue;

        std::vector<std::pair<double, int>> norms(width);
        for (int j = 0; j < width; ++j) {
            double l1 = 0.0;
            for (int i = 0; i < w.rows(); ++i) l1 += std::fabs(w.at(i, j));
            norms[j] = {l1, j};
        }
        std::partial_sort(norms.begin(), norms.begin() + n_zero, norms.end());
        for (int r = 0; r < n_zero; ++r) {
            const int j = norms[r].second;
            for (int i = 0; i < w.rows(); ++i) w.at(i, j) = 0.0;
            b.data[j] = 0.0;
            for (int c = 0; c < next_w.cols(); ++c) next_w.at(j, c) = 0.0;
        }
    }
    return out;
}

TargetAffine target_affine_for(TaskKind task, const Tensor& labels) {
    if (task != TaskKind::regressor || labels.empty()) return {};
    double mean = 0.0;
    for (double v : labels.data) mean += v;
    mean /= static_cast<double>(labels.data.size());
    double var = 0.0;
    for (double v : labels.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(labels.data.size());
    const double sd = std::sqrt(var);
    // near-unit scales are not worth folding
    if (std::fabs(mean) < 2.0 && sd < 2.0) return {};
    return {mean, sd > 1e-9 ? sd : 1.0};
}

namespace {

std::vector<char> scope_mask(const SequentialModel& m, FinetuneScope scope) {
    if (scope == FinetuneScope::all_layers) return {};
    std::vector<char> mask(m.dense.size() * 2, 0);
    mask[mask.size() - 2] = 1;
    mask[mask.size() - 1] = 1;
    return mask;
}

std::vector<LayerSpec> default_disc_spec(int data_dim) {
    return mlp_spec({data_dim, 48, 1}, LayerKind::sigmoid);
}

SequentialModel tune(const SequentialModel& m, const Dataset& data, FinetuneScope scope,
                     const TuneOptions& opt, bool reinit_last) {
    SequentialModel out = m;
    if (reinit_last) {
        // fresh Kaiming-uniform final dense layer, zero bias
        Rng rng(Rng::mix(opt.seed, 0xf17a));
        DenseParams& last = out.dense.back();
        const double bound = std::sqrt(6.0 / last.w.rows());
        for (double& v : last.w.data) v = rng.uniform(-bound, bound);
        for (double& v : last.b.data) v = 0.0;
    }
    if (opt.epochs <= 0) return out;

    if (m.task == TaskKind::generator) {
        SequentialModel disc = init_model(default_disc_spec(out.d_out), TaskKind::classifier,
                                          Rng::mix(opt.seed, 0xd15c));
        GanOptions gopt;
        gopt.epochs = opt.epochs;
        gopt.lr = opt.lr;
        gopt.batch_size = opt.batch_size;
        gopt.seed = opt.seed;
        train_gan(out, disc, data, gopt, scope_mask(out, scope));
        return out;
    }

    TrainOptions topt;
    topt.epochs = opt.epochs;
    topt.lr = opt.lr;
    topt.batch_size = opt.batch_size;
    topt.seed = opt.seed;
    topt.loss = m.task == TaskKind::classifier ? LossKind::cross_entropy : LossKind::mse;
    topt.trainable = scope_mask(out, scope);
    TargetAffine affine = target_affine_for(m.task, data.labels);
    topt.target_center = affine.center;
    topt.target_scale = affine.scale;
    train_supervised(out, data, topt);
    return out;
}

}  // namespace

SequentialModel finetune(const SequentialModel& m, const Dataset& data, FinetuneScope scope,
                         const TuneOptions& opt) {
    return tune(m, data, scope, opt, false);
}

SequentialModel retrain(const SequentialModel& m, const Dataset& data, FinetuneScope scope,
                        const TuneOptions& opt) {
    return tune(m, data, scope, opt, true);
}

SequentialModel distill(const PredictFn& teacher, TaskKind task,
                        const std::vector<LayerSpec>& student_spec, const Dataset& transfer,
                        const DistillOptions& opt) {
    SequentialModel student = init_model(student_spec, task, Rng::mix(opt.seed, 0x57d),
                                         "distilled");

    Dataset labeled;
    labeled.split = transfer.split;

    if (task == TaskKind::generator) {
        // teacher and student share the exact same seeded latent batches
        Rng rng(Rng::mix(opt.seed, 0x1a7e));
        const int n = transfer.size();
        labeled.features = Tensor::zeros({n, student.d_in});
        for (double& v : labeled.features.data) v = rng.normal();
        labeled.labels = teacher(labeled.features);
    } else {
        labeled.features = transfer.features;
        labeled.labels = teacher(transfer.features);
    }
    require(labeled.labels.cols() == student.d_out, "distill: teacher output width ",
            labeled.labels.cols(), " != student d_out ", student.d_out);

    TrainOptions topt;
    topt.epochs = opt.epochs;
    topt.lr = opt.lr;
    topt.batch_size = opt.batch_size;
    topt.seed = Rng::mix(opt.seed, 0x7ea);

    if (task == TaskKind::classifier) {
        // soften black-box probabilities: p^(1/T) renormalized per row
        require(opt.temperature > 0.0, "distill: temperature must be positive");
        Tensor& p = labeled.labels;
        for (int i = 0; i < p.rows(); ++i) {
            double sum = 0.0;
            for (int j = 0; j < p.cols(); ++j) {
                const double soft = std::pow(std::max(p.at(i, j), 1e-300), 1.0 / opt.temperature);
                p.at(i, j) = soft;
                sum += soft;
            }
            for (int j = 0; j < p.cols(); ++j) p.at(i, j) /= sum;
        }
        topt.loss = LossKind::cross_entropy;
        // classical distillation softens both sides at T during training
        topt.logit_temperature = opt.temperature;
    } else {
        topt.loss = LossKind::mse;
        TargetAffine affine = target_affine_for(task, labeled.labels);
        topt.target_center = affine.center;
        topt.target_scale = affine.scale;
    }
    train_supervised(student, labeled, topt);
    return student;
}

}  // namespace mfp
