#include "mfp/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <fstream>

#include <omp.h>

#include "json.hpp"
#include "mfp/rng.hpp"
#include "mfp/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mfp {

ForgeComposition::ForgeComposition() {
    for (int k = 1; k <= 15; ++k) np_ratios.push_back(k / 16.0);
}

EnsembleSplitView ModelEnsemble::construction_split() const {
    EnsembleSplitView v;
    v.target = &target;
    for (const auto& s : suspects) {
        if (!s.construction) continue;
        (s.positive ? v.positives : v.negatives).push_back(&s.model);
    }
    return v;
}

EnsembleSplitView ModelEnsemble::construction_split(double fraction, uint64_t seed) const {
    require(fraction > 0.0 && fraction <= 1.0, "ensemble fraction must be in (0,1], got ",
            fraction);
    EnsembleSplitView full = construction_split();
    if (fraction == 1.0) return full;
    Rng rng(Rng::mix(seed, 0xf7ac));
    auto subsample = [&](std::vector<const SequentialModel*>& side, uint64_t stream) {
        const size_t keep = std::max<size_t>(
            1, static_cast<size_t>(std::ceil(fraction * static_cast<double>(side.size()))));
        std::vector<size_t> order = rng.derive(stream).permutation(side.size());
        std::vector<const SequentialModel*> out;
        std::vector<size_t> chosen(order.begin(), order.begin() + keep);
        std::sort(chosen.begin(), chosen.end());  // keep manifest order
        for (size_t i : chosen) out.push_back(side[i]);
        side = std::move(out);
    };
    subsample(full.positives, 0);
    subsample(full.negatives, 1);
    return full;
}

std::vector<const SuspectEntry*> ModelEnsemble::holdout() const {
    std::vector<const SuspectEntry*> out;
    for (const auto& s : suspects)
        if (!s.construction) out.push_back(&s);
    return out;
}

void ModelEnsemble::validate() const {
    int cpos = 0, cneg = 0, hpos = 0, hneg = 0;
    for (const auto& s : suspects) {
        require(s.model.d_in == target.d_in && s.model.d_out == target.d_out,
                "ensemble member ", s.id, " dims [", s.model.d_in, "->", s.model.d_out,
                "] do not match target [", target.d_in, "->", target.d_out, "]");
        int& n = s.construction ? (s.positive ? cpos : cneg) : (s.positive ? hpos : hneg);
        ++n;
    }
    require(cpos > 0 && cneg > 0, "construction split is one-sided (", cpos, " positives, ",
            cneg, " negatives)");
    require(hpos > 0 && hneg > 0, "holdout split is one-sided (", hpos, " positives, ", hneg,
            " negatives)");
}

double utility_loss(const SequentialModel& m, const Dataset& eval_data, uint64_t latent_seed) {
    if (m.task == TaskKind::generator) {
        // one-sided distance from generated samples to reference points
        Rng rng(latent_seed);
        Tensor z = Tensor::zeros({256, m.d_in});
        for (double& v : z.data) v = rng.normal();
        Tensor samples = predict(m, z);
        const Tensor& ref = eval_data.features;
        double total = 0.0;
        for (int i = 0; i < samples.rows(); ++i) {
            double best = 1e300;
            for (int r = 0; r < ref.rows(); ++r) {
                double d2 = 0.0;
                for (int j = 0; j < samples.cols(); ++j) {
                    const double d = samples.at(i, j) - ref.at(r, j);
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
            total += std::sqrt(best);
        }
        return total / samples.rows();
    }

    Tensor out = predict(m, eval_data.features);
    if (m.task == TaskKind::classifier) {
        double ce = 0.0;
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j)
                if (eval_data.labels.at(i, j) > 0.0)
                    ce -= eval_data.labels.at(i, j) * std::log(std::max(out.at(i, j), 1e-300));
        return ce / out.rows();
    }
    double se = 0.0;
    for (size_t i = 0; i < out.data.size(); ++i) {
        const double d = out.data[i] - eval_data.labels.data[i];
        se += d * d;
    }
    return se / static_cast<double>(out.data.size());
}

namespace {

std::string ratio_tag(double r, int denom) {
    if (denom > 0) {
        const int num = static_cast<int>(std::lround(r * denom));
        return std::to_string(num) + "of" + std::to_string(denom);
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", r);
    return buf;
}

const char* arch_label(size_t i) {
    static const char* names[] = {"s", "m", "l", "xl", "xxl"};
    return i < 5 ? names[i] : "x";
}

struct Job {
    std::string id;
    bool positive;
    std::string obfuscation;
    uint64_t seed;
    std::function<SequentialModel(uint64_t)> build;
};

SequentialModel train_negative(const ForgeInputs& in, const std::vector<LayerSpec>& arch,
                               const Dataset& data, uint64_t seed, const std::string& tag) {
    if (in.task == TaskKind::generator) {
        SequentialModel gen = init_model(arch, TaskKind::generator, seed, tag);
        SequentialModel disc = init_model(mlp_spec({data.features.cols(), 48, 1}, LayerKind::sigmoid),
                                          TaskKind::classifier, Rng::mix(seed, 0xd15c));
        GanOptions opt = in.negative_gan;
        opt.seed = seed;
        train_gan(gen, disc, data, opt);
        return gen;
    }
    SequentialModel m = init_model(arch, in.task, seed, tag);
    TrainOptions opt = in.negative_train;
    opt.seed = seed;
    TargetAffine affine = target_affine_for(in.task, data.labels);
    opt.target_center = affine.center;
    opt.target_scale = affine.scale;
    opt.loss = in.task == TaskKind::classifier ? LossKind::cross_entropy : LossKind::mse;
    train_supervised(m, data, opt);
    return m;
}

}  // namespace

ModelEnsemble forge_ensemble(const SequentialModel& target, const ForgeInputs& in,
                             const ForgeComposition& comp, uint64_t seed) {
    require(in.data != nullptr, "forge_ensemble: no datasets");
    require(!in.alt_archs.empty(), "forge_ensemble: need at least one alternative architecture");
    require(comp.per_tune_kind >= 1 && comp.distill_seeds_per_arch >= 1 &&
                comp.negatives_train_per_arch >= 1,
            "forge_ensemble: composition counts must be >= 1");

    const Dataset tune_data = fit_portion(in.data->public_domain);
    const Dataset train_fit = fit_portion(in.data->train);
    const Dataset public_fit = tune_data;
    const Dataset irrelevant_fit = fit_portion(in.data->irrelevant);
    const Dataset util_eval = eval_portion(in.data->train);

    const SequentialModel* F = &target;
    auto teacher = [F](const Tensor& batch) { return predict(*F, batch); };

    std::vector<Job> jobs;
    // fine-tuning & partial retraining, several seeds each
    struct TuneKind {
        const char* name;
        FinetuneScope scope;
        bool reinit;
    };
    const TuneKind tune_kinds[] = {{"ftll", FinetuneScope::last_layer, false},
                                   {"ftal", FinetuneScope::all_layers, false},
                                   {"rtll", FinetuneScope::last_layer, true},
                                   {"rtal", FinetuneScope::all_layers, true}};
    for (const auto& tk : tune_kinds)
        for (int i = 0; i < comp.per_tune_kind; ++i) {
            std::string id = std::string("pos_") + tk.name + "_" + std::to_string(i);
            std::string desc = std::string(tk.name) + " epochs=" + std::to_string(in.tune.epochs);
            const TuneKind k = tk;
            jobs.push_back({id, true, desc, 0,
                            [&, k](uint64_t s) {
                                TuneOptions opt = in.tune;
                                opt.seed = s;
                                return k.reinit ? retrain(target, tune_data, k.scope, opt)
                                                : finetune(target, tune_data, k.scope, opt);
                            }});
        }
    for (double r : comp.wp_ratios)
        jobs.push_back({"pos_wp_" + ratio_tag(r, 0), true, "weight_prune ratio=" + ratio_tag(r, 0),
                        0, [&, r](uint64_t) { return prune_weights(target, r); }});
    for (double r : comp.np_ratios)
        jobs.push_back({"pos_np_" + ratio_tag(r, 16), true,
                        "neuron_prune ratio=" + ratio_tag(r, 16), 0,
                        [&, r](uint64_t) { return prune_neurons(target, r); }});
    for (size_t a = 0; a < in.alt_archs.size(); ++a)
        for (int i = 0; i < comp.distill_seeds_per_arch; ++i) {
            std::string id = std::string("pos_distill_") + arch_label(a) + "_" + std::to_string(i);
            const auto& arch = in.alt_archs[a];
            jobs.push_back({id, true,
                            "distill arch=" + std::string(arch_label(a)) +
                                " epochs=" + std::to_string(in.distill_opt.epochs),
                            0, [&, &arch = arch](uint64_t s) {
                                DistillOptions opt = in.distill_opt;
                                opt.seed = s;
                                return distill(teacher, in.task, arch, tune_data, opt);
                            }});
        }

    // negatives: independently trained across architectures and data sources
    for (size_t a = 0; a < in.alt_archs.size(); ++a) {
        const auto& arch = in.alt_archs[a];
        for (int i = 0; i < comp.negatives_train_per_arch; ++i) {
            std::string id = std::string("neg_") + arch_label(a) + "_train_" + std::to_string(i);
            jobs.push_back({id, false, "independent train-split", 0,
                            [&, &arch = arch](uint64_t s) {
                                return train_negative(in, arch, train_fit, s, "neg-train");
                            }});
        }
        for (int i = 0; i < comp.negatives_public_per_arch; ++i) {
            std::string id = std::string("neg_") + arch_label(a) + "_public_" + std::to_string(i);
            jobs.push_back({id, false, "independent public-split", 0,
                            [&, &arch = arch](uint64_t s) {
                                return train_negative(in, arch, public_fit, s, "neg-public");
                            }});
        }
    }
    for (int i = 0; i < comp.negatives_irrelevant; ++i) {
        const auto& arch = in.alt_archs[i % in.alt_archs.size()];
        std::string id = "neg_irrelevant_" + std::to_string(i);
        jobs.push_back({id, false, "independent irrelevant-data", 0,
                        [&, &arch = arch](uint64_t s) {
                            return train_negative(in, arch, irrelevant_fit, s, "neg-irrelevant");
                        }});
    }

    Rng rng(seed);
    for (size_t i = 0; i < jobs.size(); ++i) jobs[i].seed = rng.derive(i).seed();

    std::vector<SuspectEntry> entries(jobs.size());
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(jobs.size()); ++i) {
        try {
            SuspectEntry e;
            e.id = jobs[i].id;
            e.positive = jobs[i].positive;
            e.obfuscation = jobs[i].obfuscation;
            e.seed = jobs[i].seed;
            e.model = jobs[i].build(jobs[i].seed);
            entries[i] = std::move(e);
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);

    // factor-3 utility flag against the target, on rows no training saw
    const uint64_t latent_seed = Rng::mix(seed, 0x0711);
    const double target_loss = utility_loss(target, util_eval, latent_seed);
    for (auto& e : entries) {
        if (!e.positive) continue;
        const double loss = utility_loss(e.model, util_eval, latent_seed);
        e.utility_ratio = loss / std::max(target_loss, 1e-12);
        e.utility_ok = e.utility_ratio <= 3.0;
    }

    // Random 1:1 construction/holdout assignment, stratified per suspect
    // family (obfuscation kind / negative source+arch) so the construction
    // split covers every model family the holdout does; at this ensemble
    // size a plain random split frequently leaves whole families unseen.
    {
        std::map<std::string, std::vector<size_t>> families;
        for (size_t i = 0; i < entries.size(); ++i) {
            std::string key = entries[i].id;
            const size_t cut = key.find_last_of('_');
            if (cut != std::string::npos) key = key.substr(0, cut);
            families[key].push_back(i);
        }
        Rng arng = rng.derive(0xa551);
        for (auto& [key, idx] : families) {
            std::vector<size_t> order = arng.permutation(idx.size());
            // odd family sizes tip toward construction on a coin flip
            const bool extra_to_construction = arng.below(2) == 0;
            const size_t keep = idx.size() / 2 + (idx.size() % 2 && extra_to_construction);
            for (size_t r = 0; r < idx.size(); ++r)
                entries[idx[order[r]]].construction = r < keep;
        }
    }

    ModelEnsemble e;
    e.target = target;
    e.task = in.task;
    e.forge_seed = seed;
    e.suspects = std::move(entries);
    e.validate();
    return e;
}

void save_ensemble(const ModelEnsemble& e, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "suspects");
    save_model(e.target, (fs::path(dir) / "target.mdl").string());

    json manifest;
    manifest["version"] = 1;
    manifest["task"] = task_kind_name(e.task);
    manifest["forge_seed"] = e.forge_seed;
    manifest["d_in"] = e.target.d_in;
    manifest["d_out"] = e.target.d_out;
    manifest["target"] = "target.mdl";
    json suspects = json::array();
    for (const auto& s : e.suspects) {
        const std::string file = "suspects/" + s.id + ".mdl";
        save_model(s.model, (fs::path(dir) / file).string());
        json j;
        j["id"] = s.id;
        j["file"] = file;
        j["label"] = s.positive ? "+" : "-";
        j["split"] = s.construction ? "construction" : "holdout";
        j["obfuscation"] = s.obfuscation;
        j["seed"] = s.seed;
        if (s.positive) {
            j["utility_ok"] = s.utility_ok;
            j["utility_ratio"] = s.utility_ratio;
        }
        suspects.push_back(std::move(j));
    }
    manifest["suspects"] = std::move(suspects);

    std::ofstream os(fs::path(dir) / "manifest.json");
    require(os.good(), "cannot write manifest in '", dir, "'");
    os << manifest.dump(2) << "\n";
}

ModelEnsemble load_ensemble(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    require(is.good(), "no manifest.json under '", dir, "'");
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& ex) {
        fail("manifest.json under '", dir, "' is malformed: ", ex.what());
    }
    require(manifest.value("version", 0) == 1, "unsupported manifest version");

    ModelEnsemble e;
    e.task = task_kind_from(manifest.at("task").get<std::string>());
    e.forge_seed = manifest.value("forge_seed", 0ULL);
    e.target = load_model((fs::path(dir) / manifest.at("target").get<std::string>()).string());

    for (const auto& j : manifest.at("suspects")) {
        SuspectEntry s;
        s.id = j.at("id").get<std::string>();
        s.model = load_model((fs::path(dir) / j.at("file").get<std::string>()).string());
        s.positive = j.at("label").get<std::string>() == "+";
        s.construction = j.at("split").get<std::string>() == "construction";
        s.obfuscation = j.value("obfuscation", "");
        s.seed = j.value("seed", 0ULL);
        s.utility_ok = j.value("utility_ok", true);
        s.utility_ratio = j.value("utility_ratio", 1.0);
        e.suspects.push_back(std::move(s));
    }
    e.validate();
    return e;
}

}  // namespace mfp
