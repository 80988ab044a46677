#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfp/tensor.hpp"

namespace mfp {

enum class SplitTag { train, public_domain, irrelevant };

const char* split_tag_name(SplitTag s);

// Feature values always lie in [-1,1]; classifier labels are one-hot rows.
struct Dataset {
    Tensor features;  // [M, d_in]
    Tensor labels;    // [M, d_out]; empty tensor for feature-only data
    SplitTag split = SplitTag::train;

    int size() const { return features.rows(); }
    Dataset take(int begin, int end) const;  // row range [begin, end)
};

// First 80% of a split is used for fitting, the rest is reserved so utility
// checks run on rows no training loop ever saw.
Dataset fit_portion(const Dataset& d);
Dataset eval_portion(const Dataset& d);

struct DatasetTriple {
    Dataset train;
    Dataset public_domain;
    Dataset irrelevant;
};

struct ClassificationRecipe {
    int classes = 3;
    int d_in = 8;
    int n_train = 600, n_public = 600, n_irrelevant = 600;
    double noise = 0.12;
    double shift = 0.1;  // train -> public-domain mean offset (L2 norm)
};

struct RegressionRecipe {
    int d_in = 31;
    int n_train = 600, n_public = 600, n_irrelevant = 600;
    uint64_t fn_seed = 1;  // fixes the smooth target function
    double shift = 0.05;
    double dose_max = 300.0;
};

struct GenerativeRecipe {
    int modes = 8;
    double radius = 0.7;
    double noise = 0.03;
    int latent_dim = 4;
    int n_train = 600, n_public = 600, n_irrelevant = 600;
};

DatasetTriple make_classification(const ClassificationRecipe& r, uint64_t seed);
DatasetTriple make_regression(const RegressionRecipe& r, uint64_t seed);
DatasetTriple make_generative(const GenerativeRecipe& r, uint64_t seed);

struct CsvScaling {
    std::vector<std::string> columns;
    std::vector<double> lo, hi;  // per feature column; lo==hi scales to 0
};

// Min-max scales the selected feature columns into [-1,1]; labels are taken
// raw. Scaling parameters are returned for reuse and can be persisted as a
// sidecar text file.
Dataset load_csv(const std::string& path, const std::vector<std::string>& feature_cols,
                 const std::vector<std::string>& label_cols, CsvScaling* scaling_out = nullptr);

void save_scaling(const CsvScaling& s, const std::string& path);
CsvScaling load_scaling(const std::string& path);

}  // namespace mfp
