#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfp/graph.hpp"
#include "mfp/tensor.hpp"

namespace mfp {

enum class LayerKind { dense, relu, tanh, sigmoid, softmax };
enum class TaskKind { classifier, regressor, generator };

const char* layer_kind_name(LayerKind k);
const char* task_kind_name(TaskKind k);
TaskKind task_kind_from(const std::string& name);

struct LayerSpec {
    LayerKind kind;
    int in = 0, out = 0;  // dense only

    static LayerSpec dense(int in, int out) { return {LayerKind::dense, in, out}; }
    static LayerSpec relu() { return {LayerKind::relu}; }
    static LayerSpec tanh() { return {LayerKind::tanh}; }
    static LayerSpec sigmoid() { return {LayerKind::sigmoid}; }
    static LayerSpec softmax() { return {LayerKind::softmax}; }
};

// Shorthand like "8-64-3" widths with an activation per hidden gap.
std::vector<LayerSpec> mlp_spec(const std::vector<int>& widths, LayerKind head);

struct DenseParams {
    Tensor w;  // [in, out]
    Tensor b;  // [1, out]
};

struct SequentialModel {
    TaskKind task = TaskKind::classifier;
    std::vector<LayerSpec> layers;
    std::vector<DenseParams> dense;  // one entry per dense layer, in layer order
    int d_in = 0, d_out = 0;
    uint64_t init_seed = 0;
    std::string recipe_tag;

    long long param_count() const;
    int dense_count() const { return static_cast<int>(dense.size()); }
    // flat view over all dense parameters: w0, b0, w1, b1, ...
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
};

long long param_count(const std::vector<LayerSpec>& spec);

// Kaiming-uniform dense weights (bound sqrt(6/fan_in)), zero biases, drawn
// from the counter-based stream for `seed`.
SequentialModel init_model(const std::vector<LayerSpec>& spec, TaskKind task, uint64_t seed,
                           const std::string& recipe_tag = "");

// Pure forward pass on a [B, d_in] batch.
Tensor predict(const SequentialModel& m, const Tensor& batch);

// Builds the model's forward pass inside a graph. `trainable` selects which
// flat parameters (w0,b0,w1,b1,...) become graph params; empty means all
// when train_params, none otherwise. param_nodes is aligned with
// SequentialModel::params() and holds nullptr for frozen entries.
struct GraphForward {
    Node* out = nullptr;
    std::vector<Node*> param_nodes;
};
GraphForward model_forward(Graph& g, const SequentialModel& m, Node* x, bool train_params,
                           const std::vector<char>& trainable = {},
                           bool skip_final_activation = false);

void save_model(const SequentialModel& m, const std::string& path);
SequentialModel load_model(const std::string& path);

// stream forms used by composite file formats
void write_model(std::ostream& os, const SequentialModel& m);
SequentialModel read_model(std::istream& is);

}  // namespace mfp
