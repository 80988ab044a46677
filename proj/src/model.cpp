#include "mfp/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mfp/kernels.hpp"
#include "mfp/rng.hpp"

namespace mfp {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::tanh: return "tanh";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::classifier: return "classifier";
        case TaskKind::regressor: return "regressor";
        case TaskKind::generator: return "generator";
    }
    return "?";
}

TaskKind task_kind_from(const std::string& name) {
    if (name == "classifier") return TaskKind::classifier;
    if (name == "regressor") return TaskKind::regressor;
    if (name == "generator") return TaskKind::generator;
    fail("unknown task kind '", name, "'");
}

std::vector<LayerSpec> mlp_spec(const std::vector<int>& widths, LayerKind head) {
    require(widths.size() >= 2, "mlp_spec: need at least input and output width");
    std::vector<LayerSpec> spec;
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        spec.push_back(LayerSpec::dense(widths[i], widths[i + 1]));
        if (i + 2 < widths.size()) spec.push_back(LayerSpec::relu());
    }
    if (head != LayerKind::dense) spec.push_back({head});
    return spec;
}

long long param_count(const std::vector<LayerSpec>& spec) {
    long long n = 0;
    for (const auto& l : spec)
        if (l.kind == LayerKind::dense) n += static_cast<long long>(l.in) * l.out + l.out;
    return n;
}

long long SequentialModel::param_count() const { return mfp::param_count(layers); }

std::vector<Tensor*> SequentialModel::params() {
    std::vector<Tensor*> out;
    for (auto& d : dense) {
        out.push_back(&d.w);
        out.push_back(&d.b);
    }
    return out;
}

std::vector<const Tensor*> SequentialModel::params() const {
    std::vector<const Tensor*> out;
    for (const auto& d : dense) {
        out.push_back(&d.w);
        out.push_back(&d.b);
    }
    return out;
}

namespace {

void validate_spec(const std::vector<LayerSpec>& spec) {
    require(!spec.empty(), "model spec is empty");
    require(spec.front().kind == LayerKind::dense, "model must start with a dense layer");
    int width = -1;
    for (const auto& l : spec) {
        if (l.kind == LayerKind::dense) {
            require(l.in > 0 && l.out > 0, "dense layer with non-positive width");
            require(width == -1 || width == l.in, "dense widths do not chain: expected in=",
                    width, ", got ", l.in);
            width = l.out;
        }
    }
}

}  // namespace

SequentialModel init_model(const std::vector<LayerSpec>& spec, TaskKind task, uint64_t seed,
                           const std::string& recipe_tag) {
    validate_spec(spec);
    SequentialModel m;
    m.task = task;
    m.layers = spec;
    m.init_seed = seed;
    m.recipe_tag = recipe_tag;
    m.d_in = spec.front().in;
    Rng rng(seed);
    int width = 0;
    for (const auto& l : spec) {
        if (l.kind != LayerKind::dense) continue;
        width = l.out;
        DenseParams p;
        p.w = Tensor::zeros({l.in, l.out});
        p.b = Tensor::zeros({1, l.out});
        const double bound = std::sqrt(6.0 / l.in);
        for (double& v : p.w.data) v = rng.uniform(-bound, bound);
        m.dense.push_back(std::move(p));
    }
    m.d_out = width;
    return m;
}

Tensor predict(const SequentialModel& m, const Tensor& batch) {
    require(batch.rank() == 2, "predict: batch must be rank 2");
    require(batch.cols() == m.d_in, "predict: batch width ", batch.cols(),
            " does not match model d_in ", m.d_in);
    Tensor cur = batch;
    size_t di = 0;
    for (const auto& l : m.layers) {
        switch (l.kind) {
            case LayerKind::dense: {
                const DenseParams& p = m.dense[di++];
                Tensor y = Tensor::zeros({cur.rows(), l.out});
                kernels::matmul_nn(cur.data.data(), p.w.data.data(), y.data.data(),
                                   cur.rows(), l.in, l.out);
                for (int i = 0; i < y.rows(); ++i)
                    for (int j = 0; j < y.cols(); ++j) y.at(i, j) += p.b.data[j];
                cur = std::move(y);
                break;
            }
            case LayerKind::relu:
                kernels::unary(kernels::Unary::relu, cur.data.data(), cur.data.data(), cur.data.size());
                break;
            case LayerKind::tanh:
                kernels::unary(kernels::Unary::tanh, cur.data.data(), cur.data.data(), cur.data.size());
                break;
            case LayerKind::sigmoid:
                kernels::unary(kernels::Unary::sigmoid, cur.data.data(), cur.data.data(), cur.data.size());
                break;
            case LayerKind::softmax: {
                Tensor y = Tensor::zeros(cur.shape);
                kernels::softmax_rows(cur.data.data(), y.data.data(), cur.rows(), cur.cols());
                cur = std::move(y);
                break;
            }
        }
    }
    require(cur.all_finite(), "predict produced a non-finite value");
    return cur;
}

GraphForward model_forward(Graph& g, const SequentialModel& m, Node* x, bool train_params,
                           const std::vector<char>& trainable, bool skip_final_activation) {
    require(x->value.cols() == m.d_in, "model_forward: input width ", x->value.cols(),
            " does not match d_in ", m.d_in);
    if (!trainable.empty())
        require(trainable.size() == m.dense.size() * 2,
                "model_forward: trainable mask must cover w/b per dense layer");

    GraphForward fwd;
    fwd.param_nodes.assign(m.dense.size() * 2, nullptr);
    Node* cur = x;
    size_t di = 0;
    for (size_t li = 0; li < m.layers.size(); ++li) {
        const auto& l = m.layers[li];
        const bool last = li + 1 == m.layers.size();
        if (skip_final_activation && last && l.kind != LayerKind::dense) break;
        switch (l.kind) {
            case LayerKind::dense: {
                const DenseParams& p = m.dense[di];
                bool train_w = train_params && (trainable.empty() || trainable[2 * di]);
                bool train_b = train_params && (trainable.empty() || trainable[2 * di + 1]);
                Node* wn = train_w ? g.param(p.w) : g.constant(p.w);
                Node* bn = train_b ? g.param(p.b) : g.constant(p.b);
                if (train_w) fwd.param_nodes[2 * di] = wn;
                if (train_b) fwd.param_nodes[2 * di + 1] = bn;
                cur = g.add(g.matmul(cur, wn), bn);
                ++di;
                break;
            }
            case LayerKind::relu: cur = g.relu(cur); break;
            case LayerKind::tanh: cur = g.tanh(cur); break;
            case LayerKind::sigmoid: cur = g.sigmoid(cur); break;
            case LayerKind::softmax: cur = g.softmax(cur); break;
        }
    }
    fwd.out = cur;
    return fwd;
}

namespace {

constexpr int kModelVersion = 1;

void write_values(std::ostream& os, const Tensor& t) {
    for (size_t i = 0; i < t.data.size(); ++i)
        os << fmt_g17(t.data[i]) << ((i + 1) % 8 == 0 || i + 1 == t.data.size() ? '\n' : ' ');
}

void read_values(std::istream& is, Tensor& t) {
    for (auto& v : t.data) {
        std::string tok;
        if (!(is >> tok)) fail("model file truncated while reading parameters");
        v = parse_f64(tok);
    }
}

}  // namespace

void write_model(std::ostream& os, const SequentialModel& m) {
    os << "modelfile " << kModelVersion << "\n";
    os << "task " << task_kind_name(m.task) << "\n";
    os << "provenance_seed " << m.init_seed << "\n";
    os << "provenance_tag " << (m.recipe_tag.empty() ? "-" : m.recipe_tag) << "\n";
    os << "layers " << m.layers.size() << "\n";
    for (const auto& l : m.layers) {
        os << layer_kind_name(l.kind);
        if (l.kind == LayerKind::dense) os << " " << l.in << " " << l.out;
        os << "\n";
    }
    os << "params " << m.dense.size() << "\n";
    for (size_t i = 0; i < m.dense.size(); ++i) {
        os << "dense_params " << i << " " << m.dense[i].w.shape[0] << " "
           << m.dense[i].w.shape[1] << "\n";
        write_values(os, m.dense[i].w);
        write_values(os, m.dense[i].b);
    }
}

SequentialModel read_model(std::istream& is) {
    std::string magic;
    int version = -1;
    if (!(is >> magic >> version)) fail("not a model file: missing header");
    require(magic == "modelfile", "not a model file: bad magic '", magic, "'");
    require(version == kModelVersion, "unsupported model file version ", version);

    SequentialModel m;
    std::string key, value;
    require(static_cast<bool>(is >> key >> value) && key == "task", "model file: expected task");
    m.task = task_kind_from(value);
    require(static_cast<bool>(is >> key >> m.init_seed) && key == "provenance_seed",
            "model file: expected provenance_seed");
    require(static_cast<bool>(is >> key >> value) && key == "provenance_tag",
            "model file: expected provenance_tag");
    m.recipe_tag = value == "-" ? "" : value;

    size_t n_layers = 0;
    require(static_cast<bool>(is >> key >> n_layers) && key == "layers",
            "model file: expected layers");
    for (size_t i = 0; i < n_layers; ++i) {
        std::string kind;
        if (!(is >> kind)) fail("model file truncated in layer list");
        if (kind == "dense") {
            LayerSpec l{LayerKind::dense};
            if (!(is >> l.in >> l.out)) fail("model file truncated in dense layer spec");
            m.layers.push_back(l);
        } else if (kind == "relu") {
            m.layers.push_back(LayerSpec::relu());
        } else if (kind == "tanh") {
            m.layers.push_back(LayerSpec::tanh());
        } else if (kind == "sigmoid") {
            m.layers.push_back(LayerSpec::sigmoid());
        } else if (kind == "softmax") {
            m.layers.push_back(LayerSpec::softmax());
        } else {
            fail("model file: unknown layer kind '", kind, "'");
        }
    }
    validate_spec(m.layers);
    m.d_in = m.layers.front().in;
    for (const auto& l : m.layers)
        if (l.kind == LayerKind::dense) m.d_out = l.out;

    size_t n_dense = 0;
    require(static_cast<bool>(is >> key >> n_dense) && key == "params",
            "model file: expected params");
    for (size_t i = 0; i < n_dense; ++i) {
        size_t idx;
        int in, out;
        require(static_cast<bool>(is >> key >> idx >> in >> out) && key == "dense_params" && idx == i,
                "model file: expected dense_params ", i);
        DenseParams p;
        p.w = Tensor::zeros({in, out});
        p.b = Tensor::zeros({1, out});
        read_values(is, p.w);
        read_values(is, p.b);
        m.dense.push_back(std::move(p));
    }
    size_t want = 0;
    for (const auto& l : m.layers) want += l.kind == LayerKind::dense ? 1 : 0;
    require(m.dense.size() == want, "model file: dense param blocks (", m.dense.size(),
            ") do not match dense layers (", want, ")");
    return m;
}

void save_model(const SequentialModel& m, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "cannot open '", path, "' for writing");
    write_model(os, m);
    require(os.good(), "write failed for '", path, "'");
}

SequentialModel load_model(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "cannot open model file '", path, "'");
    try {
        return read_model(is);
    } catch (const Error& e) {
        fail(path, ": ", e.what());
    }
}

}  // namespace mfp
