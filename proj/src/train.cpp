#include "mfp/train.hpp"

#include <cmath>

#include "mfp/adam.hpp"
#include "mfp/rng.hpp"

namespace mfp {

namespace {

Tensor gather_rows(const Tensor& src, const std::vector<size_t>& order, size_t begin, size_t end) {
    Tensor out = Tensor::zeros({static_cast<int>(end - begin), src.cols()});
    for (size_t r = begin; r < end; ++r)
        for (int j = 0; j < src.cols(); ++j)
            out.at(static_cast<int>(r - begin), j) = src.at(static_cast<int>(order[r]), j);
    return out;
}

// final-layer affine fold: model emitted h -> h*s + c
void fold_output_affine(SequentialModel& m, double center, double scale) {
    DenseParams& last = m.dense.back();
    for (double& v : last.w.data) v *= scale;
    for (double& v : last.b.data) v = v * scale + center;
}

void unfold_output_affine(SequentialModel& m, double center, double scale) {
    DenseParams& last = m.dense.back();
    for (double& v : last.w.data) v /= scale;
    for (double& v : last.b.data) v = (v - center) / scale;
}

std::vector<Tensor*> trainable_params(SequentialModel& m, const std::vector<char>& mask) {
    std::vector<Tensor*> all = m.params();
    if (mask.empty()) return all;
    std::vector<Tensor*> out;
    for (size_t i = 0; i < all.size(); ++i)
        if (mask[i]) out.push_back(all[i]);
    return out;
}

std::vector<const Tensor*> collect_grads(const GraphForward& fwd) {
    std::vector<const Tensor*> grads;
    for (Node* n : fwd.param_nodes)
        if (n) grads.push_back(&n->grad);
    return grads;
}

}  // namespace

Node* cross_entropy_loss(Graph& g, Node* logits, const Tensor& targets) {
    const Tensor& L = logits->value;
    require(L.same_shape(targets), "cross_entropy: logits [", L.rows(), ",", L.cols(),
            "] vs targets [", targets.rows(), ",", targets.cols(), "]");
    Node* logp = g.log(g.softmax(logits));
    // sum of targets (x) log-probs via a flattened inner product
    Node* flat = g.concat({logp});
    Tensor tcol({static_cast<int>(targets.data.size()), 1}, targets.data);
    Node* dot = g.matmul(flat, g.constant(std::move(tcol)));
    return g.scale(dot, -1.0 / L.rows());
}

TrainResult train_supervised(SequentialModel& m, const Dataset& data, const TrainOptions& opt) {
    TrainResult res;
    if (opt.epochs <= 0) return res;

    require(data.features.cols() == m.d_in, "train: feature dim ", data.features.cols(),
            " != model d_in ", m.d_in);
    require(data.labels.cols() == m.d_out, "train: label dim ", data.labels.cols(),
            " != model d_out ", m.d_out);
    require(data.size() > 0, "train: empty dataset");
    if (opt.loss == LossKind::cross_entropy)
        require(m.layers.back().kind == LayerKind::softmax,
                "cross-entropy training expects a softmax head");

    const bool affine = opt.target_center != 0.0 || opt.target_scale != 1.0;
    if (affine) {
        require(opt.target_scale > 0, "train: target_scale must be positive");
        require(m.layers.back().kind == LayerKind::dense,
                "target affine requires a linear output head");
        unfold_output_affine(m, opt.target_center, opt.target_scale);
    }
    Tensor labels = data.labels;
    if (affine)
        for (double& v : labels.data) v = (v - opt.target_center) / opt.target_scale;

    std::vector<Tensor*> params = trainable_params(m, opt.trainable);
    require(!params.empty(), "train: no trainable parameters");
    AdamState adam(opt.lr);
    Rng rng(opt.seed);

    const size_t n = static_cast<size_t>(data.size());
    const size_t bs = static_cast<size_t>(opt.batch_size);
    const bool softmax_head = m.layers.back().kind == LayerKind::softmax;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::vector<size_t> order = rng.derive(epoch).permutation(n);
        double loss_sum = 0.0;
        size_t batches = 0;
        for (size_t begin = 0; begin < n; begin += bs) {
            const size_t end = std::min(begin + bs, n);
            Tensor xb = gather_rows(data.features, order, begin, end);
            Tensor yb = gather_rows(labels, order, begin, end);

            Graph g;
            Node* x = g.constant(std::move(xb));
            // cross-entropy composes its own softmax over the logits
            GraphForward fwd = model_forward(g, m, x, true, opt.trainable,
                                             opt.loss == LossKind::cross_entropy && softmax_head);
            Node* out = fwd.out;
            if (opt.loss == LossKind::cross_entropy && opt.logit_temperature != 1.0)
                out = g.scale(out, 1.0 / opt.logit_temperature);
            Node* loss = opt.loss == LossKind::cross_entropy
                             ? cross_entropy_loss(g, out, yb)
                             : g.mse(out, g.constant(std::move(yb)));
            g.backward(loss);
            adam_step(adam, params, collect_grads(fwd));
            loss_sum += loss->value.data[0];
            ++batches;
        }
        res.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    }
    res.final_loss = res.epoch_loss.back();

    if (affine) fold_output_affine(m, opt.target_center, opt.target_scale);
    return res;
}

GanResult train_gan(SequentialModel& gen, SequentialModel& disc, const Dataset& data,
                    const GanOptions& opt, const std::vector<char>& gen_trainable) {
    GanResult res;
    require(gen.d_out == data.features.cols(), "train_gan: generator d_out ", gen.d_out,
            " != data dim ", data.features.cols());
    require(disc.d_in == data.features.cols() && disc.d_out == 1,
            "train_gan: discriminator must map data dim to 1");
    require(disc.layers.back().kind == LayerKind::sigmoid,
            "train_gan: discriminator must end in sigmoid");
    if (opt.epochs <= 0) return res;

    std::vector<Tensor*> gen_params = trainable_params(gen, gen_trainable);
    std::vector<Tensor*> disc_params = disc.params();
    AdamState gen_adam(opt.lr), disc_adam(opt.lr);
    Rng rng(opt.seed);

    const size_t n = static_cast<size_t>(data.size());
    const size_t bs = static_cast<size_t>(opt.batch_size);

    auto sample_latents = [&](Rng& r, int count) {
        Tensor z = Tensor::zeros({count, gen.d_in});
        for (double& v : z.data) v = r.normal();
        return z;
    };

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        Rng erng = rng.derive(epoch);
        std::vector<size_t> order = erng.permutation(n);
        double dsum = 0.0, gsum = 0.0;
        size_t batches = 0;
        for (size_t begin = 0; begin < n; begin += bs) {
            const size_t end = std::min(begin + bs, n);
            const int b = static_cast<int>(end - begin);

            // discriminator step: maximize log D(x) + log(1-D(G(z)))
            {
                Graph g;
                Node* real = g.constant(gather_rows(data.features, order, begin, end));
                Node* z = g.constant(sample_latents(erng, b));
                Node* fake = model_forward(g, gen, z, false).out;
                GraphForward dr = model_forward(g, disc, real, true, {}, true);
                GraphForward df = model_forward(g, disc, fake, true, {}, true);
                Node* loss = g.scale(
                    g.add(g.mean(g.log(g.sigmoid(dr.out))),
                          g.mean(g.log(g.sigmoid(g.scale(df.out, -1.0))))),
                    -1.0);
                g.backward(loss);
                // gradients for the twice-instantiated params are summed
                std::vector<Tensor> summed;
                summed.reserve(dr.param_nodes.size());
                std::vector<const Tensor*> grads;
                for (size_t i = 0; i < dr.param_nodes.size(); ++i) {
                    Tensor s = dr.param_nodes[i]->grad;
                    const Tensor& o = df.param_nodes[i]->grad;
                    for (size_t j = 0; j < s.data.size(); ++j) s.data[j] += o.data[j];
                    summed.push_back(std::move(s));
                }
                for (const Tensor& s : summed) grads.push_back(&s);
                adam_step(disc_adam, disc_params, grads);
                dsum += loss->value.data[0];
            }

            // generator step: maximize log D(G(z))
            {
                Graph g;
                Node* z = g.constant(sample_latents(erng, b));
                GraphForward gf = model_forward(g, gen, z, true, gen_trainable);
                Node* dlogit = model_forward(g, disc, gf.out, false, {}, true).out;
                Node* loss = g.scale(g.mean(g.log(g.sigmoid(dlogit))), -1.0);
                g.backward(loss);
                adam_step(gen_adam, gen_params, collect_grads(gf));
                gsum += loss->value.data[0];
            }
            ++batches;
        }
        res.disc_loss.push_back(dsum / static_cast<double>(batches));
        res.gen_loss.push_back(gsum / static_cast<double>(batches));
    }
    return res;
}

double classification_accuracy(const SequentialModel& m, const Dataset& data) {
    Tensor probs = predict(m, data.features);
    int hit = 0;
    for (int i = 0; i < probs.rows(); ++i) {
        int pred = 0, truth = 0;
        for (int j = 1; j < probs.cols(); ++j)
            if (probs.at(i, j) > probs.at(i, pred)) pred = j;
        for (int j = 1; j < data.labels.cols(); ++j)
            if (data.labels.at(i, j) > data.labels.at(i, truth)) truth = j;
        if (pred == truth) ++hit;
    }
    return static_cast<double>(hit) / probs.rows();
}

}  // namespace mfp
