#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "mfp/model.hpp"
#include "mfp/rng.hpp"
#include "mfp/tasks.hpp"
#include "mfp/train.hpp"

using namespace mfp;

namespace {

std::string temp_file(const char* stem) {
    return std::string("/tmp/mfp_test_") + stem + "_" + std::to_string(::getpid()) + ".mdl";
}

}  // namespace

TEST_CASE("init_model is deterministic and zero-biased") {
    auto spec = mlp_spec({31, 100, 1}, LayerKind::dense);
    SequentialModel a = init_model(spec, TaskKind::regressor, 7);
    SequentialModel b = init_model(spec, TaskKind::regressor, 7);
    CHECK(a.d_in == 31);
    CHECK(a.d_out == 1);
    REQUIRE(a.dense.size() == b.dense.size());
    for (size_t i = 0; i < a.dense.size(); ++i) {
        CHECK(bitwise_equal(a.dense[i].w, b.dense[i].w));
        for (double v : a.dense[i].b.data) CHECK(v == 0.0);
    }
    SequentialModel c = init_model(spec, TaskKind::regressor, 8);
    CHECK_FALSE(bitwise_equal(a.dense[0].w, c.dense[0].w));
}

TEST_CASE("invalid layer chaining is rejected") {
    std::vector<LayerSpec> bad{LayerSpec::dense(4, 8), LayerSpec::relu(), LayerSpec::dense(9, 2)};
    CHECK_THROWS_AS(init_model(bad, TaskKind::classifier, 0), Error);
    CHECK_THROWS_AS(init_model({LayerSpec::relu()}, TaskKind::classifier, 0), Error);
}

TEST_CASE("param_count matches stored parameters") {
    auto spec = mlp_spec({8, 64, 3}, LayerKind::softmax);
    SequentialModel m = init_model(spec, TaskKind::classifier, 1);
    long long stored = 0;
    for (const auto& d : m.dense) stored += d.w.numel() + d.b.numel();
    CHECK(param_count(spec) == stored);
    CHECK(m.param_count() == 8 * 64 + 64 + 64 * 3 + 3);
}

TEST_CASE("predict: classifier rows live on the simplex for clipped inputs") {
    SequentialModel m = init_model(mlp_spec({8, 32, 3}, LayerKind::softmax),
                                   TaskKind::classifier, 3);
    Rng rng(11);
    Tensor batch = Tensor::zeros({50, 8});
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    Tensor out = predict(m, batch);
    for (int i = 0; i < out.rows(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < out.cols(); ++j) {
            CHECK(out.at(i, j) >= 0.0);
            sum += out.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("predict: generator outputs stay in (-1,1)") {
    SequentialModel g = init_model(mlp_spec({4, 32, 2}, LayerKind::tanh), TaskKind::generator, 5);
    Rng rng(6);
    Tensor z = Tensor::zeros({40, 4});
    for (double& v : z.data) v = rng.normal();
    Tensor out = predict(g, z);
    for (double v : out.data) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("predict: batch rows are independent") {
    SequentialModel m = init_model(mlp_spec({6, 16, 4}, LayerKind::softmax),
                                   TaskKind::classifier, 9);
    Rng rng(21);
    Tensor batch = Tensor::zeros({10, 6});
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    Tensor all = predict(m, batch);
    for (int i = 0; i < 10; ++i) {
        Tensor one = predict(m, batch.row(i));
        for (int j = 0; j < 4; ++j) CHECK(one.at(0, j) == all.at(i, j));
    }
    CHECK_THROWS_AS(predict(m, Tensor::zeros({2, 5})), Error);
}

TEST_CASE("predict is permutation-equivariant") {
    SequentialModel m = init_model(mlp_spec({5, 12, 2}, LayerKind::softmax),
                                   TaskKind::classifier, 13);
    Rng rng(14);
    Tensor batch = Tensor::zeros({8, 5});
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    Tensor fwd = predict(m, batch);

    Tensor rev = Tensor::zeros({8, 5});
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 5; ++j) rev.at(i, j) = batch.at(7 - i, j);
    Tensor out = predict(m, rev);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 2; ++j) CHECK(out.at(i, j) == fwd.at(7 - i, j));
}

TEST_CASE("train_supervised: zero epochs is a no-op") {
    SequentialModel m = init_model(mlp_spec({8, 16, 3}, LayerKind::softmax),
                                   TaskKind::classifier, 2);
    SequentialModel before = m;
    DatasetTriple data = make_classification({}, 4);
    TrainOptions opt;
    opt.epochs = 0;
    train_supervised(m, data.train, opt);
    for (size_t i = 0; i < m.dense.size(); ++i) {
        CHECK(bitwise_equal(m.dense[i].w, before.dense[i].w));
        CHECK(bitwise_equal(m.dense[i].b, before.dense[i].b));
    }
}

TEST_CASE("train_supervised: separable blobs reach 99% accuracy") {
    ClassificationRecipe r;
    r.classes = 2;
    r.noise = 0.08;
    DatasetTriple data = make_classification(r, 17);
    SequentialModel m = init_model(mlp_spec({r.d_in, 16, 2}, LayerKind::softmax),
                                   TaskKind::classifier, 3);
    TrainOptions opt;
    opt.epochs = 20;
    opt.lr = 0.01;
    opt.seed = 5;
    TrainResult res = train_supervised(m, data.train, opt);
    CHECK(res.epoch_loss.size() == 20);
    CHECK(classification_accuracy(m, data.train) >= 0.99);
}

TEST_CASE("train_supervised: mse on constant targets converges below 1e-3") {
    Dataset d;
    Rng rng(8);
    d.features = Tensor::zeros({200, 4});
    for (double& v : d.features.data) v = rng.uniform(-1.0, 1.0);
    d.labels = Tensor::zeros({200, 1});
    for (double& v : d.labels.data) v = 0.37;
    SequentialModel m = init_model(mlp_spec({4, 8, 1}, LayerKind::dense), TaskKind::regressor, 1);
    TrainOptions opt;
    opt.epochs = 60;
    opt.lr = 0.01;
    opt.loss = LossKind::mse;
    TrainResult res = train_supervised(m, d, opt);
    CHECK(res.final_loss < 1e-3);
}

TEST_CASE("train_supervised rejects mismatched dims and is seed-deterministic") {
    DatasetTriple data = make_classification({}, 4);
    SequentialModel wrong = init_model(mlp_spec({9, 8, 3}, LayerKind::softmax),
                                       TaskKind::classifier, 2);
    TrainOptions opt;
    opt.epochs = 1;
    CHECK_THROWS_AS(train_supervised(wrong, data.train, opt), Error);

    auto run = [&] {
        SequentialModel m = init_model(mlp_spec({8, 16, 3}, LayerKind::softmax),
                                       TaskKind::classifier, 2);
        TrainOptions o;
        o.epochs = 3;
        o.lr = 0.01;
        o.seed = 123;
        train_supervised(m, data.train, o);
        return m;
    };
    SequentialModel a = run(), b = run();
    for (size_t i = 0; i < a.dense.size(); ++i) CHECK(bitwise_equal(a.dense[i].w, b.dense[i].w));
}

TEST_CASE("train_gan: zero epochs keeps the generator at init") {
    DatasetTriple data = make_generative({}, 30);
    SequentialModel gen = init_model(mlp_spec({4, 32, 2}, LayerKind::tanh), TaskKind::generator, 1);
    SequentialModel before = gen;
    SequentialModel disc = init_model(mlp_spec({2, 32, 1}, LayerKind::sigmoid),
                                      TaskKind::classifier, 2);
    GanOptions opt;
    opt.epochs = 0;
    train_gan(gen, disc, data.train, opt);
    for (size_t i = 0; i < gen.dense.size(); ++i)
        CHECK(bitwise_equal(gen.dense[i].w, before.dense[i].w));
}

TEST_CASE("train_gan: ring generator recovers the data's mean radius") {
    GenerativeRecipe r;
    DatasetTriple data = make_generative(r, 44);
    SequentialModel gen = init_model(mlp_spec({r.latent_dim, 48, 48, 2}, LayerKind::tanh),
                                     TaskKind::generator, 10);
    SequentialModel disc = init_model(mlp_spec({2, 48, 1}, LayerKind::sigmoid),
                                      TaskKind::classifier, 11);
    GanOptions opt;
    opt.epochs = 150;
    opt.lr = 0.002;
    opt.seed = 12;
    train_gan(gen, disc, data.train, opt);

    Rng rng(99);
    Tensor z = Tensor::zeros({500, r.latent_dim});
    for (double& v : z.data) v = rng.normal();
    Tensor samples = predict(gen, z);
    for (double v : samples.data) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
    double gen_radius = 0.0, data_radius = 0.0;
    for (int i = 0; i < samples.rows(); ++i)
        gen_radius += std::hypot(samples.at(i, 0), samples.at(i, 1));
    gen_radius /= samples.rows();
    for (int i = 0; i < data.train.size(); ++i)
        data_radius += std::hypot(data.train.features.at(i, 0), data.train.features.at(i, 1));
    data_radius /= data.train.size();
    CHECK(std::fabs(gen_radius - data_radius) / data_radius < 0.3);
}

TEST_CASE("save/load round-trips every parameter bit-exactly") {
    SequentialModel m = init_model(mlp_spec({8, 64, 3}, LayerKind::softmax),
                                   TaskKind::classifier, 77, "blobs-target");
    const std::string path = temp_file("roundtrip");
    save_model(m, path);
    SequentialModel r = load_model(path);
    CHECK(r.task == m.task);
    CHECK(r.d_in == m.d_in);
    CHECK(r.d_out == m.d_out);
    CHECK(r.init_seed == 77);
    CHECK(r.recipe_tag == "blobs-target");
    REQUIRE(r.layers.size() == m.layers.size());
    REQUIRE(r.dense.size() == m.dense.size());
    for (size_t i = 0; i < m.dense.size(); ++i) {
        CHECK(bitwise_equal(r.dense[i].w, m.dense[i].w));
        CHECK(bitwise_equal(r.dense[i].b, m.dense[i].b));
    }
    std::remove(path.c_str());
}

TEST_CASE("load_model rejects truncated and malformed files") {
    SequentialModel m = init_model(mlp_spec({4, 8, 2}, LayerKind::softmax),
                                   TaskKind::classifier, 1);
    const std::string path = temp_file("truncated");
    save_model(m, path);
    std::ifstream is(path);
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    is.close();
    std::ofstream os(path);
    os << content.substr(0, content.size() / 2);
    os.close();
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("truncated"), Error);

    std::ofstream bad(path);
    bad << "modelfile 999\n";
    bad.close();
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("version"), Error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model("/nonexistent/nope.mdl"), Error);
}
