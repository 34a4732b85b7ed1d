#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ganser/checkpoint.hpp"
#include "ganser/gradcheck.hpp"
#include "ganser/losses.hpp"
#include "ganser/mlp.hpp"
#include "ganser/optimizer.hpp"

using namespace ganser;

namespace {

// Independent straight-line re-computation of the affine+activation chain,
// used as the forward oracle.
Matrix naive_forward(const MlpNetwork& net, const Matrix& input) {
    Matrix cur = input;
    for (int l = 0; l < net.layer_count(); ++l) {
        Matrix next(cur.rows, net.layer_dims[l + 1]);
        for (int i = 0; i < cur.rows; ++i) {
            for (int o = 0; o < next.cols; ++o) {
                double z = 0.0;
                for (int k = 0; k < cur.cols; ++k) z += cur(i, k) * net.weights[l](o, k);
                z += net.biases[l][o];
                if (l + 1 < net.layer_count()) {
                    if (net.hidden_act == HiddenAct::relu) z = z > 0.0 ? z : 0.0;
                    else z = std::tanh(z);
                } else if (net.output_act == OutputAct::sigmoid) {
                    z = 1.0 / (1.0 + std::exp(-z));
                    z = std::min(std::max(z, kProbClamp), 1.0 - kProbClamp);
                }
                next(i, o) = z;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

MlpNetwork identity_single_layer() {
    MlpNetwork net;
    net.layer_dims = {2, 2};
    Matrix w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    net.weights.push_back(w);
    net.biases.push_back({0.0, 0.0});
    return net;
}

}  // namespace

TEST_CASE("forward: identity single layer reproduces its input") {
    MlpNetwork net = identity_single_layer();
    Matrix in(1, 2);
    in(0, 0) = 1.0;
    in(0, 1) = 2.0;
    const Matrix out = forward(net, in).outputs();
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 2.0);
}

TEST_CASE("forward: zero network with sigmoid output yields exactly 0.5") {
    Rng rng(3);
    MlpNetwork net = make_mlp({3, 4, 1}, HiddenAct::relu, OutputAct::sigmoid, rng);
    for (Matrix& w : net.weights)
        for (double& v : w.data) v = 0.0;
    Matrix in(5, 3);
    for (int i = 0; i < 15; ++i) in.data[i] = i - 7.0;
    const Matrix out = forward(net, in).outputs();
    for (double v : out.data) CHECK(v == 0.5);
}

TEST_CASE("forward: random 3-layer net matches a straight-line re-computation") {
    Rng rng(11);
    MlpNetwork net = make_mlp({5, 8, 6, 3}, HiddenAct::tanh, OutputAct::sigmoid, rng);
    Matrix in(4, 5);
    for (double& v : in.data) v = rng.normal();
    const Matrix got = forward(net, in).outputs();
    const Matrix expected = naive_forward(net, in);
    REQUIRE(got.same_shape(expected));
    for (std::size_t i = 0; i < got.data.size(); ++i) CHECK(got.data[i] == Approx(expected.data[i]).margin(1e-12));
}

TEST_CASE("forward: width mismatch is rejected with a shape diagnostic") {
    MlpNetwork net = identity_single_layer();
    Matrix in(1, 3);
    CHECK_THROWS_WITH(forward(net, in), Catch::Contains("width 3") && Catch::Contains("input dim 2"));
}

TEST_CASE("forward: sigmoid outputs stay inside the clamp band") {
    Rng rng(5);
    MlpNetwork net = make_mlp({1, 1}, HiddenAct::relu, OutputAct::sigmoid, rng);
    net.weights[0](0, 0) = 100.0;
    net.biases[0][0] = 0.0;
    Matrix in(2, 1);
    in(0, 0) = 10.0;
    in(1, 0) = -10.0;
    const Matrix out = forward(net, in).outputs();
    CHECK(out(0, 0) == 1.0 - kProbClamp);
    CHECK(out(1, 0) == kProbClamp);
}

TEST_CASE("bce_loss: forced values") {
    Matrix p(1, 1, 0.5), y(1, 1, 1.0);
    CHECK(bce_loss(p, y).value == Approx(std::log(2.0)).epsilon(1e-12));

    Matrix p2(1, 1, 1.0 - kProbClamp);
    CHECK(bce_loss(p2, y).value == Approx(0.0).margin(1e-6));

    Matrix p3(2, 1), y3(2, 1);
    p3(0, 0) = 0.9;
    p3(1, 0) = 0.2;
    y3(0, 0) = 1.0;
    y3(1, 0) = 0.0;
    CHECK(bce_loss(p3, y3).value == Approx(0.5 * (-std::log(0.9) - std::log(0.8))).epsilon(1e-12));
}

TEST_CASE("bce_loss: rejects empty input and non-binary targets") {
    Matrix empty(0, 1);
    CHECK_THROWS_AS(bce_loss(empty, empty), std::invalid_argument);
    Matrix p(1, 1, 0.5), y(1, 1, 0.3);
    CHECK_THROWS_AS(bce_loss(p, y), std::invalid_argument);
}

TEST_CASE("generator_loss: forced values") {
    Matrix p(1, 1, 1.0 - kProbClamp);
    CHECK(generator_loss(p).value == Approx(0.0).margin(1e-6));
    Matrix p2(1, 1, 0.5);
    CHECK(generator_loss(p2).value == Approx(std::log(2.0)).epsilon(1e-12));
    Matrix p3(2, 1);
    p3(0, 0) = 0.25;
    p3(1, 0) = 0.75;
    CHECK(generator_loss(p3).value == Approx(0.5 * (-std::log(0.25) - std::log(0.75))).epsilon(1e-12));
    Matrix empty(0, 1);
    CHECK_THROWS_AS(generator_loss(empty), std::invalid_argument);
}

TEST_CASE("generator_loss decreases as the discriminator is fooled") {
    double prev = 1e9;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
        Matrix m(1, 1, p);
        const double v = generator_loss(m).value;
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("backward: zero output gradient gives all-zero gradients") {
    Rng rng(17);
    MlpNetwork net = make_mlp({3, 5, 2}, HiddenAct::relu, OutputAct::linear, rng);
    Matrix in(3, 3);
    for (double& v : in.data) v = rng.normal();
    ActivationTrace trace = forward(net, in);
    Gradients g = backward(net, trace, Matrix(3, 2, 0.0));
    for (const Matrix& w : g.weights)
        for (double v : w.data) CHECK(v == 0.0);
    for (const auto& b : g.biases)
        for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("backward: single linear layer matches the closed-form squared-error gradient") {
    Rng rng(23);
    MlpNetwork net = make_mlp({3, 2}, HiddenAct::relu, OutputAct::linear, rng);
    Matrix x(1, 3);
    Matrix t(1, 2);
    for (double& v : x.data) v = rng.normal();
    for (double& v : t.data) v = rng.normal();

    ActivationTrace trace = forward(net, x);
    LossValue loss = squared_error_loss(trace.outputs(), t);
    Gradients g = backward(net, trace, loss.grad);

    // closed form: dW = 2 (Wx + b - t) x^T, db = 2 (Wx + b - t)
    for (int o = 0; o < 2; ++o) {
        double pred = net.biases[0][o];
        for (int k = 0; k < 3; ++k) pred += net.weights[0](o, k) * x(0, k);
        const double resid = 2.0 * (pred - t(0, o));
        CHECK(g.biases[0][o] == Approx(resid).epsilon(1e-12));
        for (int k = 0; k < 3; ++k) CHECK(g.weights[0](o, k) == Approx(resid * x(0, k)).epsilon(1e-12));
    }
}

TEST_CASE("backward: rejects traces from a different topology") {
    Rng rng(29);
    MlpNetwork net = make_mlp({3, 4, 2}, HiddenAct::relu, OutputAct::linear, rng);
    MlpNetwork other = make_mlp({3, 5, 2}, HiddenAct::relu, OutputAct::linear, rng);
    Matrix in(2, 3);
    ActivationTrace trace = forward(other, in);
    CHECK_THROWS_AS(backward(net, trace, Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("gradient_check: random nets beat 1e-4 for all loss kinds") {
    CHECK(run_gradcheck_suite(99, 12) < 1e-4);
}

TEST_CASE("gradient_check: zero-parameter BCE net shows the prediction-minus-target pattern") {
    MlpNetwork net;
    net.layer_dims = {3, 1};
    net.weights.emplace_back(1, 3, 0.0);
    net.biases.emplace_back(1, 0.0);
    net.output_act = OutputAct::sigmoid;

    Batch batch;
    batch.inputs = Matrix(4, 3);
    Rng rng(31);
    for (double& v : batch.inputs.data) v = rng.normal();
    Matrix t(4, 1);
    t(0, 0) = 1.0;
    t(1, 0) = 0.0;
    t(2, 0) = 0.0;
    t(3, 0) = 0.0;
    batch.targets = t;

    ActivationTrace trace = forward(net, batch);
    LossValue loss = bce_loss(trace.outputs(), *batch.targets);
    Gradients g = backward(net, trace, loss.grad);

    // with sigmoid + BCE, d loss / d bias = mean(p - y); p is 0.5 everywhere
    double expect_bias = 0.0;
    std::vector<double> expect_w(3, 0.0);
    for (int i = 0; i < 4; ++i) {
        const double resid = (0.5 - t(i, 0)) / 4.0;
        expect_bias += resid;
        for (int k = 0; k < 3; ++k) expect_w[k] += resid * batch.inputs(i, k);
    }
    CHECK(g.biases[0][0] == Approx(expect_bias).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) CHECK(g.weights[0](0, k) == Approx(expect_w[k]).epsilon(1e-12));

    CHECK(gradient_check(net, batch, LossKind::bce, 1e-5) < 1e-4);
}

TEST_CASE("gradient_check: deterministic across runs and strict about eps") {
    CHECK(run_gradcheck_suite(123, 4) == run_gradcheck_suite(123, 4));
    Rng rng(3);
    MlpNetwork net = make_mlp({2, 2}, HiddenAct::relu, OutputAct::linear, rng);
    Batch batch;
    batch.inputs = Matrix(1, 2, 0.3);
    batch.targets = Matrix(1, 2, 0.0);
    CHECK_THROWS_AS(gradient_check(net, batch, LossKind::squared_error, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(gradient_check(net, batch, LossKind::squared_error, 1e-8), std::invalid_argument);
}

TEST_CASE("optimizer_step: zero gradients on a fresh state leave parameters unchanged") {
    Rng rng(37);
    MlpNetwork net = make_mlp({3, 4, 2}, HiddenAct::relu, OutputAct::linear, rng);
    const MlpNetwork before = net;
    OptimizerState state = make_optimizer(net);
    Gradients zero;
    for (int l = 0; l < net.layer_count(); ++l) {
        zero.weights.emplace_back(net.weights[l].rows, net.weights[l].cols, 0.0);
        zero.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    optimizer_step(net, zero, state);
    CHECK(state.step_count == 1);
    for (int l = 0; l < net.layer_count(); ++l) {
        CHECK(net.weights[l].data == before.weights[l].data);
        CHECK(net.biases[l] == before.biases[l]);
    }
}

TEST_CASE("optimizer_step: constant positive gradient drives the parameter down") {
    MlpNetwork net;
    net.layer_dims = {1, 1};
    net.weights.emplace_back(1, 1, 1.0);
    net.biases.emplace_back(1, 0.0);
    OptimizerState state = make_optimizer(net, {0.01});
    Gradients g;
    g.weights.emplace_back(1, 1, 1.0);
    g.biases.emplace_back(1, 0.0);
    const double start = net.weights[0](0, 0);
    for (int i = 0; i < 50; ++i) optimizer_step(net, g, state);
    CHECK(net.weights[0](0, 0) < start);
}

TEST_CASE("optimizer_step: one step matches the hand-evaluated update") {
    MlpNetwork net;
    net.layer_dims = {1, 1};
    net.weights.emplace_back(1, 1, 1.0);
    net.biases.emplace_back(1, 0.0);
    AdamConfig cfg;
    cfg.learning_rate = 0.001;
    OptimizerState state = make_optimizer(net, cfg);
    Gradients g;
    g.weights.emplace_back(1, 1, 1.0);
    g.biases.emplace_back(1, 0.0);
    optimizer_step(net, g, state);
    // m = 0.1, v = 0.001; m_hat = 1, v_hat = 1; w -= lr * 1 / (1 + eps)
    const double expected = 1.0 - 0.001 * (1.0 / (1.0 + 1e-8));
    CHECK(net.weights[0](0, 0) == Approx(expected).epsilon(1e-15));
}

TEST_CASE("optimizer_step: non-finite gradient is rejected naming the layer") {
    Rng rng(41);
    MlpNetwork net = make_mlp({2, 3, 1}, HiddenAct::relu, OutputAct::linear, rng);
    OptimizerState state = make_optimizer(net);
    Gradients g;
    for (int l = 0; l < net.layer_count(); ++l) {
        g.weights.emplace_back(net.weights[l].rows, net.weights[l].cols, 0.0);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    g.weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(optimizer_step(net, g, state), Catch::Contains("layer 1"));
}

TEST_CASE("adam config validation") {
    Rng rng(1);
    MlpNetwork net = make_mlp({1, 1}, HiddenAct::relu, OutputAct::linear, rng);
    CHECK_THROWS_AS(make_optimizer(net, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_optimizer(net, {1e-3, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_optimizer(net, {1e-3, 0.9, 0.999, 1e-3}), std::invalid_argument);
}

TEST_CASE("training determinism: identical seed and data give bit-identical parameters") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        MlpNetwork net = make_mlp({4, 8, 1}, HiddenAct::relu, OutputAct::sigmoid, rng);
        OptimizerState state = make_optimizer(net, {1e-3});
        Matrix x(8, 4);
        Matrix y(8, 1);
        for (double& v : x.data) v = rng.normal();
        for (int i = 0; i < 8; ++i) y(i, 0) = i % 2;
        for (int step = 0; step < 25; ++step) {
            ActivationTrace trace = forward(net, x);
            LossValue loss = bce_loss(trace.outputs(), y);
            optimizer_step(net, backward(net, trace, loss.grad), state);
        }
        return net;
    };
    const MlpNetwork a = run(42), b = run(42);
    for (int l = 0; l < a.layer_count(); ++l) {
        CHECK(a.weights[l].data == b.weights[l].data);
        CHECK(a.biases[l] == b.biases[l]);
    }
}

TEST_CASE("checkpoint: network round-trip is bit-exact and bad files are rejected") {
    Rng rng(53);
    MlpNetwork net = make_mlp({3, 7, 2}, HiddenAct::tanh, OutputAct::sigmoid, rng);
    const std::string path = (std::filesystem::temp_directory_path() / "ganser_net_test.ckpt").string();
    save_network(path, net);
    const MlpNetwork loaded = load_network(path);
    CHECK(loaded.layer_dims == net.layer_dims);
    CHECK(loaded.hidden_act == net.hidden_act);
    CHECK(loaded.output_act == net.output_act);
    for (int l = 0; l < net.layer_count(); ++l) {
        CHECK(loaded.weights[l].data == net.weights[l].data);
        CHECK(loaded.biases[l] == net.biases[l]);
    }

    {
        std::ofstream os(path, std::ios::binary);
        os << "NOTAGAN1junkjunkjunk";
    }
    CHECK_THROWS_WITH(load_network(path), Catch::Contains("magic"));

    {
        std::ofstream os(path, std::ios::binary);
        write_checkpoint_header(os);
    }
    CHECK_THROWS_AS(load_network(path), std::runtime_error);  // truncated

    {
        std::ofstream os(path, std::ios::binary);
        os.write(reinterpret_cast<const char*>(kCheckpointMagic.data()), kCheckpointMagic.size());
        io::write_u32(os, 999);
    }
    CHECK_THROWS_WITH(load_network(path), Catch::Contains("version"));
    std::filesystem::remove(path);
}
