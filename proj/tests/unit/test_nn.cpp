#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "vmi/error.hpp"
#include "vmi/nn/layers.hpp"
#include "vmi/nn/model_spec.hpp"
#include "vmi/nn/network.hpp"
#include "vmi/nn/train.hpp"

using namespace vmi;
using namespace vmi::nn;

namespace {

const std::vector<std::size_t> kCounts = {2, 4, 8, 16, 20, 32, 64};

// Small stack for gradient checks: n=2 channels, width 40, kernels 5/3,
// pools of 2 and four maps per block.
ArchitectureOptions tiny_arch(double dropout = 0.0)
{
    ArchitectureOptions a;
    a.window = 40;
    a.temporal_kernel = 5;
    a.temporal_maps = 4;
    a.spatial_maps = 4;
    a.block3_maps = 4;
    a.block4_maps = 4;
    a.conv_kernel = 3;
    a.pool = 2;
    a.dropout = dropout;
    return a;
}

Tensor4 random_batch(std::size_t b, std::size_t h, std::size_t w, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Tensor4 x(b, 1, h, w);
    for (double& v : x.values) {
        v = n(rng);
    }
    return x;
}

std::vector<Buffer> snapshot(Network& net)
{
    std::vector<Buffer> out;
    for (auto* p : net.parameters()) {
        out.push_back(p->value);
    }
    return out;
}

std::vector<Buffer> gradients(Network& net)
{
    std::vector<Buffer> out;
    for (auto* p : net.parameters()) {
        out.push_back(p->grad);
    }
    return out;
}

// Class c carries a 10 Hz tone on channel c.
core::EpochSet tone_windows(std::size_t per_class, std::size_t channels, std::size_t samples, double noise,
                            std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    const auto labels = testutil::balanced_labels(per_class);
    std::vector<double> phase(labels.size());
    for (double& p : phase) {
        p = ph(rng);
    }
    return testutil::make_epochs(labels.size(), channels, samples, 250, labels,
                                 [&](std::size_t t, std::size_t c, std::size_t s) {
                                     const double tone =
                                         static_cast<int>(c) == labels[t]
                                             ? std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(s) / 250.0 +
                                                        phase[t])
                                             : 0.0;
                                     return tone + noise * n(rng);
                                 });
}

}  // namespace

TEST_CASE("architecture shape trace")
{
    for (std::size_t n : kCounts) {
        CAPTURE(n);
        const auto spec = build_model(n);
        const std::vector<Shape> expected{{25, n, 376}, {25, 1, 376}, {25, 1, 94}, {50, 1, 80}, {50, 1, 20},
                                          {100, 1, 6},  {100, 1, 1},  {100, 1, 1}, {4, 1, 1}};
        CHECK(spec.table_trace() == expected);
        CHECK(spec.input_shape() == Shape{1, n, 500});
        CHECK(spec.shape_trace().back() == Shape{4, 1, 1});

        std::size_t convs = 0, pools = 0;
        for (const auto& l : spec.layers) {
            convs += l.kind == LayerKind::Conv ? 1 : 0;
            pools += l.kind == LayerKind::AvgPool ? 1 : 0;
        }
        CHECK(convs == 4);
        CHECK(pools == 3);
    }
    const auto spec16 = build_model(16);
    CHECK(spec16.layers[0].kernel == Extent{1, 125});
    const auto conv2 = std::find_if(spec16.layers.begin() + 1, spec16.layers.end(),
                                    [](const LayerSpec& l) { return l.kind == LayerKind::Conv; });
    CHECK(conv2->kernel == Extent{16, 1});
    CHECK(build_model(2).layers[static_cast<std::size_t>(conv2 - spec16.layers.begin())].kernel == Extent{2, 1});
}

TEST_CASE("layer order around the convolutions")
{
    const auto spec = build_model(8);
    std::vector<LayerKind> kinds;
    for (const auto& l : spec.layers) {
        kinds.push_back(l.kind);
    }
    int conv_seen = 0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (kinds[i] != LayerKind::Conv) {
            continue;
        }
        ++conv_seen;
        REQUIRE(i + 2 < kinds.size());
        CHECK(kinds[i + 1] == LayerKind::BatchNorm);
        CHECK(kinds[i + 2] == LayerKind::Activation);
        if (conv_seen >= 2) {
            CHECK(kinds[i - 1] == LayerKind::Dropout);
            CHECK(spec.layers[i - 1].rate == 0.5);
        }
    }
    CHECK(conv_seen == 4);
    CHECK(kinds.back() == LayerKind::Softmax);
}

TEST_CASE("output extent matches index enumeration")
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> d(1, 60);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t in = d(rng);
        const std::size_t k = d(rng);
        const std::size_t s = 1 + d(rng) % 8;
        if (k > in) {
            CHECK_THROWS_AS(output_extent(in, k, s), ShapeError);
            continue;
        }
        std::size_t count = 0;
        for (std::size_t start = 0; start + k <= in; start += s) {
            ++count;
        }
        CHECK(output_extent(in, k, s) == count);
    }
    CHECK_THROWS_AS(output_extent(10, 3, 0), ShapeError);
}

TEST_CASE("model spec json round trip")
{
    const auto spec = build_model(20);
    CHECK(ModelSpec::from_json(spec.to_json()) == spec);
    for (auto k : {LayerKind::Conv, LayerKind::AvgPool, LayerKind::BatchNorm, LayerKind::Dropout, LayerKind::Activation,
                   LayerKind::Flatten, LayerKind::Softmax}) {
        CHECK(layer_kind_from_string(to_string(k)) == k);
    }
}

TEST_CASE("backprop agrees with central differences")
{
    // At 1e-3 the stencil's own error near ELU and batch-norm curvature
    // reaches ~1e-3 relative; 1e-5 keeps it far below the tolerance.
    const double eps = 1e-5;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        CAPTURE(seed);
        Network net(build_model(2, tiny_arch(0.5)), seed);
        REQUIRE(net.parameter_count() >= 200);
        const auto x = random_batch(6, 2, 40, seed + 100);
        const std::vector<int> labels{0, 1, 2, 3, 1, 2};

        auto loss_at = [&]() {
            net.reseed_dropout(seed);
            net.forward(x, Mode::Train);
            return net.backward(labels);
        };
        loss_at();
        const auto grads = gradients(net);
        auto params = net.parameters();

        double worst = 0.0;
        std::size_t probed = 0;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            for (std::size_t j = 0; j < params[pi]->value.size(); ++j) {
                const double keep = params[pi]->value[j];
                params[pi]->value[j] = keep + eps;
                const double up = loss_at();
                params[pi]->value[j] = keep - eps;
                const double down = loss_at();
                params[pi]->value[j] = keep;
                const double numeric = (up - down) / (2.0 * eps);
                const double analytic = grads[pi][j];
                const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
                worst = std::max(worst, std::abs(numeric - analytic) / scale);
                ++probed;
            }
        }
        CHECK(probed >= 200);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("batch norm standardizes each map in training mode")
{
    BatchNorm2d bn(3, "bn");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(4.0, 30.0);
    Tensor4 x(8, 3, 2, 7);
    for (double& v : x.values) {
        v = n(rng);
    }
    const auto y = bn.forward(x, Mode::Train);
    for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        std::size_t count = 0;
        for (std::size_t b = 0; b < 8; ++b) {
            for (std::size_t h = 0; h < 2; ++h) {
                for (std::size_t w = 0; w < 7; ++w) {
                    sum += y.at(b, c, h, w);
                    sq += y.at(b, c, h, w) * y.at(b, c, h, w);
                    ++count;
                }
            }
        }
        const double mean = sum / static_cast<double>(count);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(sq / static_cast<double>(count) - mean * mean - 1.0) < 1e-6);
    }
    auto* rm = bn.buffers()[0];
    for (double v : *rm) {
        CHECK(v != 0.0);
    }
}

TEST_CASE("average pooling preserves the covered mean")
{
    AvgPool2d pool({1, 4}, {1, 4});
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Tensor4 x(2, 3, 1, 23);
    for (double& v : x.values) {
        v = u(rng);
    }
    const auto y = pool.forward(x, Mode::Eval);
    REQUIRE(y.width() == 5);
    double in_sum = 0.0;
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t w = 0; w < 20; ++w) {
                in_sum += x.at(b, c, 0, w);
            }
        }
    }
    double out_sum = 0.0;
    for (double v : y.values) {
        out_sum += v;
    }
    CHECK(std::abs(in_sum / (2 * 3 * 20) - out_sum / static_cast<double>(y.size())) < 1e-9);
    CHECK(y.at(1, 2, 0, 3) == doctest::Approx((x.at(1, 2, 0, 12) + x.at(1, 2, 0, 13) + x.at(1, 2, 0, 14) +
                                               x.at(1, 2, 0, 15)) /
                                              4.0));
}

TEST_CASE("forward produces probabilities")
{
    Network net(build_model(4), 21);
    const auto x = random_batch(5, 4, 500, 22);
    const auto p = net.forward(x, Mode::Train);
    REQUIRE(p.rows() == 5);
    REQUIRE(p.cols() == 4);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-9);
    }

    SUBCASE("eval mode is repeatable")
    {
        const auto a = net.forward(x, Mode::Eval);
        const auto b = net.forward(x, Mode::Eval);
        CHECK(a == b);
    }
    SUBCASE("zero head gives uniform output")
    {
        auto params = net.parameters();
        for (auto it = params.end() - 2; it != params.end(); ++it) {
            std::fill((*it)->value.begin(), (*it)->value.end(), 0.0);
        }
        const auto u = net.forward(x, Mode::Eval);
        CHECK((u.array() - 0.25).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("confident correct head drives the loss to zero")
    {
        auto params = net.parameters();
        std::fill(params[params.size() - 2]->value.begin(), params[params.size() - 2]->value.end(), 0.0);
        auto& bias = params.back()->value;
        std::fill(bias.begin(), bias.end(), 0.0);
        bias[2] = 60.0;
        net.forward(x, Mode::Train);
        CHECK(net.backward(std::vector<int>(5, 2)) < 1e-20);
    }
    SUBCASE("input checks")
    {
        CHECK_THROWS_AS(net.forward(random_batch(2, 3, 500, 1), Mode::Eval), ShapeError);
        CHECK_THROWS_AS(net.forward(random_batch(2, 4, 499, 1), Mode::Eval), ShapeError);
        net.forward(x, Mode::Train);
        CHECK_THROWS_AS(net.backward({0, 1, 2, 4, 0}), RangeError);
        CHECK_THROWS_AS(net.backward({0, 1, -1, 3, 0}), RangeError);
    }
}

TEST_CASE("duplicating the batch leaves mean gradients unchanged")
{
    Network net(build_model(2, tiny_arch(0.0)), 31);
    const auto x = random_batch(4, 2, 40, 32);
    const std::vector<int> labels{3, 0, 2, 1};
    net.forward(x, Mode::Train);
    const double l1 = net.backward(labels);
    const auto g1 = gradients(net);

    Tensor4 xx(8, 1, 2, 40);
    std::copy(x.values.begin(), x.values.end(), xx.values.begin());
    std::copy(x.values.begin(), x.values.end(), xx.values.begin() + static_cast<std::ptrdiff_t>(x.size()));
    std::vector<int> ll = labels;
    ll.insert(ll.end(), labels.begin(), labels.end());
    net.forward(xx, Mode::Train);
    const double l2 = net.backward(ll);
    const auto g2 = gradients(net);

    CHECK(std::abs(l1 - l2) < 1e-9);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        for (std::size_t j = 0; j < g1[i].size(); ++j) {
            CHECK(std::abs(g1[i][j] - g2[i][j]) < 1e-9);
        }
    }
}

TEST_CASE("sliding windows")
{
    const auto labels = testutil::balanced_labels(50);
    const auto e = testutil::make_epochs(200, 2, 1000, 250, labels, [](std::size_t t, std::size_t c, std::size_t s) {
        return static_cast<double>(t * 100000 + c * 10000 + s);
    });
    const auto w = slide_windows(e, 2.0, 0.5);
    REQUIRE(w.trials() == 600);
    CHECK(w.samples() == 500);
    for (std::size_t k : {0u, 7u, 199u}) {
        for (std::size_t j = 0; j < 3; ++j) {
            const std::size_t row = 3 * k + j;
            CHECK(w.source_trials()[row] == k);
            CHECK(w.label(row) == e.label(k));
            const auto src = e.series(k, 1);
            const auto dst = w.series(row, 1);
            CHECK(std::equal(dst.begin(), dst.end(), src.begin() + static_cast<std::ptrdiff_t>(250 * j)));
        }
    }
    CHECK(w.t0_ms() == e.t0_ms());
    CHECK_THROWS_AS(slide_windows(e, 5.0, 0.5), RangeError);
}

TEST_CASE("trial decision from window probabilities")
{
    Probabilities p(3, 4);
    p << 0.9, 0.1, 0, 0, 0.9, 0.1, 0, 0, 0.9, 0.1, 0, 0;
    CHECK(predict_trial(p) == 0);

    Probabilities v(3, 4);
    v << 0.6, 0.4, 0, 0, 0.6, 0.4, 0, 0, 0.1, 0.9, 0, 0;
    CHECK(predict_trial(v) == 1);

    Probabilities one(1, 4);
    one << 0.1, 0.2, 0.6, 0.1;
    CHECK(predict_trial(one) == 2);

    Probabilities tie(1, 4);
    tie << 0.0, 0.5, 0.0, 0.5;
    CHECK(predict_trial(tie) == 1);

    CHECK_THROWS_AS(predict_trial(Probabilities(0, 4)), EmptyInputError);
}

TEST_CASE("predictions grouped by source trial")
{
    const auto e = testutil::make_epochs(2, 1, 1000, 250, {2, 3}, [](auto, auto, auto) { return 0.0; });
    const auto w = slide_windows(e);
    Probabilities p(6, 4);
    p << 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0,  //
        0, 0, 0, 1, 0.5, 0, 0, 0.5, 0, 0, 0, 1;
    const auto tp = predict_trials(w, p);
    CHECK(tp.source_trials == std::vector<std::size_t>{0, 1});
    CHECK(tp.labels == std::vector<int>{2, 3});
    CHECK(tp.predicted == std::vector<int>{2, 3});
}

TEST_CASE("training")
{
    ArchitectureOptions arch = tiny_arch(0.0);
    arch.window = 100;
    arch.temporal_kernel = 25;
    arch.conv_kernel = 5;
    arch.temporal_maps = 8;
    arch.spatial_maps = 8;
    const auto data = tone_windows(10, 4, 100, 0.3, 41);

    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    cfg.learning_rate = 3e-3;
    cfg.seed = 42;
    cfg.patience = 0;

    SUBCASE("separable data is fitted")
    {
        Network net(build_model(4, arch), 43);
        const auto result = train(net, data, cfg);
        CHECK(result.loss_curve.size() == 20);
        CHECK(result.loss_curve.back() < result.loss_curve.front());
        const auto probs = predict_proba(net, data);
        std::size_t correct = 0;
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            Eigen::Index j = 0;
            probs.row(i).maxCoeff(&j);
            correct += static_cast<int>(j) == data.label(static_cast<std::size_t>(i)) ? 1 : 0;
        }
        CHECK(static_cast<double>(correct) / static_cast<double>(probs.rows()) >= 0.95);
    }
    SUBCASE("equal seeds give equal parameters")
    {
        cfg.epochs = 3;
        arch.dropout = 0.5;
        Network a(build_model(4, arch), 44);
        Network b(build_model(4, arch), 44);
        const auto ra = train(a, data, cfg);
        const auto rb = train(b, data, cfg);
        CHECK(ra.loss_curve == rb.loss_curve);
        CHECK(snapshot(a) == snapshot(b));
    }
    SUBCASE("zero learning rate changes nothing")
    {
        cfg.epochs = 3;
        cfg.learning_rate = 0.0;
        Network net(build_model(4, arch), 45);
        const auto before = snapshot(net);
        const auto r = train(net, data, cfg);
        CHECK(snapshot(net) == before);
        for (double l : r.loss_curve) {
            CHECK(std::abs(l - r.loss_curve.front()) < 0.05);
        }
    }
    SUBCASE("shuffled labels start near chance loss")
    {
        auto labels = data.labels();
        std::mt19937_64 rng(46);
        std::shuffle(labels.begin(), labels.end(), rng);
        cfg.epochs = 1;
        Network net(build_model(4, arch), 47);
        const auto r = train(net, data.with_labels(labels), cfg);
        CHECK(std::abs(r.loss_curve.front() - std::log(4.0)) < 0.2);
    }
    SUBCASE("divergence is reported")
    {
        cfg.epochs = 5;
        cfg.optimizer = Optimizer::Sgd;
        cfg.learning_rate = 1e300;
        Network net(build_model(4, arch), 48);
        CHECK_THROWS_AS(train(net, data, cfg), DivergenceError);
    }
}

TEST_CASE("train config parsing")
{
    const auto c = TrainConfig::from_json({{"learning_rate", 0.01}, {"optimizer", "sgd"}, {"epochs", 7}});
    CHECK(c.learning_rate == 0.01);
    CHECK(c.optimizer == Optimizer::Sgd);
    CHECK(c.epochs == 7);
    CHECK(c.batch_size == 16);
    CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS_AS(TrainConfig::from_json({{"learning_rate", -1.0}}), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"optimizer", "rmsprop"}}), ConfigError);
}

TEST_CASE("checkpoint round trip")
{
    testutil::TempDir dir("nn");
    Network net(build_model(2, tiny_arch(0.5)), 51);
    const auto x = random_batch(3, 2, 40, 52);
    // Move the running statistics away from their initial values.
    net.forward(x, Mode::Train);
    net.save(dir / "model.eegb", {{"note", "unit"}});
    auto back = Network::load(dir / "model.eegb");
    CHECK(back.spec() == net.spec());
    CHECK(back.parameter_count() == net.parameter_count());
    const auto a = net.forward(x, Mode::Eval);
    const auto b = back.forward(x, Mode::Eval);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS_AS(Network::load(dir / "missing.eegb"), DataError);
}
