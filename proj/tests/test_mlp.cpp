#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "phaseparse/mlp.hpp"
#include "phaseparse/rng.hpp"
#include "testutil.hpp"

using namespace phaseparse;

namespace {

struct BlobSet {
    std::vector<std::vector<double>> xs;
    std::vector<int> true_labels;
    std::vector<int> train_labels;  // possibly corrupted
};

// two 2-D Gaussian blobs; separation measured in units of their stddev
BlobSet make_blobs(int per_class, double separation_sigmas, double flip_fraction, uint64_t seed) {
    Rng rng(seed);
    BlobSet set;
    const double offset = separation_sigmas / 2.0;
    for (int c = 0; c < 2; ++c) {
        const double cx = c == 0 ? -offset : offset;
        for (int i = 0; i < per_class; ++i) {
            set.xs.push_back({cx + rng.normal(), rng.normal()});
            set.true_labels.push_back(c);
        }
    }
    set.train_labels = set.true_labels;
    for (auto& y : set.train_labels)
        if (rng.bernoulli(flip_fraction)) y = 1 - y;
    return set;
}

double accuracy(const MlpModel& net, const std::vector<std::vector<double>>& xs,
                const std::vector<int>& ys) {
    size_t correct = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const auto p = predict_proba(net, xs[i]);
        if ((p[1] > p[0]) == (ys[i] == 1)) ++correct;
    }
    return static_cast<double>(correct) / xs.size();
}

void gradcheck_case(const std::vector<int>& dims, uint64_t seed, double& err32, double& err64) {
    Rng rng(seed);
    const auto net32 = init_mlp<float>(dims, seed);
    const auto net64 = testutil::mlp_cast<float, double>(net32);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> x(dims.front());
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        xs.push_back(std::move(x));
        ys.push_back(static_cast<int>(rng.uniform_int(dims.back())));
    }
    const auto fd = testutil::mlp_fd_flat(net64, xs, ys);
    err32 = testutil::gradient_rel_err(testutil::mlp_backprop_flat(net32, xs, ys), fd);
    err64 = testutil::gradient_rel_err(testutil::mlp_backprop_flat(net64, xs, ys), fd);
}

}  // namespace

TEST_CASE("init_mlp: deterministic, counted, seed-sensitive") {
    const auto a = init_mlp<float>({26, 16, 2}, 5);
    const auto b = init_mlp<float>({26, 16, 2}, 5);
    CHECK(a.weights == b.weights);
    CHECK(a.biases == b.biases);
    CHECK(a.parameter_count() == 466);  // 26*16+16 + 16*2+2

    const auto c = init_mlp<float>({26, 16, 2}, 6);
    CHECK(a.weights != c.weights);

    CHECK_THROWS_AS(init_mlp<float>({26}, 0), std::invalid_argument);
}

TEST_CASE("predict_proba: softmax outputs sum to one; zero weights are uniform") {
    MlpModel zero = init_mlp<float>({4, 3, 2}, 0);
    for (auto& w : zero.weights)
        for (auto& v : w) v = 0.0f;
    const auto p = predict_proba(zero, {1.0, -2.0, 0.5, 3.0});
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-9));

    Rng rng(2);
    const auto net = init_mlp<float>({6, 8, 2}, 3);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(6);
        for (auto& v : x) v = rng.normal(0.0, 3.0);
        const auto q = predict_proba(net, x);
        CHECK(q[0] + q[1] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(q[0] >= 0.0);
        CHECK(q[1] >= 0.0);
    }
}

TEST_CASE("embed: penultimate activations, nonnegative, consistent with predict") {
    const auto net = init_mlp<float>({5, 16, 2}, 11);
    CHECK(embed(net, std::vector<double>(5, 0.0)).size() == 16);
    // zero input with zero biases stays zero
    for (double v : embed(net, std::vector<double>(5, 0.0))) CHECK(v == 0.0);

    Rng rng(12);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> x(5);
        for (auto& v : x) v = rng.normal(0.0, 2.0);
        const auto h = embed(net, x);
        for (double v : h) CHECK(v >= 0.0);
        // applying the output layer to the embedding reproduces predict_proba
        std::vector<double> logits(2, 0.0);
        for (int o = 0; o < 2; ++o) {
            double acc = net.biases[1][o];
            for (int k = 0; k < 16; ++k) acc += net.weights[1][o * 16 + k] * h[k];
            logits[o] = acc;
        }
        const auto via_embed = softmax(logits);
        const auto direct = predict_proba(net, x);
        CHECK(via_embed[0] == doctest::Approx(direct[0]).epsilon(1e-6));
        CHECK(via_embed[1] == doctest::Approx(direct[1]).epsilon(1e-6));
    }
}

TEST_CASE("gradient check: backprop vs central differences") {
    Rng rng(77);
    double worst32 = 0.0, worst64 = 0.0;
    for (int rep = 0; rep < 6; ++rep) {
        const int in = 2 + static_cast<int>(rng.uniform_int(6));
        const int hidden = 2 + static_cast<int>(rng.uniform_int(10));
        const int out = 2 + static_cast<int>(rng.uniform_int(2));
        double e32 = 0.0, e64 = 0.0;
        gradcheck_case({in, hidden, out}, 1000 + rep, e32, e64);
        worst32 = std::max(worst32, e32);
        worst64 = std::max(worst64, e64);
    }
    CHECK(worst32 <= 1e-3);
    CHECK(worst64 <= 1e-6);
}

TEST_CASE("balanced_sample: exact per-class counts, absent class rejected") {
    Rng rng(1);
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(0);
    for (int i = 0; i < 40; ++i) labels.push_back(1);
    const auto idx = balanced_sample(labels, 2, 30, rng);
    REQUIRE(idx.size() == 60);
    int c0 = 0, c1 = 0;
    for (size_t i : idx) (labels[i] == 0 ? c0 : c1)++;
    CHECK(c0 == 30);
    CHECK(c1 == 30);

    // requested count larger than the smaller class: capped at the minimum
    const auto capped = balanced_sample(labels, 2, 4000, rng);
    CHECK(capped.size() == 80);

    const std::vector<int> single(50, 0);
    CHECK_THROWS_AS(balanced_sample(single, 2, 10, rng), std::invalid_argument);
}

TEST_CASE("train: separable blobs reach 0.98 against the true labels") {
    BlobSet set = make_blobs(1000, 4.0, 0.0, 42);
    MlpModel net = init_mlp<float>({2, 16, 2}, 7);
    TrainConfig cfg;
    cfg.samples_per_class = 1000;
    cfg.seed = 3;
    const TrainStats stats = train_mlp(net, set.xs, set.train_labels, cfg);
    CHECK(accuracy(net, set.xs, set.true_labels) >= 0.98);
    CHECK(stats.label_accuracy >= 0.95);
}

TEST_CASE("train: 20% flipped labels still recover the clean concept") {
    BlobSet set = make_blobs(1000, 4.0, 0.2, 42);
    MlpModel net = init_mlp<float>({2, 16, 2}, 7);
    TrainConfig cfg;
    cfg.samples_per_class = 1000;
    cfg.seed = 3;
    train_mlp(net, set.xs, set.train_labels, cfg);
    CHECK(accuracy(net, set.xs, set.true_labels) >= 0.95);
}

TEST_CASE("train: identical class distributions hover at chance") {
    BlobSet set = make_blobs(1000, 0.0, 0.0, 9);
    MlpModel net = init_mlp<float>({2, 16, 2}, 7);
    TrainConfig cfg;
    cfg.samples_per_class = 1000;
    cfg.seed = 3;
    cfg.epochs = 10;
    train_mlp(net, set.xs, set.train_labels, cfg);
    const double acc = accuracy(net, set.xs, set.true_labels);
    CHECK(acc >= 0.45);
    CHECK(acc <= 0.55);
}

TEST_CASE("train: deterministic for a fixed seed") {
    BlobSet set = make_blobs(200, 4.0, 0.1, 5);
    TrainConfig cfg;
    cfg.samples_per_class = 150;
    cfg.epochs = 5;
    cfg.seed = 8;
    MlpModel a = init_mlp<float>({2, 8, 2}, 1);
    MlpModel b = init_mlp<float>({2, 8, 2}, 1);
    train_mlp(a, set.xs, set.train_labels, cfg);
    train_mlp(b, set.xs, set.train_labels, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.biases == b.biases);
}

TEST_CASE("full-batch gradient descent on the convex single-layer case is monotone") {
    BlobSet set = make_blobs(100, 2.0, 0.0, 13);
    MlpNet<double> net = testutil::mlp_cast<float, double>(init_mlp<float>({2, 2}, 3));
    double prev = mlp_loss(net, set.xs, set.train_labels);
    for (int epoch = 0; epoch < 40; ++epoch) {
        auto grads = MlpGradients<double>::zeros_like(net);
        mlp_backward(net, set.xs, set.train_labels, grads);
        for (int l = 0; l < net.layer_count(); ++l) {
            for (size_t i = 0; i < net.weights[l].size(); ++i)
                net.weights[l][i] -= 0.1 * grads.weights[l][i];
            for (size_t i = 0; i < net.biases[l].size(); ++i)
                net.biases[l][i] -= 0.1 * grads.biases[l][i];
        }
        const double loss = mlp_loss(net, set.xs, set.train_labels);
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
}

TEST_CASE("trained blob model is confident at a class centroid") {
    BlobSet set = make_blobs(1000, 4.0, 0.0, 21);
    MlpModel net = init_mlp<float>({2, 16, 2}, 2);
    TrainConfig cfg;
    cfg.samples_per_class = 1000;
    cfg.seed = 4;
    train_mlp(net, set.xs, set.train_labels, cfg);
    const auto p = predict_proba(net, {2.0, 0.0});  // centroid of class 1
    CHECK(p[1] >= 0.9);
}

TEST_CASE("save/load roundtrip with normalizer") {
    const auto dir = testutil::temp_dir("mlp_io");
    MlpModel net = init_mlp<float>({26, 16, 2}, 3);
    Normalizer norm;
    norm.mean.assign(26, 1.5);
    norm.stddev.assign(26, 2.0);
    save_mlp(net, &norm, dir);
    Normalizer back_norm;
    const MlpModel back = load_mlp(dir, &back_norm);
    CHECK(back.dims == net.dims);
    CHECK(back.weights == net.weights);
    CHECK(back.biases == net.biases);
    REQUIRE(back_norm.dim() == 26);
    CHECK(back_norm.mean[0] == doctest::Approx(1.5));
}
