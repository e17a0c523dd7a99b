#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "phaseparse/features.hpp"
#include "phaseparse/rng.hpp"

namespace phaseparse {

/// Fully connected net: rectifier hidden layers, softmax output. Parameters
/// are stored at scalar type T (float in production, double for gradient
/// verification); reductions always accumulate in double.
template <typename T>
struct MlpNet {
    std::vector<int> dims;                // e.g. {26, 16, 2}
    std::vector<std::vector<T>> weights;  // weights[l]: dims[l+1] x dims[l], row-major
    std::vector<std::vector<T>> biases;   // biases[l]: dims[l+1]

    int layer_count() const { return static_cast<int>(dims.size()) - 1; }
    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }

    size_t parameter_count() const {
        size_t n = 0;
        for (int l = 0; l < layer_count(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }
};

using MlpModel = MlpNet<float>;

/// Deterministic seeded init: weights uniform in +-sqrt(6/(fan_in+fan_out)),
/// biases zero.
template <typename T>
MlpNet<T> init_mlp(const std::vector<int>& dims, uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("mlp: dims must be positive");
    MlpNet<T> net;
    net.dims = dims;
    Rng rng(seed);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<T> w(static_cast<size_t>(fan_in) * fan_out);
        for (auto& x : w) x = static_cast<T>(rng.uniform(-bound, bound));
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, T(0));
    }
    return net;
}

/// All layer activations: act[0] = input, act[l] = post-rectifier output of
/// layer l for l < L, act[L] = raw logits of the last layer.
template <typename T>
std::vector<std::vector<double>> mlp_forward(const MlpNet<T>& net, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != net.input_dim())
        throw std::invalid_argument("mlp: input dimension mismatch");
    std::vector<std::vector<double>> act;
    act.reserve(net.dims.size());
    act.push_back(x);
    for (int l = 0; l < net.layer_count(); ++l) {
        const int in = net.dims[l], out = net.dims[l + 1];
        std::vector<double> z(out);
        for (int o = 0; o < out; ++o) {
            double acc = static_cast<double>(net.biases[l][o]);
            const T* wrow = net.weights[l].data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += static_cast<double>(wrow[i]) * act[l][i];
            z[o] = acc;
        }
        if (l + 1 < net.layer_count()) {
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        }
        act.push_back(std::move(z));
    }
    return act;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Class probabilities; components sum to 1.
template <typename T>
std::vector<double> predict_proba(const MlpNet<T>& net, const std::vector<double>& x) {
    return softmax(mlp_forward(net, x).back());
}

/// Penultimate-layer output (post-rectifier); the input itself when the net
/// has a single layer.
template <typename T>
std::vector<double> embed(const MlpNet<T>& net, const std::vector<double>& x) {
    auto act = mlp_forward(net, x);
    return act[act.size() - 2];
}

template <typename T>
struct MlpGradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpGradients zeros_like(const MlpNet<T>& net) {
        MlpGradients g;
        for (int l = 0; l < net.layer_count(); ++l) {
            g.weights.emplace_back(net.weights[l].size(), 0.0);
            g.biases.emplace_back(net.biases[l].size(), 0.0);
        }
        return g;
    }
};

/// Mean cross-entropy of the batch.
template <typename T>
double mlp_loss(const MlpNet<T>& net, const std::vector<std::vector<double>>& xs,
                const std::vector<int>& ys) {
    double total = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const auto act = mlp_forward(net, xs[i]);
        const auto& z = act.back();
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        total += m + std::log(lse) - z[ys[i]];
    }
    return total / static_cast<double>(xs.size());
}

/// Exact backpropagation of the mean cross-entropy. Returns the loss.
template <typename T>
double mlp_backward(const MlpNet<T>& net, const std::vector<std::vector<double>>& xs,
                    const std::vector<int>& ys, MlpGradients<T>& grads) {
    const int L = net.layer_count();
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    double total = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const auto act = mlp_forward(net, xs[i]);
        const auto probs = softmax(act.back());
        total += -std::log(probs[ys[i]]);

        // delta at the logits
        std::vector<double> delta(probs);
        delta[ys[i]] -= 1.0;
        for (double& v : delta) v *= inv_n;

        for (int l = L - 1; l >= 0; --l) {
            const int in = net.dims[l], out = net.dims[l + 1];
            const auto& a = act[l];
            for (int o = 0; o < out; ++o) {
                grads.biases[l][o] += delta[o];
                double* grow = grads.weights[l].data() + static_cast<size_t>(o) * in;
                for (int k = 0; k < in; ++k) grow[k] += delta[o] * a[k];
            }
            if (l == 0) break;
            std::vector<double> prev(in, 0.0);
            for (int o = 0; o < out; ++o) {
                const T* wrow = net.weights[l].data() + static_cast<size_t>(o) * in;
                for (int k = 0; k < in; ++k) prev[k] += static_cast<double>(wrow[k]) * delta[o];
            }
            // rectifier gate: act[l] is post-activation, zero iff gated
            for (int k = 0; k < in; ++k)
                if (act[l][k] <= 0.0) prev[k] = 0.0;
            delta = std::move(prev);
        }
    }
    return total * inv_n;
}

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 64;
    int epochs = 30;
    uint64_t seed = 0;
    int samples_per_class = 4000;  // capped at the smaller class count
};

struct TrainStats {
    double final_loss = 0.0;
    double label_accuracy = 0.0;  // against the (possibly noisy) training labels
};

/// Indices of an exactly class-balanced subset: k drawn uniformly without
/// replacement from each class, k = min(requested, every class count).
std::vector<size_t> balanced_sample(const std::vector<int>& labels, int num_classes,
                                    int per_class, Rng& rng);

/// Pooled training with balanced sampling and momentum SGD. Labels are class
/// indices in [0, output_dim). Throws std::invalid_argument when a class is
/// absent (the balance requirement is unsatisfiable).
TrainStats train_mlp(MlpModel& net, const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, const TrainConfig& cfg);

// Model directory: manifest.txt (dims + activation names) and one tensor per
// parameter (w0, b0, ...), plus optional input normalizer statistics.
void save_mlp(const MlpModel& net, const Normalizer* norm, const std::filesystem::path& dir);
MlpModel load_mlp(const std::filesystem::path& dir, Normalizer* norm_out = nullptr);

}  // namespace phaseparse
