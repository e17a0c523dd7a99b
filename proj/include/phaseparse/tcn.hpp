#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "phaseparse/rng.hpp"

namespace phaseparse {

struct TcnConfig {
    int stages = 2;
    int layers = 6;       // dilated residual layers per stage, dilation 2^l
    int channels = 16;
    int classes = 2;
    int kernel = 3;       // odd
    double smoothing_lambda = 0.15;
    double truncation_tau = 4.0;
    double learning_rate = 0.01;
    int epochs = 15;
    uint64_t seed = 0;

    void validate() const {
        if (stages < 1) throw std::invalid_argument("tcn: stages must be >= 1");
        if (layers < 1) throw std::invalid_argument("tcn: layers must be >= 1");
        if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("tcn: kernel must be odd");
        if (channels < 1 || classes < 2) throw std::invalid_argument("tcn: bad channel/class count");
    }
};

/// Frames of temporal context seen by one stage: 1 + (kernel-1) * (2^layers - 1).
int64_t receptive_field(int layers, int kernel);

template <typename T>
struct Conv1x1 {
    int in = 0, out = 0;
    std::vector<T> w;  // out x in
    std::vector<T> b;  // out
};

/// Dilated temporal conv -> rectifier -> 1x1 conv, added back to the input.
template <typename T>
struct DilatedLayer {
    int channels = 0, kernel = 3, dilation = 1;
    std::vector<T> w;  // out x in x kernel
    std::vector<T> b;  // out
    Conv1x1<T> pw;
};

template <typename T>
struct TcnStage {
    Conv1x1<T> in_proj;
    std::vector<DilatedLayer<T>> layers;
    Conv1x1<T> out_proj;
};

/// Multi-stage refinement: stage 0 reads the input sequence, every later
/// stage reads the previous stage's per-frame class probabilities.
template <typename T>
struct MsTcnNet {
    int input_dim = 0;
    int channels = 0;
    int classes = 0;
    int kernel = 3;
    std::vector<TcnStage<T>> stages;

    size_t parameter_count() const {
        size_t n = 0;
        for (const auto& s : stages) {
            n += s.in_proj.w.size() + s.in_proj.b.size();
            for (const auto& l : s.layers) n += l.w.size() + l.b.size() + l.pw.w.size() + l.pw.b.size();
            n += s.out_proj.w.size() + s.out_proj.b.size();
        }
        return n;
    }
};

using MsTcnModel = MsTcnNet<float>;

namespace detail {
template <typename T>
void fill_glorot(std::vector<T>& w, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& x : w) x = static_cast<T>(rng.uniform(-bound, bound));
}
}  // namespace detail

/// Seeded init, one derived stream per tensor so shapes that do not depend on
/// input_dim keep their values when input_dim changes.
template <typename T>
MsTcnNet<T> init_tcn_net(const TcnConfig& cfg, int input_dim, uint64_t seed) {
    cfg.validate();
    if (input_dim < 1) throw std::invalid_argument("tcn: input_dim must be >= 1");
    MsTcnNet<T> net;
    net.input_dim = input_dim;
    net.channels = cfg.channels;
    net.classes = cfg.classes;
    net.kernel = cfg.kernel;
    uint64_t tensor_index = 0;
    auto stream = [&] { return Rng(derive_seed(seed, tensor_index++)); };
    for (int s = 0; s < cfg.stages; ++s) {
        TcnStage<T> stage;
        const int in_dim = s == 0 ? input_dim : cfg.classes;
        stage.in_proj.in = in_dim;
        stage.in_proj.out = cfg.channels;
        stage.in_proj.w.resize(static_cast<size_t>(cfg.channels) * in_dim);
        stage.in_proj.b.assign(cfg.channels, T(0));
        {
            Rng r = stream();
            detail::fill_glorot(stage.in_proj.w, in_dim, cfg.channels, r);
        }
        for (int l = 0; l < cfg.layers; ++l) {
            DilatedLayer<T> layer;
            layer.channels = cfg.channels;
            layer.kernel = cfg.kernel;
            layer.dilation = 1 << l;
            layer.w.resize(static_cast<size_t>(cfg.channels) * cfg.channels * cfg.kernel);
            layer.b.assign(cfg.channels, T(0));
            {
                Rng r = stream();
                detail::fill_glorot(layer.w, cfg.channels * cfg.kernel, cfg.channels * cfg.kernel, r);
            }
            layer.pw.in = layer.pw.out = cfg.channels;
            layer.pw.w.resize(static_cast<size_t>(cfg.channels) * cfg.channels);
            layer.pw.b.assign(cfg.channels, T(0));
            {
                Rng r = stream();
                detail::fill_glorot(layer.pw.w, cfg.channels, cfg.channels, r);
            }
            stage.layers.push_back(std::move(layer));
        }
        stage.out_proj.in = cfg.channels;
        stage.out_proj.out = cfg.classes;
        stage.out_proj.w.resize(static_cast<size_t>(cfg.classes) * cfg.channels);
        stage.out_proj.b.assign(cfg.classes, T(0));
        {
            Rng r = stream();
            detail::fill_glorot(stage.out_proj.w, cfg.channels, cfg.classes, r);
        }
        net.stages.push_back(std::move(stage));
    }
    return net;
}

inline MsTcnModel init_tcn(const TcnConfig& cfg, int input_dim, uint64_t seed) {
    return init_tcn_net<float>(cfg, input_dim, seed);
}

/// Per-stage per-frame probabilities, frame-major: probs[s][t*classes + c].
struct TcnOutput {
    int frames = 0;
    int classes = 0;
    std::vector<std::vector<double>> stage_probs;
};

template <typename T>
TcnOutput tcn_forward(const MsTcnNet<T>& net, const std::vector<std::vector<double>>& input_rows);

/// Sum over stages of (mean cross-entropy + lambda * mean squared consecutive
/// log-probability difference, each squared term clamped at tau^2).
double tcn_loss(const TcnOutput& out, const std::vector<int>& labels, double lambda, double tau);

template <typename T>
struct TcnGradients {
    std::vector<std::vector<double>> tensors;  // one entry per parameter tensor, init order

    static TcnGradients zeros_like(const MsTcnNet<T>& net) {
        TcnGradients g;
        for (const auto& s : net.stages) {
            g.tensors.emplace_back(s.in_proj.w.size(), 0.0);
            g.tensors.emplace_back(s.in_proj.b.size(), 0.0);
            for (const auto& l : s.layers) {
                g.tensors.emplace_back(l.w.size(), 0.0);
                g.tensors.emplace_back(l.b.size(), 0.0);
                g.tensors.emplace_back(l.pw.w.size(), 0.0);
                g.tensors.emplace_back(l.pw.b.size(), 0.0);
            }
            g.tensors.emplace_back(s.out_proj.w.size(), 0.0);
            g.tensors.emplace_back(s.out_proj.b.size(), 0.0);
        }
        return g;
    }
};

/// Full backpropagation through every stage; accumulates into `grads` and
/// returns the loss.
template <typename T>
double tcn_backward(const MsTcnNet<T>& net, const std::vector<std::vector<double>>& input_rows,
                    const std::vector<int>& labels, double lambda, double tau,
                    TcnGradients<T>& grads);

/// Flat views over the parameter tensors, ordered exactly like
/// TcnGradients::tensors. Used by the optimizer and the gradient checks.
template <typename T>
std::vector<std::vector<T>*> parameter_tensors(MsTcnNet<T>& net) {
    std::vector<std::vector<T>*> out;
    for (auto& s : net.stages) {
        out.push_back(&s.in_proj.w);
        out.push_back(&s.in_proj.b);
        for (auto& l : s.layers) {
            out.push_back(&l.w);
            out.push_back(&l.b);
            out.push_back(&l.pw.w);
            out.push_back(&l.pw.b);
        }
        out.push_back(&s.out_proj.w);
        out.push_back(&s.out_proj.b);
    }
    return out;
}

struct TcnTrainStats {
    std::vector<double> epoch_loss;  // mean per-video loss, one entry per epoch
};

/// Whole-video full-batch steps (one sequence per step), Adam updates,
/// deterministic per seed.
TcnTrainStats train_tcn(MsTcnModel& net,
                        const std::vector<std::vector<std::vector<double>>>& videos,
                        const std::vector<std::vector<int>>& labels, const TcnConfig& cfg);

void save_tcn(const MsTcnModel& net, const std::filesystem::path& dir);
MsTcnModel load_tcn(const std::filesystem::path& dir);

}  // namespace phaseparse
