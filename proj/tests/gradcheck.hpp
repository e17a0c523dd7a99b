#pragma once

#include <cmath>
#include <vector>

#include "phaseparse/mlp.hpp"
#include "phaseparse/tcn.hpp"

namespace testutil {

/// Global relative error between two gradient vectors:
/// max |a-b| / max(max |b|, floor).
inline double gradient_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double max_diff = 0.0, max_ref = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
        max_ref = std::max(max_ref, std::abs(b[i]));
    }
    return max_diff / std::max(max_ref, 1e-12);
}

template <typename Src, typename Dst>
phaseparse::MlpNet<Dst> mlp_cast(const phaseparse::MlpNet<Src>& net) {
    phaseparse::MlpNet<Dst> out;
    out.dims = net.dims;
    for (const auto& w : net.weights) out.weights.emplace_back(w.begin(), w.end());
    for (const auto& b : net.biases) out.biases.emplace_back(b.begin(), b.end());
    return out;
}

/// Backprop gradient of the mean cross-entropy, flattened in parameter order.
template <typename T>
std::vector<double> mlp_backprop_flat(const phaseparse::MlpNet<T>& net,
                                      const std::vector<std::vector<double>>& xs,
                                      const std::vector<int>& ys) {
    auto grads = phaseparse::MlpGradients<T>::zeros_like(net);
    phaseparse::mlp_backward(net, xs, ys, grads);
    std::vector<double> flat;
    for (int l = 0; l < net.layer_count(); ++l) {
        flat.insert(flat.end(), grads.weights[l].begin(), grads.weights[l].end());
        flat.insert(flat.end(), grads.biases[l].begin(), grads.biases[l].end());
    }
    return flat;
}

/// Central finite differences of the mean cross-entropy, double precision.
inline std::vector<double> mlp_fd_flat(phaseparse::MlpNet<double> net,
                                       const std::vector<std::vector<double>>& xs,
                                       const std::vector<int>& ys, double h = 1e-6) {
    std::vector<double> flat;
    for (int l = 0; l < net.layer_count(); ++l) {
        for (auto* vec : {&net.weights[l], &net.biases[l]}) {
            for (auto& p : *vec) {
                const double saved = p;
                p = saved + h;
                const double up = phaseparse::mlp_loss(net, xs, ys);
                p = saved - h;
                const double down = phaseparse::mlp_loss(net, xs, ys);
                p = saved;
                flat.push_back((up - down) / (2.0 * h));
            }
        }
    }
    return flat;
}

template <typename Src, typename Dst>
phaseparse::MsTcnNet<Dst> tcn_cast(const phaseparse::MsTcnNet<Src>& net) {
    phaseparse::MsTcnNet<Dst> out;
    out.input_dim = net.input_dim;
    out.channels = net.channels;
    out.classes = net.classes;
    out.kernel = net.kernel;
    for (const auto& s : net.stages) {
        phaseparse::TcnStage<Dst> stage;
        stage.in_proj.in = s.in_proj.in;
        stage.in_proj.out = s.in_proj.out;
        stage.in_proj.w.assign(s.in_proj.w.begin(), s.in_proj.w.end());
        stage.in_proj.b.assign(s.in_proj.b.begin(), s.in_proj.b.end());
        for (const auto& l : s.layers) {
            phaseparse::DilatedLayer<Dst> layer;
            layer.channels = l.channels;
            layer.kernel = l.kernel;
            layer.dilation = l.dilation;
            layer.w.assign(l.w.begin(), l.w.end());
            layer.b.assign(l.b.begin(), l.b.end());
            layer.pw.in = l.pw.in;
            layer.pw.out = l.pw.out;
            layer.pw.w.assign(l.pw.w.begin(), l.pw.w.end());
            layer.pw.b.assign(l.pw.b.begin(), l.pw.b.end());
            stage.layers.push_back(std::move(layer));
        }
        stage.out_proj.in = s.out_proj.in;
        stage.out_proj.out = s.out_proj.out;
        stage.out_proj.w.assign(s.out_proj.w.begin(), s.out_proj.w.end());
        stage.out_proj.b.assign(s.out_proj.b.begin(), s.out_proj.b.end());
        out.stages.push_back(std::move(stage));
    }
    return out;
}

template <typename T>
std::vector<double> tcn_backprop_flat(const phaseparse::MsTcnNet<T>& net,
                                      const std::vector<std::vector<double>>& rows,
                                      const std::vector<int>& labels, double lambda, double tau) {
    auto grads = phaseparse::TcnGradients<T>::zeros_like(net);
    phaseparse::tcn_backward(net, rows, labels, lambda, tau, grads);
    std::vector<double> flat;
    for (const auto& t : grads.tensors) flat.insert(flat.end(), t.begin(), t.end());
    return flat;
}

inline std::vector<double> tcn_fd_flat(phaseparse::MsTcnNet<double> net,
                                       const std::vector<std::vector<double>>& rows,
                                       const std::vector<int>& labels, double lambda, double tau,
                                       double h = 1e-6) {
    const auto loss = [&] {
        return phaseparse::tcn_loss(phaseparse::tcn_forward(net, rows), labels, lambda, tau);
    };
    std::vector<double> flat;
    for (auto* tensor : phaseparse::parameter_tensors(net)) {
        for (auto& p : *tensor) {
            const double saved = p;
            p = saved + h;
            const double up = loss();
            p = saved - h;
            const double down = loss();
            p = saved;
            flat.push_back((up - down) / (2.0 * h));
        }
    }
    return flat;
}

}  // namespace testutil
