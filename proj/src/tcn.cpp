#include "phaseparse/tcn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "phaseparse/dataio.hpp"

namespace phaseparse {

int64_t receptive_field(int layers, int kernel) {
    if (layers < 1 || kernel < 1) throw std::invalid_argument("receptive_field: bad arguments");
    return 1 + static_cast<int64_t>(kernel - 1) * ((int64_t(1) << layers) - 1);
}

namespace {

// Sequences are channel-major: row c occupies [c*T, (c+1)*T).
template <typename T>
void conv1x1_forward(const Conv1x1<T>& c, const double* in, int frames, double* out) {
    for (int o = 0; o < c.out; ++o) {
        double* row = out + static_cast<size_t>(o) * frames;
        std::fill(row, row + frames, static_cast<double>(c.b[o]));
        for (int i = 0; i < c.in; ++i) {
            const double w = static_cast<double>(c.w[static_cast<size_t>(o) * c.in + i]);
            const double* src = in + static_cast<size_t>(i) * frames;
            for (int t = 0; t < frames; ++t) row[t] += w * src[t];
        }
    }
}

template <typename T>
void conv1x1_backward(const Conv1x1<T>& c, const double* in, int frames, const double* d_out,
                      double* gw, double* gb, double* d_in) {
    for (int o = 0; o < c.out; ++o) {
        const double* drow = d_out + static_cast<size_t>(o) * frames;
        double acc = 0.0;
        for (int t = 0; t < frames; ++t) acc += drow[t];
        gb[o] += acc;
        for (int i = 0; i < c.in; ++i) {
            const double* src = in + static_cast<size_t>(i) * frames;
            double g = 0.0;
            for (int t = 0; t < frames; ++t) g += drow[t] * src[t];
            gw[static_cast<size_t>(o) * c.in + i] += g;
        }
    }
    if (d_in != nullptr) {
        for (int i = 0; i < c.in; ++i) {
            double* dst = d_in + static_cast<size_t>(i) * frames;
            for (int o = 0; o < c.out; ++o) {
                const double w = static_cast<double>(c.w[static_cast<size_t>(o) * c.in + i]);
                const double* drow = d_out + static_cast<size_t>(o) * frames;
                for (int t = 0; t < frames; ++t) dst[t] += w * drow[t];
            }
        }
    }
}

// Zero-padded dilated convolution, kernel centered (offline parsing).
template <typename T>
void dilated_forward(const DilatedLayer<T>& l, const double* in, int frames, double* out) {
    const int C = l.channels, k = l.kernel, center = l.kernel / 2;
    for (int o = 0; o < C; ++o) {
        double* row = out + static_cast<size_t>(o) * frames;
        std::fill(row, row + frames, static_cast<double>(l.b[o]));
        for (int i = 0; i < C; ++i) {
            const double* src = in + static_cast<size_t>(i) * frames;
            for (int j = 0; j < k; ++j) {
                const double w =
                    static_cast<double>(l.w[(static_cast<size_t>(o) * C + i) * k + j]);
                const int off = (j - center) * l.dilation;
                const int t0 = std::max(0, -off);
                const int t1 = std::min(frames, frames - off);
                for (int t = t0; t < t1; ++t) row[t] += w * src[t + off];
            }
        }
    }
}

template <typename T>
void dilated_backward(const DilatedLayer<T>& l, const double* in, int frames, const double* d_out,
                      double* gw, double* gb, double* d_in) {
    const int C = l.channels, k = l.kernel, center = l.kernel / 2;
    for (int o = 0; o < C; ++o) {
        const double* drow = d_out + static_cast<size_t>(o) * frames;
        double acc = 0.0;
        for (int t = 0; t < frames; ++t) acc += drow[t];
        gb[o] += acc;
        for (int i = 0; i < C; ++i) {
            const double* src = in + static_cast<size_t>(i) * frames;
            double* dst = d_in + static_cast<size_t>(i) * frames;
            for (int j = 0; j < k; ++j) {
                const size_t wi = (static_cast<size_t>(o) * C + i) * k + j;
                const double w = static_cast<double>(l.w[wi]);
                const int off = (j - center) * l.dilation;
                const int t0 = std::max(0, -off);
                const int t1 = std::min(frames, frames - off);
                double g = 0.0;
                for (int t = t0; t < t1; ++t) {
                    g += drow[t] * src[t + off];
                    dst[t + off] += w * drow[t];
                }
                gw[wi] += g;
            }
        }
    }
}

struct StageActs {
    std::vector<double> input;                  // Din*T
    std::vector<std::vector<double>> hidden;    // layers+1 entries, C*T each
    std::vector<std::vector<double>> conv_pre;  // layers entries, C*T each
    std::vector<double> logits;                 // classes*T
    std::vector<double> probs;                  // classes*T
    std::vector<double> logp;                   // classes*T
};

template <typename T>
void stage_forward(const TcnStage<T>& stage, int classes, int frames, StageActs& acts) {
    const int C = stage.in_proj.out;
    acts.hidden.assign(stage.layers.size() + 1, std::vector<double>(static_cast<size_t>(C) * frames));
    acts.conv_pre.assign(stage.layers.size(), std::vector<double>(static_cast<size_t>(C) * frames));
    conv1x1_forward(stage.in_proj, acts.input.data(), frames, acts.hidden[0].data());
    std::vector<double> post(static_cast<size_t>(C) * frames);
    std::vector<double> proj(static_cast<size_t>(C) * frames);
    for (size_t l = 0; l < stage.layers.size(); ++l) {
        dilated_forward(stage.layers[l], acts.hidden[l].data(), frames, acts.conv_pre[l].data());
        for (size_t i = 0; i < post.size(); ++i)
            post[i] = acts.conv_pre[l][i] > 0.0 ? acts.conv_pre[l][i] : 0.0;
        conv1x1_forward(stage.layers[l].pw, post.data(), frames, proj.data());
        for (size_t i = 0; i < proj.size(); ++i) acts.hidden[l + 1][i] = acts.hidden[l][i] + proj[i];
    }
    acts.logits.assign(static_cast<size_t>(classes) * frames, 0.0);
    conv1x1_forward(stage.out_proj, acts.hidden.back().data(), frames, acts.logits.data());

    acts.probs.resize(acts.logits.size());
    acts.logp.resize(acts.logits.size());
    for (int t = 0; t < frames; ++t) {
        double m = acts.logits[t];
        for (int c = 1; c < classes; ++c)
            m = std::max(m, acts.logits[static_cast<size_t>(c) * frames + t]);
        double sum = 0.0;
        for (int c = 0; c < classes; ++c)
            sum += std::exp(acts.logits[static_cast<size_t>(c) * frames + t] - m);
        const double lse = m + std::log(sum);
        for (int c = 0; c < classes; ++c) {
            const size_t i = static_cast<size_t>(c) * frames + t;
            acts.logp[i] = acts.logits[i] - lse;
            acts.probs[i] = std::exp(acts.logp[i]);
        }
    }
}

template <typename T>
std::vector<StageActs> forward_all(const MsTcnNet<T>& net,
                                   const std::vector<std::vector<double>>& input_rows) {
    const int frames = static_cast<int>(input_rows.size());
    if (frames < 1) throw std::invalid_argument("tcn: empty sequence");
    for (const auto& row : input_rows)
        if (static_cast<int>(row.size()) != net.input_dim)
            throw std::invalid_argument("tcn: input row dimension mismatch");

    std::vector<StageActs> acts(net.stages.size());
    // transpose to channel-major
    acts[0].input.resize(static_cast<size_t>(net.input_dim) * frames);
    for (int t = 0; t < frames; ++t)
        for (int d = 0; d < net.input_dim; ++d)
            acts[0].input[static_cast<size_t>(d) * frames + t] = input_rows[t][d];

    for (size_t s = 0; s < net.stages.size(); ++s) {
        if (s > 0) acts[s].input = acts[s - 1].probs;
        stage_forward(net.stages[s], net.classes, frames, acts[s]);
    }
    return acts;
}

double stage_loss_terms(const StageActs& acts, const std::vector<int>& labels, int classes,
                        int frames, double lambda, double tau, std::vector<double>* g_logp) {
    double ce = 0.0;
    const double inv_frames = 1.0 / frames;
    for (int t = 0; t < frames; ++t) {
        const size_t i = static_cast<size_t>(labels[t]) * frames + t;
        ce -= acts.logp[i];
        if (g_logp != nullptr) (*g_logp)[i] -= inv_frames;
    }
    ce *= inv_frames;

    double smooth = 0.0;
    if (frames > 1 && lambda != 0.0) {
        const double tau_sq = tau * tau;
        const double inv_terms = 1.0 / (static_cast<double>(frames - 1) * classes);
        for (int c = 0; c < classes; ++c) {
            const double* lp = acts.logp.data() + static_cast<size_t>(c) * frames;
            for (int t = 1; t < frames; ++t) {
                const double delta = lp[t] - lp[t - 1];
                const double sq = delta * delta;
                if (sq < tau_sq) {
                    smooth += sq;
                    if (g_logp != nullptr) {
                        const double coef = lambda * 2.0 * delta * inv_terms;
                        (*g_logp)[static_cast<size_t>(c) * frames + t] += coef;
                        (*g_logp)[static_cast<size_t>(c) * frames + t - 1] -= coef;
                    }
                } else {
                    smooth += tau_sq;
                }
            }
        }
        smooth *= inv_terms;
    }
    return ce + lambda * smooth;
}

}  // namespace

template <typename T>
TcnOutput tcn_forward(const MsTcnNet<T>& net, const std::vector<std::vector<double>>& input_rows) {
    const auto acts = forward_all(net, input_rows);
    const int frames = static_cast<int>(input_rows.size());
    TcnOutput out;
    out.frames = frames;
    out.classes = net.classes;
    out.stage_probs.reserve(acts.size());
    for (const auto& a : acts) {
        std::vector<double> fm(static_cast<size_t>(frames) * net.classes);
        for (int t = 0; t < frames; ++t)
            for (int c = 0; c < net.classes; ++c)
                fm[static_cast<size_t>(t) * net.classes + c] = a.probs[static_cast<size_t>(c) * frames + t];
        out.stage_probs.push_back(std::move(fm));
    }
    return out;
}

double tcn_loss(const TcnOutput& out, const std::vector<int>& labels, double lambda, double tau) {
    if (static_cast<int>(labels.size()) != out.frames)
        throw std::invalid_argument("tcn loss: label count mismatch");
    const int frames = out.frames, classes = out.classes;
    // probabilities floored before the log so hard one-hot inputs stay finite
    const auto log_p = [](double p) { return std::log(std::max(p, 1e-12)); };
    double total = 0.0;
    for (const auto& probs : out.stage_probs) {
        double ce = 0.0;
        for (int t = 0; t < frames; ++t)
            ce -= log_p(probs[static_cast<size_t>(t) * classes + labels[t]]);
        ce /= frames;
        double smooth = 0.0;
        if (frames > 1 && lambda != 0.0) {
            const double tau_sq = tau * tau;
            for (int t = 1; t < frames; ++t) {
                for (int c = 0; c < classes; ++c) {
                    const double delta = log_p(probs[static_cast<size_t>(t) * classes + c]) -
                                         log_p(probs[static_cast<size_t>(t - 1) * classes + c]);
                    smooth += std::min(delta * delta, tau_sq);
                }
            }
            smooth /= static_cast<double>(frames - 1) * classes;
        }
        total += ce + lambda * smooth;
    }
    return total;
}

template <typename T>
double tcn_backward(const MsTcnNet<T>& net, const std::vector<std::vector<double>>& input_rows,
                    const std::vector<int>& labels, double lambda, double tau,
                    TcnGradients<T>& grads) {
    const int frames = static_cast<int>(input_rows.size());
    if (static_cast<int>(labels.size()) != frames)
        throw std::invalid_argument("tcn: label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= net.classes) throw std::invalid_argument("tcn: label out of range");

    auto acts = forward_all(net, input_rows);
    const int classes = net.classes;
    const int C = net.channels;

    double total_loss = 0.0;
    // per-stage loss gradients w.r.t. log-probabilities
    std::vector<std::vector<double>> g_logp(net.stages.size());
    for (size_t s = 0; s < net.stages.size(); ++s) {
        g_logp[s].assign(static_cast<size_t>(classes) * frames, 0.0);
        total_loss += stage_loss_terms(acts[s], labels, classes, frames, lambda, tau, &g_logp[s]);
    }

    // gradient tensor layout mirrors parameter_tensors(); 8 tensors per
    // stage-boundary + 4 per layer, assembled below in reverse stage order
    const int per_stage = 4 + 4 * static_cast<int>(net.stages.front().layers.size());
    std::vector<double> d_probs_next;  // dL/d(input probs of stage s+1)

    for (int s = static_cast<int>(net.stages.size()) - 1; s >= 0; --s) {
        const auto& stage = net.stages[s];
        auto& a = acts[s];
        const size_t base = static_cast<size_t>(s) * per_stage;

        // combine the own-loss log-prob gradient with the downstream
        // probability gradient, then map through the softmax
        std::vector<double> d_logits(static_cast<size_t>(classes) * frames, 0.0);
        for (int t = 0; t < frames; ++t) {
            double sum_g = 0.0, sum_pd = 0.0;
            for (int c = 0; c < classes; ++c) {
                const size_t i = static_cast<size_t>(c) * frames + t;
                sum_g += g_logp[s][i];
                if (!d_probs_next.empty()) sum_pd += a.probs[i] * d_probs_next[i];
            }
            for (int c = 0; c < classes; ++c) {
                const size_t i = static_cast<size_t>(c) * frames + t;
                double g = g_logp[s][i] - a.probs[i] * sum_g;
                if (!d_probs_next.empty()) g += a.probs[i] * (d_probs_next[i] - sum_pd);
                d_logits[i] = g;
            }
        }

        std::vector<double> d_hidden(static_cast<size_t>(C) * frames, 0.0);
        conv1x1_backward(stage.out_proj, a.hidden.back().data(), frames, d_logits.data(),
                         grads.tensors[base + per_stage - 2].data(),
                         grads.tensors[base + per_stage - 1].data(), d_hidden.data());

        std::vector<double> post(static_cast<size_t>(C) * frames);
        std::vector<double> d_post(static_cast<size_t>(C) * frames);
        std::vector<double> d_pre(static_cast<size_t>(C) * frames);
        for (int l = static_cast<int>(stage.layers.size()) - 1; l >= 0; --l) {
            const auto& layer = stage.layers[l];
            const size_t lbase = base + 2 + static_cast<size_t>(l) * 4;
            for (size_t i = 0; i < post.size(); ++i)
                post[i] = a.conv_pre[l][i] > 0.0 ? a.conv_pre[l][i] : 0.0;
            std::fill(d_post.begin(), d_post.end(), 0.0);
            conv1x1_backward(layer.pw, post.data(), frames, d_hidden.data(),
                             grads.tensors[lbase + 2].data(), grads.tensors[lbase + 3].data(),
                             d_post.data());
            for (size_t i = 0; i < d_pre.size(); ++i)
                d_pre[i] = a.conv_pre[l][i] > 0.0 ? d_post[i] : 0.0;
            // residual: d_hidden keeps the identity path, conv adds its share
            dilated_backward(layer, a.hidden[l].data(), frames, d_pre.data(),
                             grads.tensors[lbase].data(), grads.tensors[lbase + 1].data(),
                             d_hidden.data());
        }

        std::vector<double>* d_input = nullptr;
        std::vector<double> d_in_buf;
        if (s > 0) {
            d_in_buf.assign(static_cast<size_t>(classes) * frames, 0.0);
            d_input = &d_in_buf;
        }
        conv1x1_backward(stage.in_proj, a.input.data(), frames, d_hidden.data(),
                         grads.tensors[base].data(), grads.tensors[base + 1].data(),
                         d_input != nullptr ? d_input->data() : nullptr);
        d_probs_next = d_input != nullptr ? std::move(d_in_buf) : std::vector<double>{};
    }
    return total_loss;
}

TcnTrainStats train_tcn(MsTcnModel& net,
                        const std::vector<std::vector<std::vector<double>>>& videos,
                        const std::vector<std::vector<int>>& labels, const TcnConfig& cfg) {
    if (videos.empty() || videos.size() != labels.size())
        throw std::invalid_argument("tcn: video/label count mismatch");

    auto params = parameter_tensors(net);
    std::vector<std::vector<double>> m(params.size()), v(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        m[i].assign(params[i]->size(), 0.0);
        v[i].assign(params[i]->size(), 0.0);
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

    Rng rng(derive_seed(cfg.seed, 777));
    std::vector<size_t> order(videos.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TcnTrainStats stats;
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        for (size_t vid : order) {
            auto grads = TcnGradients<float>::zeros_like(net);
            epoch_loss += tcn_backward(net, videos[vid], labels[vid], cfg.smoothing_lambda,
                                       cfg.truncation_tau, grads);
            ++step;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (size_t i = 0; i < params.size(); ++i) {
                auto& p = *params[i];
                for (size_t j = 0; j < p.size(); ++j) {
                    const double g = grads.tensors[i][j];
                    m[i][j] = kBeta1 * m[i][j] + (1.0 - kBeta1) * g;
                    v[i][j] = kBeta2 * v[i][j] + (1.0 - kBeta2) * g * g;
                    const double update =
                        cfg.learning_rate * (m[i][j] / bc1) / (std::sqrt(v[i][j] / bc2) + kEps);
                    p[j] = static_cast<float>(p[j] - update);
                }
            }
        }
        stats.epoch_loss.push_back(epoch_loss / static_cast<double>(videos.size()));
    }
    return stats;
}

namespace {

void store_named(const std::filesystem::path& dir, const std::string& name,
                 const std::vector<float>& data, std::vector<uint32_t> dims) {
    TensorFile t;
    t.dims = std::move(dims);
    t.data = data;
    store_tensor(t, dir / (name + ".ptns"));
}

std::vector<float> load_named(const std::filesystem::path& dir, const std::string& name,
                              const std::vector<uint32_t>& dims) {
    const auto t = load_tensor(dir / (name + ".ptns"));
    if (t.dims != dims) throw IoError(IoCode::BadDims, "tcn: tensor shape mismatch for " + name);
    return t.data;
}

}  // namespace

void save_tcn(const MsTcnModel& net, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
        manifest << "input_dim " << net.input_dim << "\nchannels " << net.channels << "\nclasses "
                 << net.classes << "\nkernel " << net.kernel << "\nstages " << net.stages.size()
                 << "\nlayers " << net.stages.front().layers.size() << "\n";
        if (!manifest) throw IoError(IoCode::WriteFailed, "cannot write tcn manifest");
    }
    const auto u32 = [](int x) { return static_cast<uint32_t>(x); };
    for (size_t s = 0; s < net.stages.size(); ++s) {
        const auto& stage = net.stages[s];
        const std::string prefix = "s" + std::to_string(s) + "_";
        store_named(dir, prefix + "in_w", stage.in_proj.w, {u32(stage.in_proj.out), u32(stage.in_proj.in)});
        store_named(dir, prefix + "in_b", stage.in_proj.b, {u32(stage.in_proj.out)});
        for (size_t l = 0; l < stage.layers.size(); ++l) {
            const auto& layer = stage.layers[l];
            const std::string lp = prefix + "l" + std::to_string(l) + "_";
            store_named(dir, lp + "conv_w", layer.w,
                        {u32(layer.channels), u32(layer.channels), u32(layer.kernel)});
            store_named(dir, lp + "conv_b", layer.b, {u32(layer.channels)});
            store_named(dir, lp + "pw_w", layer.pw.w, {u32(layer.pw.out), u32(layer.pw.in)});
            store_named(dir, lp + "pw_b", layer.pw.b, {u32(layer.pw.out)});
        }
        store_named(dir, prefix + "out_w", stage.out_proj.w,
                    {u32(stage.out_proj.out), u32(stage.out_proj.in)});
        store_named(dir, prefix + "out_b", stage.out_proj.b, {u32(stage.out_proj.out)});
    }
}

MsTcnModel load_tcn(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError(IoCode::OpenFailed, "cannot open tcn manifest in " + dir.string());
    int input_dim = 0, channels = 0, classes = 0, kernel = 0, stages = 0, layers = 0;
    std::string key;
    while (manifest >> key) {
        if (key == "input_dim") manifest >> input_dim;
        else if (key == "channels") manifest >> channels;
        else if (key == "classes") manifest >> classes;
        else if (key == "kernel") manifest >> kernel;
        else if (key == "stages") manifest >> stages;
        else if (key == "layers") manifest >> layers;
        else throw IoError(IoCode::BadHeader, "tcn manifest: unknown key " + key);
    }
    TcnConfig cfg;
    cfg.stages = stages;
    cfg.layers = layers;
    cfg.channels = channels;
    cfg.classes = classes;
    cfg.kernel = kernel;
    MsTcnModel net = init_tcn(cfg, input_dim, 0);
    const auto u32 = [](int x) { return static_cast<uint32_t>(x); };
    for (int s = 0; s < stages; ++s) {
        auto& stage = net.stages[s];
        const std::string prefix = "s" + std::to_string(s) + "_";
        stage.in_proj.w = load_named(dir, prefix + "in_w", {u32(stage.in_proj.out), u32(stage.in_proj.in)});
        stage.in_proj.b = load_named(dir, prefix + "in_b", {u32(stage.in_proj.out)});
        for (int l = 0; l < layers; ++l) {
            auto& layer = stage.layers[l];
            const std::string lp = prefix + "l" + std::to_string(l) + "_";
            layer.w = load_named(dir, lp + "conv_w", {u32(channels), u32(channels), u32(kernel)});
            layer.b = load_named(dir, lp + "conv_b", {u32(channels)});
            layer.pw.w = load_named(dir, lp + "pw_w", {u32(channels), u32(channels)});
            layer.pw.b = load_named(dir, lp + "pw_b", {u32(channels)});
        }
        stage.out_proj.w = load_named(dir, prefix + "out_w", {u32(classes), u32(channels)});
        stage.out_proj.b = load_named(dir, prefix + "out_b", {u32(classes)});
    }
    return net;
}

// instantiations for production (float) and verification (double) precision
template TcnOutput tcn_forward<float>(const MsTcnNet<float>&, const std::vector<std::vector<double>>&);
template TcnOutput tcn_forward<double>(const MsTcnNet<double>&, const std::vector<std::vector<double>>&);
template double tcn_backward<float>(const MsTcnNet<float>&, const std::vector<std::vector<double>>&,
                                    const std::vector<int>&, double, double, TcnGradients<float>&);
template double tcn_backward<double>(const MsTcnNet<double>&, const std::vector<std::vector<double>>&,
                                     const std::vector<int>&, double, double, TcnGradients<double>&);

}  // namespace phaseparse
