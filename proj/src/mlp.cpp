#include "phaseparse/mlp.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "phaseparse/dataio.hpp"

namespace phaseparse {

std::vector<size_t> balanced_sample(const std::vector<int>& labels, int num_classes,
                                    int per_class, Rng& rng) {
    if (per_class < 1) throw std::invalid_argument("balanced_sample: per_class must be >= 1");
    std::vector<std::vector<size_t>> by_class(num_classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw std::invalid_argument("balanced_sample: label out of range");
        by_class[labels[i]].push_back(i);
    }
    size_t k = static_cast<size_t>(per_class);
    for (int c = 0; c < num_classes; ++c) {
        if (by_class[c].empty())
            throw std::invalid_argument("balanced_sample: class " + std::to_string(c) +
                                        " absent, balance unsatisfiable");
        k = std::min(k, by_class[c].size());
    }
    std::vector<size_t> out;
    out.reserve(k * num_classes);
    for (int c = 0; c < num_classes; ++c) {
        auto& pool = by_class[c];
        rng.shuffle(pool.begin(), pool.end());
        out.insert(out.end(), pool.begin(), pool.begin() + k);
    }
    return out;
}

TrainStats train_mlp(MlpModel& net, const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, const TrainConfig& cfg) {
    if (features.size() != labels.size())
        throw std::invalid_argument("train: feature/label count mismatch");
    if (features.empty()) throw std::invalid_argument("train: empty training set");
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("train: learning rate must be > 0");

    Rng rng(cfg.seed);
    std::vector<size_t> pool =
        balanced_sample(labels, net.output_dim(), cfg.samples_per_class, rng);

    std::vector<std::vector<double>> velocity_w, velocity_b;
    for (int l = 0; l < net.layer_count(); ++l) {
        velocity_w.emplace_back(net.weights[l].size(), 0.0);
        velocity_b.emplace_back(net.biases[l].size(), 0.0);
    }

    const int batch = std::max(1, std::min<int>(cfg.batch_size, static_cast<int>(pool.size())));
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(pool.begin(), pool.end());
        for (size_t start = 0; start < pool.size(); start += batch) {
            const size_t stop = std::min(pool.size(), start + batch);
            xs.clear();
            ys.clear();
            for (size_t i = start; i < stop; ++i) {
                xs.push_back(features[pool[i]]);
                ys.push_back(labels[pool[i]]);
            }
            auto grads = MlpGradients<float>::zeros_like(net);
            mlp_backward(net, xs, ys, grads);
            for (int l = 0; l < net.layer_count(); ++l) {
                for (size_t i = 0; i < net.weights[l].size(); ++i) {
                    velocity_w[l][i] = cfg.momentum * velocity_w[l][i] -
                                       cfg.learning_rate * grads.weights[l][i];
                    net.weights[l][i] = static_cast<float>(net.weights[l][i] + velocity_w[l][i]);
                }
                for (size_t i = 0; i < net.biases[l].size(); ++i) {
                    velocity_b[l][i] = cfg.momentum * velocity_b[l][i] -
                                       cfg.learning_rate * grads.biases[l][i];
                    net.biases[l][i] = static_cast<float>(net.biases[l][i] + velocity_b[l][i]);
                }
            }
        }
    }

    TrainStats stats;
    xs.clear();
    ys.clear();
    for (size_t i : pool) {
        xs.push_back(features[i]);
        ys.push_back(labels[i]);
    }
    stats.final_loss = mlp_loss(net, xs, ys);
    size_t correct = 0;
    for (size_t i = 0; i < features.size(); ++i) {
        const auto p = predict_proba(net, features[i]);
        const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        if (pred == labels[i]) ++correct;
    }
    stats.label_accuracy = static_cast<double>(correct) / static_cast<double>(features.size());
    return stats;
}

namespace {

TensorFile weight_tensor(const std::vector<float>& w, uint32_t out, uint32_t in) {
    TensorFile t;
    t.dims = {out, in};
    t.data = w;
    return t;
}

TensorFile bias_tensor(const std::vector<float>& b) {
    TensorFile t;
    t.dims = {static_cast<uint32_t>(b.size())};
    t.data = b;
    return t;
}

}  // namespace

void save_mlp(const MlpModel& net, const Normalizer* norm, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
        manifest << "dims";
        for (int d : net.dims) manifest << ' ' << d;
        manifest << "\nhidden relu\noutput softmax\n";
        if (!manifest) throw IoError(IoCode::WriteFailed, "cannot write mlp manifest");
    }
    for (int l = 0; l < net.layer_count(); ++l) {
        store_tensor(weight_tensor(net.weights[l], net.dims[l + 1], net.dims[l]),
                     dir / ("w" + std::to_string(l) + ".ptns"));
        store_tensor(bias_tensor(net.biases[l]), dir / ("b" + std::to_string(l) + ".ptns"));
    }
    if (norm != nullptr) store_tensor(normalizer_to_tensor(*norm), dir / "norm.ptns");
}

MlpModel load_mlp(const std::filesystem::path& dir, Normalizer* norm_out) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError(IoCode::OpenFailed, "cannot open mlp manifest in " + dir.string());
    std::string line;
    MlpModel net;
    while (std::getline(manifest, line)) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "dims") {
            int d;
            while (ss >> d) net.dims.push_back(d);
        } else if (key == "hidden" || key == "output") {
            std::string act;
            ss >> act;
            if ((key == "hidden" && act != "relu") || (key == "output" && act != "softmax"))
                throw IoError(IoCode::BadHeader, "mlp manifest: unsupported activation " + act);
        }
    }
    if (net.dims.size() < 2) throw IoError(IoCode::BadHeader, "mlp manifest: missing dims");
    for (int l = 0; l + 1 < static_cast<int>(net.dims.size()); ++l) {
        const auto wt = load_tensor(dir / ("w" + std::to_string(l) + ".ptns"));
        const auto bt = load_tensor(dir / ("b" + std::to_string(l) + ".ptns"));
        if (wt.rank() != 2 || wt.dims[0] != static_cast<uint32_t>(net.dims[l + 1]) ||
            wt.dims[1] != static_cast<uint32_t>(net.dims[l]))
            throw IoError(IoCode::BadDims, "mlp: weight tensor shape mismatch");
        if (bt.rank() != 1 || bt.dims[0] != static_cast<uint32_t>(net.dims[l + 1]))
            throw IoError(IoCode::BadDims, "mlp: bias tensor shape mismatch");
        net.weights.push_back(wt.data);
        net.biases.push_back(bt.data);
    }
    if (norm_out != nullptr) {
        const auto norm_path = dir / "norm.ptns";
        if (std::filesystem::exists(norm_path))
            *norm_out = normalizer_from_tensor(load_tensor(norm_path));
        else
            *norm_out = Normalizer{};
    }
    return net;
}

}  // namespace phaseparse
