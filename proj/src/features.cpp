#include "phaseparse/features.hpp"

#include <cmath>
#include <stdexcept>

namespace phaseparse {

namespace {

double gray_at(const FrameImage& f, int x, int y) {
    if (f.channels == 1) return f.at(x, y);
    return 0.299 * f.at(x, y, 0) + 0.587 * f.at(x, y, 1) + 0.114 * f.at(x, y, 2);
}

}  // namespace

FeatureVector extract_features(const FrameImage& frame, const FrameImage* prev_frame) {
    const int w = frame.width, h = frame.height;
    const double n = static_cast<double>(w) * h;
    FeatureVector f{};

    // histogram + moments + tail fractions, intensities on a 0..1 scale
    double sum = 0.0, sum_sq = 0.0, dark = 0.0, bright = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = gray_at(frame, x, y);
            const int bin = std::min(static_cast<int>(g) / 16, 15);
            f[bin] += 1.0;
            const double gn = g / 255.0;
            sum += gn;
            sum_sq += gn * gn;
            if (g < 32.0) dark += 1.0;
            if (g > 224.0) bright += 1.0;
        }
    }
    for (int b = 0; b < 16; ++b) f[b] /= n;
    const double mean = sum / n;
    f[16] = mean;
    f[17] = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
    f[18] = dark / n;
    f[19] = bright / n;

    // gradient energy: mean squared central-difference magnitude, interior
    double grad = 0.0;
    if (w > 2 && h > 2) {
        for (int y = 1; y < h - 1; ++y) {
            for (int x = 1; x < w - 1; ++x) {
                const double gx = 0.5 * (gray_at(frame, x + 1, y) - gray_at(frame, x - 1, y)) / 255.0;
                const double gy = 0.5 * (gray_at(frame, x, y + 1) - gray_at(frame, x, y - 1)) / 255.0;
                grad += gx * gx + gy * gy;
            }
        }
        grad /= static_cast<double>(w - 2) * (h - 2);
    }
    f[20] = grad;

    // lumen proxies: center/periphery contrast and radial brightness trend
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double r_half = std::min(w, h) / 2.0;
    double center_sum = 0.0, center_n = 0.0, peri_sum = 0.0, peri_n = 0.0;
    double r_sum = 0.0, r_sq = 0.0, rg_sum = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = gray_at(frame, x, y) / 255.0;
            const double r = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy)) / r_half;
            if (r < 0.35) {
                center_sum += g;
                center_n += 1.0;
            } else if (r > 0.7) {
                peri_sum += g;
                peri_n += 1.0;
            }
            r_sum += r;
            r_sq += r * r;
            rg_sum += r * g;
        }
    }
    const double peri_mean = peri_n > 0.0 ? peri_sum / peri_n : 0.0;
    f[21] = center_n > 0.0 ? (center_sum / center_n) / (peri_mean + 1e-6) : 0.0;
    const double r_mean = r_sum / n;
    const double r_var = r_sq / n - r_mean * r_mean;
    f[22] = r_var > 1e-12 ? (rg_sum / n - r_mean * mean) / r_var : 0.0;

    // temporal novelty
    if (prev_frame != nullptr) {
        if (prev_frame->width != w || prev_frame->height != h ||
            prev_frame->channels != frame.channels)
            throw std::invalid_argument("features: previous frame shape mismatch");
        double diff = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double d = (gray_at(frame, x, y) - gray_at(*prev_frame, x, y)) / 255.0;
                diff += d * d;
            }
        }
        f[23] = diff / n;
    }
    // f[24], f[25] reserved
    return f;
}

Normalizer fit_normalizer(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("normalizer: empty corpus");
    const size_t dim = rows[0].size();
    Normalizer norm;
    norm.mean.assign(dim, 0.0);
    norm.stddev.assign(dim, 0.0);
    for (const auto& row : rows) {
        if (row.size() != dim) throw std::invalid_argument("normalizer: ragged rows");
        for (size_t i = 0; i < dim; ++i) norm.mean[i] += row[i];
    }
    for (double& m : norm.mean) m /= static_cast<double>(rows.size());
    for (const auto& row : rows)
        for (size_t i = 0; i < dim; ++i) {
            const double d = row[i] - norm.mean[i];
            norm.stddev[i] += d * d;
        }
    for (double& s : norm.stddev) s = std::max(std::sqrt(s / static_cast<double>(rows.size())), 1e-8);
    return norm;
}

std::vector<double> apply_normalizer(const Normalizer& n, const std::vector<double>& x) {
    if (x.size() != n.dim()) throw std::invalid_argument("normalizer: dimension mismatch");
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - n.mean[i]) / n.stddev[i];
    return out;
}

std::vector<std::vector<double>> apply_normalizer(const Normalizer& n,
                                                  const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(apply_normalizer(n, row));
    return out;
}

TensorFile normalizer_to_tensor(const Normalizer& n) {
    TensorFile t;
    t.dims = {2, static_cast<uint32_t>(n.dim())};
    t.data.reserve(2 * n.dim());
    for (double m : n.mean) t.data.push_back(static_cast<float>(m));
    for (double s : n.stddev) t.data.push_back(static_cast<float>(s));
    return t;
}

Normalizer normalizer_from_tensor(const TensorFile& t) {
    if (t.rank() != 2 || t.dims[0] != 2)
        throw std::invalid_argument("normalizer: expected a (2, dim) tensor");
    Normalizer n;
    const size_t dim = t.dims[1];
    n.mean.assign(t.data.begin(), t.data.begin() + dim);
    n.stddev.assign(t.data.begin() + dim, t.data.end());
    return n;
}

std::vector<double> feature_to_row(const FeatureVector& f) {
    return std::vector<double>(f.begin(), f.end());
}

}  // namespace phaseparse
