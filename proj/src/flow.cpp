#include "phaseparse/flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace phaseparse {

namespace {
constexpr double kDetEps = 1e-6;  // Gauss-Newton normal matrix considered singular below this
}

void FlowParams::validate() const {
    if (levels < 1) throw std::invalid_argument("flow: levels must be >= 1");
    if (patch_size < 4) throw std::invalid_argument("flow: patch size must be >= 4");
    if (stride < 1 || stride > patch_size)
        throw std::invalid_argument("flow: stride must be in [1, patch_size]");
    if (iterations < 1) throw std::invalid_argument("flow: iterations must be >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("flow: epsilon must be > 0");
    if (temperature <= 0.0) throw std::invalid_argument("flow: temperature must be > 0");
}

GrayImage to_gray(const FrameImage& frame) {
    GrayImage g;
    g.width = frame.width;
    g.height = frame.height;
    g.pix.resize(static_cast<size_t>(frame.width) * frame.height);
    if (frame.channels == 1) {
        for (size_t i = 0; i < g.pix.size(); ++i) g.pix[i] = static_cast<float>(frame.data[i]);
    } else {
        for (size_t i = 0; i < g.pix.size(); ++i) {
            const uint8_t* px = frame.data.data() + i * 3;
            g.pix[i] = static_cast<float>(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
        }
    }
    return g;
}

namespace {

GrayImage downsample2(const GrayImage& src) {
    GrayImage dst;
    dst.width = (src.width + 1) / 2;
    dst.height = (src.height + 1) / 2;
    dst.pix.resize(static_cast<size_t>(dst.width) * dst.height);
    for (int y = 0; y < dst.height; ++y) {
        const int y0 = 2 * y, y1 = std::min(2 * y + 1, src.height - 1);
        for (int x = 0; x < dst.width; ++x) {
            const int x0 = 2 * x, x1 = std::min(2 * x + 1, src.width - 1);
            dst.at(x, y) = 0.25f * (src.at(x0, y0) + src.at(x1, y0) + src.at(x0, y1) + src.at(x1, y1));
        }
    }
    return dst;
}

GrayImage gradient(const GrayImage& img, bool horizontal) {
    GrayImage g;
    g.width = img.width;
    g.height = img.height;
    g.pix.resize(img.pix.size());
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            int xa = x, xb = x, ya = y, yb = y;
            if (horizontal) {
                xa = std::max(x - 1, 0);
                xb = std::min(x + 1, img.width - 1);
            } else {
                ya = std::max(y - 1, 0);
                yb = std::min(y + 1, img.height - 1);
            }
            g.at(x, y) = 0.5f * (img.at(xb, yb) - img.at(xa, ya));
        }
    }
    return g;
}

inline float sample_bilinear(const GrayImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = std::min(static_cast<int>(x), img.width - 2 >= 0 ? img.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), img.height - 2 >= 0 ? img.height - 2 : 0);
    const double fx = x - x0, fy = y - y0;
    const double a = img.at(x0, y0), b = img.at(x0 + 1, y0);
    const double c = img.at(x0, y0 + 1), d = img.at(x0 + 1, y0 + 1);
    return static_cast<float>((a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy);
}

std::vector<float> upsample_bilinear(const std::vector<float>& src, int ws, int hs, int wd, int hd,
                                     double value_scale) {
    std::vector<float> dst(static_cast<size_t>(wd) * hd);
    for (int y = 0; y < hd; ++y) {
        const double sy = std::clamp((y + 0.5) * hs / hd - 0.5, 0.0, static_cast<double>(hs - 1));
        const int y0 = std::min(static_cast<int>(sy), hs - 2 >= 0 ? hs - 2 : 0);
        const double fy = sy - y0;
        for (int x = 0; x < wd; ++x) {
            const double sx = std::clamp((x + 0.5) * ws / wd - 0.5, 0.0, static_cast<double>(ws - 1));
            const int x0 = std::min(static_cast<int>(sx), ws - 2 >= 0 ? ws - 2 : 0);
            const double fx = sx - x0;
            const double a = src[static_cast<size_t>(y0) * ws + x0];
            const double b = src[static_cast<size_t>(y0) * ws + x0 + 1];
            const double c = src[static_cast<size_t>(y0 + 1) * ws + x0];
            const double d = src[static_cast<size_t>(y0 + 1) * ws + x0 + 1];
            dst[static_cast<size_t>(y) * wd + x] = static_cast<float>(
                value_scale * ((a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy));
        }
    }
    return dst;
}

std::vector<int> patch_positions(int extent, int patch, int stride) {
    std::vector<int> xs;
    for (int x = 0; x + patch <= extent; x += stride) xs.push_back(x);
    if (xs.empty() || xs.back() != extent - patch) xs.push_back(extent - patch);
    return xs;
}

}  // namespace

Pyramid build_pyramid(const GrayImage& frame, const FlowParams& params) {
    params.validate();
    const int need = (1 << (params.levels - 1)) * params.patch_size;
    if (frame.width < need || frame.height < need)
        throw std::invalid_argument("flow: frame too small for requested pyramid levels");
    std::vector<GrayImage> images;
    images.push_back(frame);
    for (int l = 1; l < params.levels; ++l) images.push_back(downsample2(images.back()));
    Pyramid pyr;
    pyr.levels.resize(params.levels);
    for (int l = 0; l < params.levels; ++l) {
        // levels[0] is the coarsest
        GrayImage img = std::move(images[params.levels - 1 - l]);
        pyr.levels[l].grad_x = gradient(img, true);
        pyr.levels[l].grad_y = gradient(img, false);
        pyr.levels[l].image = std::move(img);
    }
    return pyr;
}

Pyramid build_pyramid(const FrameImage& frame, const FlowParams& params) {
    return build_pyramid(to_gray(frame), params);
}

FlowField estimate_flow_pair(const GrayImage& g1, const GrayImage& g2, const FlowParams& params) {
    if (g1.width != g2.width || g1.height != g2.height)
        throw std::invalid_argument("flow: frame dimension mismatch");
    const Pyramid pyr1 = build_pyramid(g1, params);
    const Pyramid pyr2 = build_pyramid(g2, params);
    const int P = params.patch_size;

    std::vector<float> dense_u, dense_v;
    int prev_w = 0, prev_h = 0;

    for (int level = 0; level < params.levels; ++level) {
        const GrayImage& tpl = pyr1.levels[level].image;
        const GrayImage& tgx = pyr1.levels[level].grad_x;
        const GrayImage& tgy = pyr1.levels[level].grad_y;
        const GrayImage& img2 = pyr2.levels[level].image;
        const int w = tpl.width, h = tpl.height;

        if (level == 0) {
            dense_u.assign(static_cast<size_t>(w) * h, 0.0f);
            dense_v.assign(static_cast<size_t>(w) * h, 0.0f);
        } else {
            dense_u = upsample_bilinear(dense_u, prev_w, prev_h, w, h, static_cast<double>(w) / prev_w);
            dense_v = upsample_bilinear(dense_v, prev_w, prev_h, w, h, static_cast<double>(h) / prev_h);
        }

        const auto xs = patch_positions(w, P, params.stride);
        const auto ys = patch_positions(h, P, params.stride);

        std::vector<double> acc_u(static_cast<size_t>(w) * h, 0.0);
        std::vector<double> acc_v(static_cast<size_t>(w) * h, 0.0);
        std::vector<double> acc_w(static_cast<size_t>(w) * h, 0.0);

        for (int py : ys) {
            for (int px : xs) {
                // init from the aggregated coarser-level estimate at the patch center
                const int cxi = std::min(px + P / 2, w - 1);
                const int cyi = std::min(py + P / 2, h - 1);
                double dx = dense_u[static_cast<size_t>(cyi) * w + cxi];
                double dy = dense_v[static_cast<size_t>(cyi) * w + cxi];

                // template-side Gauss-Newton normal matrix, fixed per patch
                double gxx = 0.0, gxy = 0.0, gyy = 0.0;
                for (int y = py; y < py + P; ++y) {
                    for (int x = px; x < px + P; ++x) {
                        const double gx = tgx.at(x, y), gy = tgy.at(x, y);
                        gxx += gx * gx;
                        gxy += gx * gy;
                        gyy += gy * gy;
                    }
                }
                const double det = gxx * gyy - gxy * gxy;

                const auto residual_pass = [&](double ddx, double ddy, double* bx, double* by) {
                    double acc = 0.0;
                    for (int y = py; y < py + P; ++y) {
                        for (int x = px; x < px + P; ++x) {
                            const double r = sample_bilinear(img2, x + ddx, y + ddy) - tpl.at(x, y);
                            acc += r * r;
                            if (bx != nullptr) {
                                *bx += tgx.at(x, y) * r;
                                *by += tgy.at(x, y) * r;
                            }
                        }
                    }
                    return acc;
                };

                double ssd = residual_pass(dx, dy, nullptr, nullptr);
                if (level == 0) {
                    // the coarsest level has no prior; a one-pixel integer
                    // search keeps aliased textures off false ridges without
                    // reaching any repeat of the pattern
                    for (int sy = -1; sy <= 1; ++sy) {
                        for (int sx = -1; sx <= 1; ++sx) {
                            if (sx == 0 && sy == 0) continue;
                            const double cand = residual_pass(sx, sy, nullptr, nullptr);
                            if (cand < ssd) {
                                ssd = cand;
                                dx = sx;
                                dy = sy;
                            }
                        }
                    }
                }
                // the coarsest level starts from nothing, so its refinement
                // stays inside the searched neighborhood; deeper levels trust
                // their prior out to a patch width
                const double wander = level == 0 ? 1.0 : static_cast<double>(P);
                const double init_dx = dx, init_dy = dy;
                if (det >= kDetEps) {
                    // Gauss-Newton with a monotonicity guard: a step that lands
                    // worse than the best visited displacement is rolled back,
                    // so a diverging patch keeps its coarse-level prior.
                    double best_dx = dx, best_dy = dy, best_ssd = ssd;
                    const double inv_xx = gyy / det, inv_xy = -gxy / det, inv_yy = gxx / det;
                    for (int it = 0; it < params.iterations; ++it) {
                        double bx = 0.0, by = 0.0;
                        const double cur = residual_pass(dx, dy, &bx, &by);
                        if (cur < best_ssd) {
                            best_ssd = cur;
                            best_dx = dx;
                            best_dy = dy;
                        }
                        const double ux = inv_xx * bx + inv_xy * by;
                        const double uy = inv_xy * bx + inv_yy * by;
                        dx = std::clamp(dx - ux, std::max(init_dx - wander, -w / 2.0),
                                        std::min(init_dx + wander, w / 2.0));
                        dy = std::clamp(dy - uy, std::max(init_dy - wander, -h / 2.0),
                                        std::min(init_dy + wander, h / 2.0));
                        if (ux * ux + uy * uy < params.epsilon * params.epsilon) break;
                    }
                    ssd = residual_pass(dx, dy, nullptr, nullptr);
                    if (ssd > best_ssd) {
                        dx = best_dx;
                        dy = best_dy;
                        ssd = best_ssd;
                    }
                }

                const double weight = 1.0 / (1.0 + ssd / params.temperature);
                for (int y = py; y < py + P; ++y) {
                    double* au = acc_u.data() + static_cast<size_t>(y) * w;
                    double* av = acc_v.data() + static_cast<size_t>(y) * w;
                    double* aw = acc_w.data() + static_cast<size_t>(y) * w;
                    for (int x = px; x < px + P; ++x) {
                        au[x] += weight * dx;
                        av[x] += weight * dy;
                        aw[x] += weight;
                    }
                }
            }
        }

        for (size_t i = 0; i < acc_w.size(); ++i) {
            dense_u[i] = static_cast<float>(acc_u[i] / acc_w[i]);
            dense_v[i] = static_cast<float>(acc_v[i] / acc_w[i]);
        }
        prev_w = w;
        prev_h = h;
    }

    FlowField out;
    out.width = g1.width;
    out.height = g1.height;
    out.u = std::move(dense_u);
    out.v = std::move(dense_v);
    return out;
}

FlowField estimate_flow_pair(const FrameImage& f1, const FrameImage& f2, const FlowParams& params) {
    if (f1.width != f2.width || f1.height != f2.height)
        throw std::invalid_argument("flow: frame dimension mismatch");
    return estimate_flow_pair(to_gray(f1), to_gray(f2), params);
}

std::vector<FlowField> estimate_flow_sequence(const std::vector<FrameImage>& frames,
                                              const FlowParams& params, int threads) {
    if (frames.size() < 2) throw std::invalid_argument("flow: need at least two frames");
    for (size_t i = 1; i < frames.size(); ++i)
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height)
            throw std::invalid_argument("flow: inconsistent frame dimensions in sequence");

    const size_t pairs = frames.size() - 1;
    std::vector<FlowField> fields(pairs);
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(pairs)));

    if (threads == 1) {
        for (size_t i = 0; i < pairs; ++i)
            fields[i] = estimate_flow_pair(frames[i], frames[i + 1], params);
        return fields;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= pairs) return;
                fields[i] = estimate_flow_pair(frames[i], frames[i + 1], params);
            }
        });
    }
    for (auto& th : pool) th.join();
    return fields;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir))
        throw std::invalid_argument("not a directory: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace phaseparse
