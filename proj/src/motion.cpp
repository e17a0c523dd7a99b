#include "phaseparse/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phaseparse {

Region centered_region(int width, int height, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("region fraction must be in (0,1]");
    const auto span = [fraction](int extent) {
        const double c = (extent - 1) / 2.0;
        const double half = fraction * (extent - 1) / 2.0;
        int lo = static_cast<int>(std::ceil(c - half));
        int hi = static_cast<int>(std::floor(c + half));
        lo = std::max(lo, 1);
        hi = std::min(hi, extent - 2);
        return std::pair<int, int>{lo, hi};
    };
    const auto [x0, x1] = span(width);
    const auto [y0, y1] = span(height);
    return Region{x0, y0, x1, y1};
}

void validate_region(const Region& r, int width, int height) {
    if (r.x0 < 1 || r.y0 < 1 || r.x1 > width - 2 || r.y1 > height - 2)
        throw std::out_of_range("region must sit >= 1 px inside the field");
    if (r.span_x() < 8 || r.span_y() < 8)
        throw std::out_of_range("region must span at least 8 px per side");
}

double boundary_flux(const FlowField& flow, const Region& region) {
    validate_region(region, flow.width, flow.height);

    // Trapezoid weights along one edge: half at the endpoints.
    const auto edge_sum_u = [&](int x, int y0, int y1) {
        double acc = 0.5 * (flow.u_at(x, y0) + flow.u_at(x, y1));
        for (int y = y0 + 1; y < y1; ++y) acc += flow.u_at(x, y);
        return acc;
    };
    const auto edge_sum_v = [&](int y, int x0, int x1) {
        double acc = 0.5 * (flow.v_at(x0, y) + flow.v_at(x1, y));
        for (int x = x0 + 1; x < x1; ++x) acc += flow.v_at(x, y);
        return acc;
    };

    // Outward normals: +u on the right edge, -u on the left, +v on the top
    // (larger y), -v on the bottom. Pairing the opposite edges first makes a
    // constant field cancel exactly.
    const double right = edge_sum_u(region.x1, region.y0, region.y1);
    const double left = edge_sum_u(region.x0, region.y0, region.y1);
    const double top = edge_sum_v(region.y1, region.x0, region.x1);
    const double bottom = edge_sum_v(region.y0, region.x0, region.x1);
    return (right - left) + (top - bottom);
}

double divergence_sum(const FlowField& flow, const Region& region) {
    validate_region(region, flow.width, flow.height);
    double acc = 0.0;
    for (int y = region.y0; y <= region.y1; ++y) {
        const double wy = (y == region.y0 || y == region.y1) ? 0.5 : 1.0;
        for (int x = region.x0; x <= region.x1; ++x) {
            const double wx = (x == region.x0 || x == region.x1) ? 0.5 : 1.0;
            const double div =
                0.5 * (static_cast<double>(flow.u_at(x + 1, y)) - flow.u_at(x - 1, y)) +
                0.5 * (static_cast<double>(flow.v_at(x, y + 1)) - flow.v_at(x, y - 1));
            acc += wx * wy * div;
        }
    }
    return acc;
}

double direction_measure(const FlowField& flow, const MotionParams& params) {
    const Region region = centered_region(flow.width, flow.height, params.region_fraction);
    return boundary_flux(flow, region) / region.area();
}

std::vector<double> median_filter(const std::vector<double>& d, int width) {
    if (width < 1 || width % 2 == 0) throw std::invalid_argument("median width must be odd");
    if (width == 1 || d.empty()) return d;
    const int half = width / 2;
    const int n = static_cast<int>(d.size());
    std::vector<double> out(d.size());
    std::vector<double> window;
    window.reserve(width);
    for (int i = 0; i < n; ++i) {
        window.clear();
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j)
            window.push_back(d[j]);
        std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
        double m = window[window.size() / 2];
        if (window.size() % 2 == 0) {
            auto lower = std::max_element(window.begin(), window.begin() + window.size() / 2);
            m = 0.5 * (m + *lower);
        }
        out[i] = m;
    }
    return out;
}

std::vector<double> cumulative_signal(const std::vector<double>& d) {
    std::vector<double> s(d.size() + 1);
    s[0] = 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
        acc += d[i];
        s[i + 1] = acc;
    }
    return s;
}

int64_t boundary_estimate(const std::vector<double>& cumulative) {
    if (cumulative.empty()) throw std::invalid_argument("empty cumulative series");
    int64_t best = 0;
    for (int64_t t = 1; t < static_cast<int64_t>(cumulative.size()); ++t)
        if (cumulative[t] > cumulative[best]) best = t;  // earliest index on ties
    return best;
}

std::vector<int> weak_labels(int64_t total_frames, int64_t boundary) {
    if (total_frames < 0) throw std::invalid_argument("negative frame count");
    if (boundary < 0 || boundary > total_frames)
        throw std::invalid_argument("boundary outside [0, total_frames]");
    std::vector<int> labels(static_cast<size_t>(total_frames));
    for (int64_t t = 0; t < total_frames; ++t) labels[t] = t < boundary ? 1 : 2;
    return labels;
}

}  // namespace phaseparse
