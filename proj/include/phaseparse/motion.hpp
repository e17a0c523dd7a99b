#pragma once

#include <cstdint>
#include <vector>

#include "phaseparse/dataio.hpp"

namespace phaseparse {

/// Axis-aligned rectangle in pixel-center coordinates, corners inclusive.
/// Its boundary is traversed with outward normals; the enclosed area is
/// (x1-x0)*(y1-y0). Must sit >= 1 px inside the field so the derivative
/// stencil fits, and span >= 8 px per side.
struct Region {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int span_x() const { return x1 - x0; }
    int span_y() const { return y1 - y0; }
    double area() const { return static_cast<double>(span_x()) * span_y(); }
};

/// Centered rectangle covering `fraction` of each dimension, clamped to the
/// 1-px stencil margin.
Region centered_region(int width, int height, double fraction);

void validate_region(const Region& r, int width, int height);

struct MotionParams {
    double region_fraction = 0.8;
    int median_width = 1;  // odd; 1 = off
};

/// Outward-normal line integral of the field over the region boundary,
/// trapezoid rule along each edge, samples at pixel centers. Positive for
/// expansion. Units px^2/frame.
double boundary_flux(const FlowField& flow, const Region& region);

/// Central-difference divergence integrated over the region (trapezoid
/// weights: 1/2 on edges, 1/4 on corners). Equals the boundary flux up to
/// discretization error; serves as its independent cross-check.
double divergence_sum(const FlowField& flow, const Region& region);

/// Area-normalized boundary flux: + forward, - backward.
double direction_measure(const FlowField& flow, const MotionParams& params = {});

/// Odd-width temporal median filter; width 1 returns the input.
std::vector<double> median_filter(const std::vector<double>& d, int width);

/// S(0)=0, S(t) = sum of d[0..t). Length N+1 for N inputs.
std::vector<double> cumulative_signal(const std::vector<double>& d);

/// Earliest global argmax of S. Interpreted as the first backward frame.
int64_t boundary_estimate(const std::vector<double>& cumulative);

/// Frames [0,b) -> 1, [b,T) -> 2.
std::vector<int> weak_labels(int64_t total_frames, int64_t boundary);

}  // namespace phaseparse
