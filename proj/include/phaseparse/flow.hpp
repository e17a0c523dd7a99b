#pragma once

#include <filesystem>
#include <vector>

#include "phaseparse/dataio.hpp"

namespace phaseparse {

struct FlowParams {
    int levels = 4;        // pyramid depth, x2 downscale per level
    int patch_size = 8;
    int stride = 4;
    int iterations = 8;    // Gauss-Newton steps per patch
    double epsilon = 0.01; // stop when the update norm falls below, px
    double temperature = 6400.0;  // SSD scale in densification weights

    void validate() const;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pix;  // row-major

    float at(int x, int y) const { return pix[static_cast<size_t>(y) * width + x]; }
    float& at(int x, int y) { return pix[static_cast<size_t>(y) * width + x]; }
};

struct PyramidLevel {
    GrayImage image;
    GrayImage grad_x;  // central differences, clamped borders
    GrayImage grad_y;
};

/// levels[0] is the coarsest, levels.back() the input resolution.
struct Pyramid {
    std::vector<PyramidLevel> levels;
};

/// Luma conversion (0.299 R + 0.587 G + 0.114 B); gray passes through.
GrayImage to_gray(const FrameImage& frame);

/// 2x2 box-filter pyramid with per-level gradients. The frame must be at
/// least 2^(levels-1) * patch_size on each side.
Pyramid build_pyramid(const GrayImage& frame, const FlowParams& params);
Pyramid build_pyramid(const FrameImage& frame, const FlowParams& params);

/// Dense flow from f1 to f2: coarse-to-fine patch-based inverse-compositional
/// alignment, densified by residual-weighted averaging of overlapping patches.
FlowField estimate_flow_pair(const FrameImage& f1, const FrameImage& f2, const FlowParams& params);
FlowField estimate_flow_pair(const GrayImage& g1, const GrayImage& g2, const FlowParams& params);

/// Field i is computed from frames (i, i+1). Pairs run on `threads` workers;
/// the output does not depend on the thread count.
std::vector<FlowField> estimate_flow_sequence(const std::vector<FrameImage>& frames,
                                              const FlowParams& params, int threads);

/// Lists frame_*.pgm/ppm files in a directory, sorted by name.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

}  // namespace phaseparse
