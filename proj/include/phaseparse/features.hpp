#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "phaseparse/dataio.hpp"

namespace phaseparse {

inline constexpr int kFeatureDim = 26;

/// Fixed per-frame appearance descriptor:
///   [0..15]  normalized 16-bin intensity histogram
///   [16]     mean intensity (0..1 scale)
///   [17]     intensity stddev
///   [18]     dark-pixel fraction (I < 32)
///   [19]     bright-pixel fraction (I > 224)
///   [20]     gradient energy (mean squared central-difference magnitude)
///   [21]     center/periphery brightness ratio (lumen proxy)
///   [22]     radial brightness slope
///   [23]     frame-difference energy vs previous frame (0 for the first)
///   [24,25]  reserved, zero
using FeatureVector = std::array<double, kFeatureDim>;

FeatureVector extract_features(const FrameImage& frame, const FrameImage* prev_frame = nullptr);

/// Per-dimension standardization statistics (population mean/stddev,
/// stddev floored at 1e-8).
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    size_t dim() const { return mean.size(); }
};

Normalizer fit_normalizer(const std::vector<std::vector<double>>& rows);
std::vector<double> apply_normalizer(const Normalizer& n, const std::vector<double>& x);
std::vector<std::vector<double>> apply_normalizer(const Normalizer& n,
                                                  const std::vector<std::vector<double>>& rows);

// PTNS persistence: shape (2, dim), row 0 = mean, row 1 = stddev.
TensorFile normalizer_to_tensor(const Normalizer& n);
Normalizer normalizer_from_tensor(const TensorFile& t);

std::vector<double> feature_to_row(const FeatureVector& f);

}  // namespace phaseparse
