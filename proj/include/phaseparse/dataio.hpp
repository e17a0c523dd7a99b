#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace phaseparse {

/// Why a load/store failed. Kept machine-checkable so callers can react to
/// specific conditions instead of parsing messages.
enum class IoCode {
    OpenFailed,
    BadMagic,
    BadHeader,
    BadMaxval,
    BadDims,
    Truncated,
    SizeMismatch,
    NonMonotonic,
    BadNumber,
    WriteFailed,
};

class IoError : public std::runtime_error {
public:
    IoError(IoCode code, const std::string& msg) : std::runtime_error(msg), code(code) {}
    IoCode code;
};

/// 8-bit raster frame, row-major, interleaved channels (1 = gray, 3 = RGB).
struct FrameImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<uint8_t> data;

    uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t sample_count() const {
        return static_cast<size_t>(width) * height * channels;
    }
    bool operator==(const FrameImage&) const = default;
};

/// Dense displacement field between two frames, pixels/frame, row-major.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    static FlowField zeros(int w, int h) {
        FlowField f;
        f.width = w;
        f.height = h;
        f.u.assign(static_cast<size_t>(w) * h, 0.0f);
        f.v.assign(static_cast<size_t>(w) * h, 0.0f);
        return f;
    }
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    float u_at(int x, int y) const { return u[idx(x, y)]; }
    float v_at(int x, int y) const { return v[idx(x, y)]; }
    bool operator==(const FlowField&) const = default;
};

/// Row-major f32 tensor container, rank 1..4.
struct TensorFile {
    std::vector<uint32_t> dims;
    std::vector<float> data;

    int rank() const { return static_cast<int>(dims.size()); }
    size_t element_count() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }
    bool operator==(const TensorFile&) const = default;
};

/// Scalar series indexed by frame or frame-pair number.
struct SignalSeries {
    std::vector<int64_t> indices;
    std::vector<double> values;

    size_t size() const { return indices.size(); }
    bool operator==(const SignalSeries&) const = default;
};

// Binary PGM (P5) / PPM (P6), maxval 255.
FrameImage load_frame(const std::filesystem::path& path);
void store_frame(const FrameImage& img, const std::filesystem::path& path);

// Middlebury .flo: f32 magic 202021.25, i32 width, i32 height, interleaved
// (u,v) f32 pairs. All little-endian.
FlowField load_flow(const std::filesystem::path& path);
void store_flow(const FlowField& flow, const std::filesystem::path& path);

// "PTNS" + u32 rank + u32 dims[rank] + f32 payload, little-endian.
TensorFile load_tensor(const std::filesystem::path& path);
void store_tensor(const TensorFile& t, const std::filesystem::path& path);

// CSV with header "index,value", LF newlines, '.' decimal separator.
// Values round-trip at 17 significant digits.
SignalSeries load_signal(const std::filesystem::path& path);
void store_signal(const SignalSeries& s, const std::filesystem::path& path);

// Convenience shapes used throughout the pipeline.
TensorFile tensor_from_matrix(const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> matrix_from_tensor(const TensorFile& t);

}  // namespace phaseparse
