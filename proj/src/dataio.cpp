#include "phaseparse/dataio.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

namespace phaseparse {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoCode::OpenFailed, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoCode::OpenFailed, "cannot open " + path.string() + " for writing");
    return out;
}

// Explicit little-endian packing, independent of host byte order.
void put_u32(std::string& buf, uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& buf, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(buf, v);
}

class ByteReader {
public:
    ByteReader(std::ifstream& in, const std::string& what) : in_(in), what_(what) {}

    uint32_t u32() {
        unsigned char b[4];
        if (!in_.read(reinterpret_cast<char*>(b), 4))
            throw IoError(IoCode::Truncated, what_ + ": truncated");
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }

    int32_t i32() { return static_cast<int32_t>(u32()); }

    float f32() {
        uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }

    void f32_block(float* dst, size_t count) {
        for (size_t i = 0; i < count; ++i) dst[i] = f32();
    }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

private:
    std::ifstream& in_;
    std::string what_;
};

void write_all(std::ofstream& out, const std::string& buf, const std::filesystem::path& path) {
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw IoError(IoCode::WriteFailed, "write failed: " + path.string());
}

// netpbm token: skips whitespace and '#' comments.
std::string pnm_token(std::ifstream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    std::string tok;
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

int pnm_int(std::ifstream& in, const char* what) {
    const std::string tok = pnm_token(in);
    if (tok.empty()) throw IoError(IoCode::Truncated, std::string("pnm: missing ") + what);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (errno != 0 || end != tok.c_str() + tok.size())
        throw IoError(IoCode::BadHeader, std::string("pnm: bad ") + what + " '" + tok + "'");
    return static_cast<int>(v);
}

}  // namespace

FrameImage load_frame(const std::filesystem::path& path) {
    auto in = open_in(path);
    char magic[2];
    if (!in.read(magic, 2)) throw IoError(IoCode::Truncated, "pnm: empty file " + path.string());
    int channels;
    if (magic[0] == 'P' && magic[1] == '5') {
        channels = 1;
    } else if (magic[0] == 'P' && magic[1] == '6') {
        channels = 3;
    } else {
        throw IoError(IoCode::BadMagic, "pnm: bad magic in " + path.string());
    }
    FrameImage img;
    img.channels = channels;
    img.width = pnm_int(in, "width");
    img.height = pnm_int(in, "height");
    if (img.width < 8 || img.height < 8)
        throw IoError(IoCode::BadDims, "pnm: dimensions below 8x8 in " + path.string());
    const int maxval = pnm_int(in, "maxval");
    if (maxval != 255) throw IoError(IoCode::BadMaxval, "pnm: maxval must be 255 in " + path.string());
    // single whitespace byte already consumed by the token scan
    img.data.resize(img.sample_count());
    if (!in.read(reinterpret_cast<char*>(img.data.data()),
                 static_cast<std::streamsize>(img.data.size())))
        throw IoError(IoCode::Truncated, "pnm: truncated payload in " + path.string());
    return img;
}

void store_frame(const FrameImage& img, const std::filesystem::path& path) {
    if (img.channels != 1 && img.channels != 3)
        throw IoError(IoCode::BadDims, "pnm: channels must be 1 or 3");
    if (img.width < 8 || img.height < 8) throw IoError(IoCode::BadDims, "pnm: dimensions below 8x8");
    if (img.data.size() != img.sample_count())
        throw IoError(IoCode::SizeMismatch, "pnm: payload size mismatch");
    std::string buf;
    buf += img.channels == 1 ? "P5\n" : "P6\n";
    buf += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    buf.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    auto out = open_out(path);
    write_all(out, buf, path);
}

namespace {
constexpr float kFloMagic = 202021.25f;
constexpr int kMaxFlowDim = 1 << 20;
}  // namespace

FlowField load_flow(const std::filesystem::path& path) {
    auto in = open_in(path);
    ByteReader r(in, "flo");
    if (r.f32() != kFloMagic) throw IoError(IoCode::BadMagic, "flo: wrong magic in " + path.string());
    const int32_t w = r.i32();
    const int32_t h = r.i32();
    if (w <= 0 || h <= 0 || w > kMaxFlowDim || h > kMaxFlowDim)
        throw IoError(IoCode::BadDims, "flo: bad dimensions in " + path.string());
    FlowField f;
    f.width = w;
    f.height = h;
    const size_t n = static_cast<size_t>(w) * h;
    f.u.resize(n);
    f.v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        f.u[i] = r.f32();
        f.v[i] = r.f32();
    }
    return f;
}

void store_flow(const FlowField& flow, const std::filesystem::path& path) {
    const size_t n = static_cast<size_t>(flow.width) * flow.height;
    if (flow.width <= 0 || flow.height <= 0) throw IoError(IoCode::BadDims, "flo: bad dimensions");
    if (flow.u.size() != n || flow.v.size() != n)
        throw IoError(IoCode::SizeMismatch, "flo: component size mismatch");
    std::string buf;
    buf.reserve(12 + n * 8);
    put_f32(buf, kFloMagic);
    put_u32(buf, static_cast<uint32_t>(flow.width));
    put_u32(buf, static_cast<uint32_t>(flow.height));
    for (size_t i = 0; i < n; ++i) {
        put_f32(buf, flow.u[i]);
        put_f32(buf, flow.v[i]);
    }
    auto out = open_out(path);
    write_all(out, buf, path);
}

TensorFile load_tensor(const std::filesystem::path& path) {
    auto in = open_in(path);
    char magic[4];
    if (!in.read(magic, 4)) throw IoError(IoCode::Truncated, "ptns: empty file " + path.string());
    if (std::memcmp(magic, "PTNS", 4) != 0)
        throw IoError(IoCode::BadMagic, "ptns: bad magic in " + path.string());
    ByteReader r(in, "ptns");
    const uint32_t rank = r.u32();
    if (rank < 1 || rank > 4) throw IoError(IoCode::BadDims, "ptns: rank out of [1,4] in " + path.string());
    TensorFile t;
    t.dims.resize(rank);
    size_t count = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        t.dims[i] = r.u32();
        if (t.dims[i] == 0) throw IoError(IoCode::BadDims, "ptns: zero extent in " + path.string());
        count *= t.dims[i];
    }
    t.data.resize(count);
    for (size_t i = 0; i < count; ++i) {
        try {
            t.data[i] = r.f32();
        } catch (const IoError&) {
            throw IoError(IoCode::SizeMismatch,
                          "ptns: payload shorter than declared dims in " + path.string());
        }
    }
    if (!r.at_eof())
        throw IoError(IoCode::SizeMismatch, "ptns: payload longer than declared dims in " + path.string());
    return t;
}

void store_tensor(const TensorFile& t, const std::filesystem::path& path) {
    if (t.rank() < 1 || t.rank() > 4) throw IoError(IoCode::BadDims, "ptns: rank out of [1,4]");
    if (t.data.size() != t.element_count())
        throw IoError(IoCode::SizeMismatch, "ptns: data length does not match dims");
    std::string buf;
    buf.reserve(8 + t.dims.size() * 4 + t.data.size() * 4);
    buf += "PTNS";
    put_u32(buf, static_cast<uint32_t>(t.rank()));
    for (uint32_t d : t.dims) put_u32(buf, d);
    for (float f : t.data) put_f32(buf, f);
    auto out = open_out(path);
    write_all(out, buf, path);
}

SignalSeries load_signal(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(IoCode::Truncated, "signal: empty file " + path.string());
    if (line != "index,value")
        throw IoError(IoCode::BadHeader, "signal: expected 'index,value' header in " + path.string());
    SignalSeries s;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(IoCode::BadNumber,
                          "signal: missing comma at line " + std::to_string(line_no));
        const std::string idx_str = line.substr(0, comma);
        const std::string val_str = line.substr(comma + 1);
        char* end = nullptr;
        errno = 0;
        const long long idx = std::strtoll(idx_str.c_str(), &end, 10);
        if (errno != 0 || end != idx_str.c_str() + idx_str.size() || idx_str.empty())
            throw IoError(IoCode::BadNumber, "signal: bad index at line " + std::to_string(line_no));
        errno = 0;
        const double val = std::strtod(val_str.c_str(), &end);
        if (errno != 0 || end != val_str.c_str() + val_str.size() || val_str.empty())
            throw IoError(IoCode::BadNumber, "signal: bad value at line " + std::to_string(line_no));
        if (!s.indices.empty() && idx <= s.indices.back())
            throw IoError(IoCode::NonMonotonic,
                          "signal: indices not strictly increasing at line " + std::to_string(line_no));
        s.indices.push_back(idx);
        s.values.push_back(val);
    }
    return s;
}

void store_signal(const SignalSeries& s, const std::filesystem::path& path) {
    if (s.indices.size() != s.values.size())
        throw IoError(IoCode::SizeMismatch, "signal: index/value length mismatch");
    for (size_t i = 1; i < s.indices.size(); ++i)
        if (s.indices[i] <= s.indices[i - 1])
            throw IoError(IoCode::NonMonotonic, "signal: indices not strictly increasing");
    std::string buf = "index,value\n";
    char tmp[64];
    for (size_t i = 0; i < s.indices.size(); ++i) {
        std::snprintf(tmp, sizeof(tmp), "%lld,%.17g\n", static_cast<long long>(s.indices[i]),
                      s.values[i]);
        buf += tmp;
    }
    auto out = open_out(path);
    write_all(out, buf, path);
}

TensorFile tensor_from_matrix(const std::vector<std::vector<double>>& rows) {
    TensorFile t;
    const uint32_t r = static_cast<uint32_t>(rows.size());
    const uint32_t c = r > 0 ? static_cast<uint32_t>(rows[0].size()) : 0;
    t.dims = {r, c};
    t.data.reserve(static_cast<size_t>(r) * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw IoError(IoCode::SizeMismatch, "tensor_from_matrix: ragged rows");
        for (double v : row) t.data.push_back(static_cast<float>(v));
    }
    return t;
}

std::vector<std::vector<double>> matrix_from_tensor(const TensorFile& t) {
    if (t.rank() != 2) throw IoError(IoCode::BadDims, "matrix_from_tensor: rank-2 tensor required");
    std::vector<std::vector<double>> rows(t.dims[0], std::vector<double>(t.dims[1]));
    size_t k = 0;
    for (auto& row : rows)
        for (auto& v : row) v = t.data[k++];
    return rows;
}

}  // namespace phaseparse
