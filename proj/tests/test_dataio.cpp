#include <doctest.h>

#include <fstream>
#include <functional>

#include "phaseparse/dataio.hpp"
#include "phaseparse/rng.hpp"
#include "testutil.hpp"

using namespace phaseparse;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

IoCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const IoError& e) {
        return e.code;
    }
    FAIL("expected an IoError");
    return IoCode::OpenFailed;
}

}  // namespace

TEST_CASE("pgm: all-zero 8x8 image loads as 64 zero samples") {
    const auto dir = testutil::temp_dir("pgm_zero");
    write_bytes(dir / "z.pgm", std::string("P5\n8 8\n255\n") + std::string(64, '\0'));
    const FrameImage img = load_frame(dir / "z.pgm");
    CHECK(img.width == 8);
    CHECK(img.height == 8);
    CHECK(img.channels == 1);
    REQUIRE(img.data.size() == 64);
    for (uint8_t v : img.data) CHECK(v == 0);
}

TEST_CASE("pgm: store(load(f)) equals the canonical serialization") {
    const auto dir = testutil::temp_dir("pgm_canon");
    // messy but legal header: comment + extra whitespace
    std::string body(64, '\0');
    for (size_t i = 0; i < body.size(); ++i) body[i] = static_cast<char>(i * 3);
    write_bytes(dir / "messy.pgm", "P5 # a comment\n  8\t8 \n255\n" + body);
    const FrameImage img = load_frame(dir / "messy.pgm");
    store_frame(img, dir / "out.pgm");
    CHECK(read_bytes(dir / "out.pgm") == "P5\n8 8\n255\n" + body);
    // and storing again round-trips bit-exactly
    const FrameImage again = load_frame(dir / "out.pgm");
    CHECK(again == img);
}

TEST_CASE("pgm: error taxonomy") {
    const auto dir = testutil::temp_dir("pgm_err");
    write_bytes(dir / "bad_magic.pgm", std::string("P7\n8 8\n255\n") + std::string(64, '\0'));
    CHECK(code_of([&] { load_frame(dir / "bad_magic.pgm"); }) == IoCode::BadMagic);
    write_bytes(dir / "bad_maxval.pgm", std::string("P5\n8 8\n65535\n") + std::string(128, '\0'));
    CHECK(code_of([&] { load_frame(dir / "bad_maxval.pgm"); }) == IoCode::BadMaxval);
    write_bytes(dir / "trunc.pgm", std::string("P5\n8 8\n255\n") + std::string(10, '\0'));
    CHECK(code_of([&] { load_frame(dir / "trunc.pgm"); }) == IoCode::Truncated);
}

TEST_CASE("ppm: color roundtrip") {
    const auto dir = testutil::temp_dir("ppm");
    FrameImage img;
    img.width = 8;
    img.height = 8;
    img.channels = 3;
    img.data.resize(img.sample_count());
    Rng rng(7);
    for (auto& v : img.data) v = static_cast<uint8_t>(rng.uniform_int(256));
    store_frame(img, dir / "c.ppm");
    CHECK(load_frame(dir / "c.ppm") == img);
}

TEST_CASE("flo: 2x2 field writes 44 bytes and roundtrips") {
    const auto dir = testutil::temp_dir("flo");
    FlowField f = FlowField::zeros(2, 2);
    std::fill(f.u.begin(), f.u.end(), 1.0f);
    std::fill(f.v.begin(), f.v.end(), -1.0f);
    store_flow(f, dir / "f.flo");
    CHECK(std::filesystem::file_size(dir / "f.flo") == 44);  // 12 + 2*2*2*4
    CHECK(load_flow(dir / "f.flo") == f);
}

TEST_CASE("flo: wrong magic and bad dims rejected") {
    const auto dir = testutil::temp_dir("flo_err");
    std::string zero_magic(4, '\0');
    write_bytes(dir / "bad.flo", zero_magic + std::string(8, '\0'));
    CHECK(code_of([&] { load_flow(dir / "bad.flo"); }) == IoCode::BadMagic);

    FlowField f = FlowField::zeros(2, 2);
    store_flow(f, dir / "ok.flo");
    std::string bytes = read_bytes(dir / "ok.flo");
    bytes[4] = static_cast<char>(0xfe);  // width -> negative
    bytes[7] = static_cast<char>(0xff);
    write_bytes(dir / "dims.flo", bytes);
    CHECK(code_of([&] { load_flow(dir / "dims.flo"); }) == IoCode::BadDims);

    write_bytes(dir / "trunc.flo", read_bytes(dir / "ok.flo").substr(0, 20));
    CHECK(code_of([&] { load_flow(dir / "trunc.flo"); }) == IoCode::Truncated);
}

TEST_CASE("ptns: rank-1 size arithmetic and errors") {
    const auto dir = testutil::temp_dir("ptns");
    TensorFile t;
    t.dims = {3};
    t.data = {1.0f, 2.0f, 3.0f};
    store_tensor(t, dir / "t.ptns");
    CHECK(std::filesystem::file_size(dir / "t.ptns") == 24);  // 4 + 4 + 4 + 12
    CHECK(load_tensor(dir / "t.ptns") == t);

    write_bytes(dir / "magic.ptns", "QTNS" + std::string(20, '\0'));
    CHECK(code_of([&] { load_tensor(dir / "magic.ptns"); }) == IoCode::BadMagic);

    // declared 3x3 but only 8 payload values
    std::string buf = "PTNS";
    const auto le32 = [](uint32_t v) {
        std::string s(4, '\0');
        for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        return s;
    };
    buf += le32(2) + le32(3) + le32(3) + std::string(8 * 4, '\0');
    write_bytes(dir / "short.ptns", buf);
    CHECK(code_of([&] { load_tensor(dir / "short.ptns"); }) == IoCode::SizeMismatch);
}

TEST_CASE("signal: parsing, degenerate body, and monotonicity") {
    const auto dir = testutil::temp_dir("signal");
    write_bytes(dir / "s.csv", "index,value\n0,1.5\n1,-2.0\n");
    const SignalSeries s = load_signal(dir / "s.csv");
    REQUIRE(s.size() == 2);
    CHECK(s.indices[0] == 0);
    CHECK(s.values[0] == 1.5);
    CHECK(s.indices[1] == 1);
    CHECK(s.values[1] == -2.0);

    write_bytes(dir / "empty.csv", "index,value\n");
    CHECK(load_signal(dir / "empty.csv").size() == 0);

    write_bytes(dir / "dup.csv", "index,value\n0,1.0\n0,2.0\n");
    CHECK(code_of([&] { load_signal(dir / "dup.csv"); }) == IoCode::NonMonotonic);

    write_bytes(dir / "nan.csv", "index,value\n0,abc\n");
    CHECK(code_of([&] { load_signal(dir / "nan.csv"); }) == IoCode::BadNumber);
}

TEST_CASE("roundtrip property: randomized inputs for all four formats") {
    const auto dir = testutil::temp_dir("roundtrip");
    Rng rng(42);
    for (int rep = 0; rep < 30; ++rep) {
        const int w = 8 + static_cast<int>(rng.uniform_int(24));
        const int h = 8 + static_cast<int>(rng.uniform_int(24));

        FrameImage img;
        img.width = w;
        img.height = h;
        img.channels = rng.bernoulli(0.5) ? 1 : 3;
        img.data.resize(img.sample_count());
        for (auto& v : img.data) v = static_cast<uint8_t>(rng.uniform_int(256));
        store_frame(img, dir / "r.pgm");
        CHECK(load_frame(dir / "r.pgm") == img);

        FlowField f = FlowField::zeros(w, h);
        for (auto& v : f.u) v = static_cast<float>(rng.uniform(-100.0, 100.0));
        for (auto& v : f.v) v = static_cast<float>(rng.uniform(-100.0, 100.0));
        store_flow(f, dir / "r.flo");
        CHECK(load_flow(dir / "r.flo") == f);

        TensorFile t;
        const int rank = 1 + static_cast<int>(rng.uniform_int(4));
        size_t count = 1;
        for (int d = 0; d < rank; ++d) {
            t.dims.push_back(1 + static_cast<uint32_t>(rng.uniform_int(6)));
            count *= t.dims.back();
        }
        t.data.resize(count);
        for (auto& v : t.data) v = static_cast<float>(rng.normal(0.0, 10.0));
        store_tensor(t, dir / "r.ptns");
        CHECK(load_tensor(dir / "r.ptns") == t);

        SignalSeries s;
        int64_t idx = 0;
        for (int i = 0; i < 20; ++i) {
            idx += 1 + static_cast<int64_t>(rng.uniform_int(5));
            s.indices.push_back(idx);
            s.values.push_back(rng.normal(0.0, 1e6));
        }
        store_signal(s, dir / "r.csv");
        const SignalSeries back = load_signal(dir / "r.csv");
        REQUIRE(back.size() == s.size());
        for (size_t i = 0; i < s.size(); ++i) {
            CHECK(back.indices[i] == s.indices[i]);
            CHECK(back.values[i] == s.values[i]);  // %.17g round-trips doubles exactly
        }
    }
}
