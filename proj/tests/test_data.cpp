#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nanosr/data.hpp"
#include "nanosr/eval.hpp"
#include "nanosr/png_io.hpp"
#include "test_util.hpp"

using namespace nanosr;
namespace fs = std::filesystem;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("nanosr_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Direct evaluation of the cubic kernel formula (a = -0.5, half-pixel
// centers, clamped edges, antialiased downscale), 1D along one row.
double cubic_ref(double x) {
    constexpr double a = -0.5;
    x = std::fabs(x);
    if (x <= 1) return (a + 2) * x * x * x - (a + 3) * x * x + 1;
    if (x < 2) return a * x * x * x - 5 * a * x * x + 8 * a * x - 4 * a;
    return 0;
}

std::vector<double> resample_1d_ref(const std::vector<double>& src, int out_size) {
    const int in_size = static_cast<int>(src.size());
    const double scale = static_cast<double>(in_size) / out_size;
    const double kscale = std::max(1.0, scale);
    std::vector<double> out(out_size);
    for (int o = 0; o < out_size; ++o) {
        const double center = (o + 0.5) * scale - 0.5;
        double acc = 0, wsum = 0;
        for (int i = static_cast<int>(std::ceil(center - 2 * kscale));
             i <= static_cast<int>(std::floor(center + 2 * kscale)); ++i) {
            const double w = cubic_ref((i - center) / kscale) / kscale;
            acc += w * src[std::clamp(i, 0, in_size - 1)];
            wsum += w;
        }
        out[o] = acc / wsum;
    }
    return out;
}

}  // namespace

TEST_CASE("decode_image reads a solid red PNG") {
    fs::path dir = temp_dir("red");
    ImageU8 img;
    img.h = 4;
    img.w = 5;
    img.channels = 3;
    img.pix.assign(4 * 5 * 3, 0);
    for (int i = 0; i < 4 * 5; ++i) img.pix[i * 3] = 255;
    const std::string path = (dir / "red.png").string();
    png_write(path, img);
    Tensor t = data::decode_image(path);
    REQUIRE(t.c == 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) {
            CHECK(t.at(0, 0, y, x) == 1.0f);
            CHECK(t.at(0, 1, y, x) == 0.0f);
            CHECK(t.at(0, 2, y, x) == 0.0f);
        }
}

TEST_CASE("decode/encode round trip is lossless on 8-bit data") {
    fs::path dir = temp_dir("roundtrip");
    Rng rng(1);
    ImageU8 img;
    img.h = 7;
    img.w = 9;
    img.channels = 3;
    img.pix.resize(7 * 9 * 3);
    for (auto& p : img.pix) p = static_cast<uint8_t>(rng.next_int(256));
    const std::string p1 = (dir / "a.png").string();
    const std::string p2 = (dir / "b.png").string();
    png_write(p1, img);
    data::encode_image(data::decode_image(p1), p2);
    ImageU8 back = png_read(p2);
    CHECK(back.pix == img.pix);
}

TEST_CASE("decode_image matches a hand-written byte table") {
    fs::path dir = temp_dir("bytes");
    // 4x4 gradient fixture: pixel (y, x) has bytes (16x+y, 32y, 255-16x)
    ImageU8 img;
    img.h = 4;
    img.w = 4;
    img.channels = 3;
    img.pix.resize(48);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            img.pix[(y * 4 + x) * 3 + 0] = static_cast<uint8_t>(16 * x + y);
            img.pix[(y * 4 + x) * 3 + 1] = static_cast<uint8_t>(32 * y);
            img.pix[(y * 4 + x) * 3 + 2] = static_cast<uint8_t>(255 - 16 * x);
        }
    const std::string path = (dir / "grad.png").string();
    png_write(path, img);
    Tensor t = data::decode_image(path);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            CHECK(t.at(0, 0, y, x) == static_cast<float>(16 * x + y) / 255.0f);
            CHECK(t.at(0, 1, y, x) == static_cast<float>(32 * y) / 255.0f);
            CHECK(t.at(0, 2, y, x) == static_cast<float>(255 - 16 * x) / 255.0f);
        }
}

TEST_CASE("decode_image rejects unreadable and non-RGB files") {
    fs::path dir = temp_dir("reject");
    CHECK_THROWS_AS(data::decode_image((dir / "missing.png").string()), std::runtime_error);

    ImageU8 gray;
    gray.h = 3;
    gray.w = 3;
    gray.channels = 1;
    gray.pix.assign(9, 128);
    const std::string gpath = (dir / "gray.png").string();
    png_write(gpath, gray);
    CHECK_THROWS_WITH_AS(data::decode_image(gpath), doctest::Contains("non-RGB"),
                         std::runtime_error);

    const std::string garbage = (dir / "garbage.png").string();
    std::ofstream(garbage) << "not a png";
    CHECK_THROWS_AS(data::decode_image(garbage), std::runtime_error);
}

TEST_CASE("bicubic_resize basics") {
    Tensor c = Tensor::full(1, 3, 8, 8, 0.63f);
    Tensor down = data::bicubic_resize(c, 2, 2);
    for (float v : down.v) CHECK(v == doctest::Approx(0.63f).epsilon(1e-6));

    Rng rng(3);
    Tensor x = random_tensor<float>(1, 3, 5, 6, rng, 0.0f, 1.0f);
    CHECK(data::bicubic_resize(x, 5, 6) == x);  // identity size
}

TEST_CASE("bicubic_resize matches the direct kernel-formula oracle") {
    // 8x8 ramp downscaled to 2x2
    Tensor ramp(1, 1, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(0, 0, y, x) = (y * 8 + x) / 64.0f;
    Tensor got = data::bicubic_resize(ramp, 2, 2);

    // separable reference: rows then columns in double precision
    std::vector<std::vector<double>> rows(8);
    for (int y = 0; y < 8; ++y) {
        std::vector<double> row(8);
        for (int x = 0; x < 8; ++x) row[x] = ramp.at(0, 0, y, x);
        rows[y] = resample_1d_ref(row, 2);
    }
    for (int ox = 0; ox < 2; ++ox) {
        std::vector<double> col(8);
        for (int y = 0; y < 8; ++y) col[y] = rows[y][ox];
        std::vector<double> out = resample_1d_ref(col, 2);
        for (int oy = 0; oy < 2; ++oy)
            CHECK(got.at(0, 0, oy, ox) == doctest::Approx(out[oy]).epsilon(1e-6));
    }
}

TEST_CASE("make_lr divides dims by 4") {
    Tensor hr = Tensor::full(1, 3, 720, 1280, 0.5f);
    Tensor lr = data::make_lr(hr);
    CHECK(lr.h == 180);
    CHECK(lr.w == 320);
    for (float v : lr.v) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));
    CHECK_THROWS_AS(data::make_lr(Tensor(1, 3, 6, 6)), std::invalid_argument);
}

TEST_CASE("desk fixtures, scan, sampling, augmentation") {
    fs::path root = temp_dir("fixtures");
    data::FixtureSpec spec;
    spec.sequences = 6;
    spec.frames = 3;
    spec.height = 64;
    spec.width = 64;
    spec.seed = 5;
    data::make_desk_fixtures(root.string(), spec);

    data::DatasetIndex idx = data::scan_dataset(root.string(), true);
    CHECK(idx.frame_h == 64);
    CHECK(idx.frame_w == 64);
    CHECK(idx.sequences.size() == 6);
    CHECK(idx.split_of(data::Split::Train).size() == 4);
    CHECK(idx.split_of(data::Split::Val).size() == 1);
    CHECK(idx.split_of(data::Split::Test).size() == 1);

    // non-desk scan demands the 240/30/30 layout
    CHECK_THROWS_WITH_AS(data::scan_dataset(root.string(), false), doctest::Contains("240"),
                         std::runtime_error);

    SUBCASE("sampling is deterministic and aligned") {
        auto a = data::sample_patches(idx, 32, 8, 99);
        auto b = data::sample_patches(idx, 32, 8, 99);
        REQUIRE(a.size() == 8);
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].sequence == b[i].sequence);
            CHECK(a[i].frame == b[i].frame);
            CHECK(a[i].y == b[i].y);
            CHECK(a[i].x == b[i].x);
            CHECK(a[i].hr == b[i].hr);
            CHECK(a[i].y % 4 == 0);
            CHECK(a[i].lr.h == 8);
            CHECK(a[i].hr.h == 32);
        }
        CHECK_THROWS_AS(data::sample_patches(idx, 128, 1, 0), std::invalid_argument);

        // full-frame patch returns exactly the frame pair
        auto full = data::sample_patches(idx, 64, 2, 7);
        data::FrameCache cache;
        for (const auto& p : full) {
            for (const auto& seq : idx.sequences)
                if (seq.id == p.sequence && seq.split == data::Split::Train) {
                    CHECK(p.hr == cache.hr(seq, p.frame));
                    CHECK(p.lr == cache.lr(seq, p.frame));
                }
            CHECK(p.y == 0);
            CHECK(p.x == 0);
        }
    }

    SUBCASE("alignment: LR patches correlate with their own HR patch") {
        auto pairs = data::sample_patches(idx, 32, 100, 11);
        double aligned = 0.0, mismatched = 0.0;
        for (size_t i = 0; i < pairs.size(); ++i) {
            Tensor up = data::bicubic_resize(pairs[i].lr, 32, 32);
            aligned += eval::psnr(up, pairs[i].hr);
            mismatched += eval::psnr(up, pairs[(i + 37) % pairs.size()].hr);
        }
        CHECK(aligned / pairs.size() > mismatched / pairs.size());
    }

    SUBCASE("augmentation involutions and value range") {
        auto pairs = data::sample_patches(idx, 32, 4, 3);
        const data::PatchPair& p = pairs[0];
        data::PatchPair same = data::augment(p, false, false, 0);
        CHECK(same.hr == p.hr);
        data::PatchPair hh = data::augment(data::augment(p, true, false, 0), true, false, 0);
        CHECK(hh.hr == p.hr);  // double flip is the identity
        data::PatchPair r4 = p;
        for (int i = 0; i < 4; ++i) r4 = data::augment(r4, false, false, 1);
        CHECK(r4.hr == p.hr);  // bitwise
        CHECK(r4.lr == p.lr);
        data::PatchPair rr = data::augment(p, true, true, 3);
        for (float v : rr.hr.v) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }

    SUBCASE("bicubic round trip on the fixture content stays above the sanity floor") {
        data::FrameCache cache;
        const auto& seq = *idx.split_of(data::Split::Val)[0];
        const Tensor& hr = cache.hr(seq, 0);
        Tensor lr = data::make_lr(hr);
        Tensor up = data::bicubic_resize(lr, hr.h, hr.w);
        CHECK(eval::psnr(up, hr) >= 20.0);
    }
}
