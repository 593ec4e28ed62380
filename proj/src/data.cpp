#include "nanosr/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "nanosr/png_io.hpp"

namespace fs = std::filesystem;

namespace nanosr::data {

Tensor decode_image(const std::string& path) {
    ImageU8 img = png_read(path);
    Tensor t(1, 3, img.h, img.w);
    for (int c = 0; c < 3; ++c) {
        float* plane = t.plane(0, c);
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                plane[static_cast<size_t>(y) * img.w + x] =
                    img.pix[(static_cast<size_t>(y) * img.w + x) * 3 + c] / 255.0f;
    }
    return t;
}

void encode_image(const Tensor& img, const std::string& path) {
    if (img.n != 1 || img.c != 3)
        throw std::invalid_argument("encode_image: expected a (1,3,h,w) tensor, got " +
                                    img.dims_str());
    ImageU8 out;
    out.h = img.h;
    out.w = img.w;
    out.channels = 3;
    out.pix.resize(static_cast<size_t>(img.h) * img.w * 3);
    for (int c = 0; c < 3; ++c) {
        const float* plane = img.plane(0, c);
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                const float v = std::clamp(plane[static_cast<size_t>(y) * img.w + x], 0.0f, 1.0f);
                out.pix[(static_cast<size_t>(y) * img.w + x) * 3 + c] =
                    static_cast<uint8_t>(std::lround(v * 255.0f));
            }
    }
    png_write(path, out);
}

// ---------------------------------------------------------------------------
// Bicubic resampling.

namespace {

double cubic(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    return 0.0;
}

struct Tap {
    int first = 0;                 // first source index (clamped later)
    std::vector<double> weights;   // normalized to sum 1
};

std::vector<Tap> cubic_taps(int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    const double kscale = std::max(1.0, scale);  // widen when downscaling
    const double support = 2.0 * kscale;
    std::vector<Tap> taps(out_size);
    for (int o = 0; o < out_size; ++o) {
        const double center = (o + 0.5) * scale - 0.5;
        const int lo = static_cast<int>(std::ceil(center - support));
        const int hi = static_cast<int>(std::floor(center + support));
        Tap tap;
        tap.first = lo;
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = cubic((i - center) / kscale) / kscale;
            tap.weights.push_back(w);
            sum += w;
        }
        for (double& w : tap.weights) w /= sum;
        taps[o] = std::move(tap);
    }
    return taps;
}

}  // namespace

Tensor bicubic_resize(const Tensor& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic_resize: output dims >= 1");
    if (img.h < 1 || img.w < 1) throw std::invalid_argument("bicubic_resize: empty input");
    if (out_h == img.h && out_w == img.w) return img;

    const auto tx = cubic_taps(img.w, out_w);
    const auto ty = cubic_taps(img.h, out_h);

    // Horizontal pass, then vertical; accumulation in double.
    Tensor mid(img.n, img.c, img.h, out_w);
    for (int n = 0; n < img.n; ++n)
        for (int c = 0; c < img.c; ++c)
            for (int y = 0; y < img.h; ++y) {
                const float* src = img.row(n, c, y);
                float* dst = mid.row(n, c, y);
                for (int o = 0; o < out_w; ++o) {
                    const Tap& tap = tx[o];
                    double acc = 0.0;
                    for (size_t k = 0; k < tap.weights.size(); ++k) {
                        const int i = std::clamp(tap.first + static_cast<int>(k), 0, img.w - 1);
                        acc += tap.weights[k] * src[i];
                    }
                    dst[o] = static_cast<float>(acc);
                }
            }
    Tensor out(img.n, img.c, out_h, out_w);
    for (int n = 0; n < img.n; ++n)
        for (int c = 0; c < img.c; ++c)
            for (int o = 0; o < out_h; ++o) {
                const Tap& tap = ty[o];
                float* dst = out.row(n, c, o);
                for (int x = 0; x < out_w; ++x) {
                    double acc = 0.0;
                    for (size_t k = 0; k < tap.weights.size(); ++k) {
                        const int i = std::clamp(tap.first + static_cast<int>(k), 0, img.h - 1);
                        acc += tap.weights[k] * mid.at(n, c, i, x);
                    }
                    dst[x] = static_cast<float>(acc);
                }
            }
    return out;
}

Tensor make_lr(const Tensor& hr) {
    if (hr.h % 4 != 0 || hr.w % 4 != 0)
        throw std::invalid_argument("make_lr: dims " + hr.dims_str() + " not divisible by 4");
    return bicubic_resize(hr, hr.h / 4, hr.w / 4);
}

// ---------------------------------------------------------------------------
// Dataset index.

std::vector<const SequenceEntry*> DatasetIndex::split_of(Split s) const {
    std::vector<const SequenceEntry*> out;
    for (const auto& seq : sequences)
        if (seq.split == s) out.push_back(&seq);
    return out;
}

std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08d.png", index);
    return buf;
}

std::string frame_path(const SequenceEntry& seq, int frame, bool lr) {
    return (fs::path(lr ? seq.lr_dir : seq.hr_dir) / frame_name(frame)).string();
}

DatasetIndex scan_dataset(const std::string& root, bool desk_mode) {
    DatasetIndex idx;
    idx.root = root;
    const std::pair<const char*, Split> splits[] = {
        {"train", Split::Train}, {"val", Split::Val}, {"test", Split::Test}};
    for (const auto& [name, split] : splits) {
        const fs::path hr_root = fs::path(root) / name;
        const fs::path lr_root = fs::path(root) / (std::string(name) + "_lr");
        if (!fs::is_directory(hr_root)) continue;
        std::vector<std::string> seq_ids;
        for (const auto& e : fs::directory_iterator(hr_root))
            if (e.is_directory()) seq_ids.push_back(e.path().filename().string());
        std::sort(seq_ids.begin(), seq_ids.end());
        for (const auto& sid : seq_ids) {
            SequenceEntry seq;
            seq.id = sid;
            seq.split = split;
            seq.hr_dir = (hr_root / sid).string();
            seq.lr_dir = (lr_root / sid).string();
            if (!fs::is_directory(seq.lr_dir))
                throw std::runtime_error("dataset: missing LR directory " + seq.lr_dir);
            while (fs::exists(frame_path(seq, seq.frames, false))) ++seq.frames;
            if (seq.frames == 0)
                throw std::runtime_error("dataset: sequence " + seq.hr_dir + " has no frames");
            for (int f = 0; f < seq.frames; ++f) {
                auto [hh, hw] = png_dims(frame_path(seq, f, false));
                if (idx.frame_h == 0) {
                    if (hh % 4 != 0 || hw % 4 != 0)
                        throw std::runtime_error("dataset: frame size not divisible by 4");
                    idx.frame_h = hh;
                    idx.frame_w = hw;
                } else if (hh != idx.frame_h || hw != idx.frame_w) {
                    throw std::runtime_error("dataset: inconsistent frame size in " + seq.hr_dir);
                }
                if (!fs::exists(frame_path(seq, f, true)))
                    throw std::runtime_error("dataset: missing LR frame for " +
                                             frame_path(seq, f, false));
                auto [lh, lw] = png_dims(frame_path(seq, f, true));
                if (lh != idx.frame_h / 4 || lw != idx.frame_w / 4)
                    throw std::runtime_error("dataset: LR frame " + frame_path(seq, f, true) +
                                             " is not exactly (h/4, w/4)");
            }
            idx.sequences.push_back(std::move(seq));
        }
    }
    if (!desk_mode) {
        const size_t train = idx.split_of(Split::Train).size();
        const size_t val = idx.split_of(Split::Val).size();
        const size_t test = idx.split_of(Split::Test).size();
        if (train != 240 || val != 30 || test != 30)
            throw std::runtime_error(
                "dataset: expected the 240/30/30 sequence layout, found " +
                std::to_string(train) + "/" + std::to_string(val) + "/" + std::to_string(test) +
                " (use desk mode for partial datasets)");
    }
    if (idx.sequences.empty()) throw std::runtime_error("dataset: nothing found under " + root);
    return idx;
}

const Tensor& FrameCache::get(const SequenceEntry& seq, int frame, bool lr) {
    const std::string key = frame_path(seq, frame, lr);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    if (map_.size() >= capacity_) {
        map_.erase(order_.front());
        order_.pop_front();
    }
    auto [ins, ok] = map_.emplace(key, decode_image(key));
    order_.push_back(key);
    return ins->second;
}

// ---------------------------------------------------------------------------
// Patch sampling and augmentation.

Tensor crop(const Tensor& t, int y, int x, int h, int w) {
    if (y < 0 || x < 0 || y + h > t.h || x + w > t.w)
        throw std::invalid_argument("crop: window out of bounds");
    Tensor out(t.n, t.c, h, w);
    for (int n = 0; n < t.n; ++n)
        for (int c = 0; c < t.c; ++c)
            for (int yy = 0; yy < h; ++yy)
                std::copy_n(t.row(n, c, y + yy) + x, w, out.row(n, c, yy));
    return out;
}

std::vector<PatchPair> sample_patches(const DatasetIndex& idx, FrameCache& cache, int patch,
                                      int count, uint64_t seed) {
    if (patch % 4 != 0) throw std::invalid_argument("sample_patches: patch not divisible by 4");
    if (patch > idx.frame_h || patch > idx.frame_w)
        throw std::invalid_argument("sample_patches: patch " + std::to_string(patch) +
                                    " larger than frame " + std::to_string(idx.frame_h) + "x" +
                                    std::to_string(idx.frame_w));
    const auto train = idx.split_of(Split::Train);
    if (train.empty()) throw std::invalid_argument("sample_patches: no train sequences");

    Rng rng(mix_seed(seed, 0x70617463));
    const int lp = patch / 4;
    const int lh = idx.frame_h / 4, lw = idx.frame_w / 4;
    std::vector<PatchPair> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const SequenceEntry& seq = *train[rng.next_int(static_cast<int>(train.size()))];
        const int frame = rng.next_int(seq.frames);
        const int ly = rng.next_int(lh - lp + 1);
        const int lx = rng.next_int(lw - lp + 1);
        PatchPair pair;
        pair.sequence = seq.id;
        pair.frame = frame;
        pair.y = ly * 4;
        pair.x = lx * 4;
        pair.hr = crop(cache.hr(seq, frame), pair.y, pair.x, patch, patch);
        pair.lr = crop(cache.lr(seq, frame), ly, lx, lp, lp);
        out.push_back(std::move(pair));
    }
    return out;
}

std::vector<PatchPair> sample_patches(const DatasetIndex& idx, int patch, int count,
                                      uint64_t seed) {
    FrameCache cache;
    return sample_patches(idx, cache, patch, count, seed);
}

Tensor flip_horizontal(const Tensor& t) {
    Tensor out(t.n, t.c, t.h, t.w);
    for (int n = 0; n < t.n; ++n)
        for (int c = 0; c < t.c; ++c)
            for (int y = 0; y < t.h; ++y) {
                const float* src = t.row(n, c, y);
                float* dst = out.row(n, c, y);
                for (int x = 0; x < t.w; ++x) dst[x] = src[t.w - 1 - x];
            }
    return out;
}

Tensor flip_vertical(const Tensor& t) {
    Tensor out(t.n, t.c, t.h, t.w);
    for (int n = 0; n < t.n; ++n)
        for (int c = 0; c < t.c; ++c)
            for (int y = 0; y < t.h; ++y)
                std::copy_n(t.row(n, c, t.h - 1 - y), t.w, out.row(n, c, y));
    return out;
}

Tensor rotate90(const Tensor& t, int quarter_turns) {
    int q = ((quarter_turns % 4) + 4) % 4;
    Tensor cur = t;
    for (int k = 0; k < q; ++k) {
        Tensor next(cur.n, cur.c, cur.w, cur.h);  // clockwise
        for (int n = 0; n < cur.n; ++n)
            for (int c = 0; c < cur.c; ++c)
                for (int y = 0; y < cur.h; ++y) {
                    const float* src = cur.row(n, c, y);
                    for (int x = 0; x < cur.w; ++x) next.at(n, c, x, cur.h - 1 - y) = src[x];
                }
        cur = std::move(next);
    }
    return cur;
}

PatchPair augment(const PatchPair& pair, bool flip_h, bool flip_v, int rot90) {
    PatchPair out = pair;
    if (flip_h) {
        out.lr = flip_horizontal(out.lr);
        out.hr = flip_horizontal(out.hr);
    }
    if (flip_v) {
        out.lr = flip_vertical(out.lr);
        out.hr = flip_vertical(out.hr);
    }
    if (rot90 % 4 != 0) {
        out.lr = rotate90(out.lr, rot90);
        out.hr = rotate90(out.hr, rot90);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Desk fixtures.

namespace {

struct Wave {
    double ux, uy;      // direction / wavelength
    double phase;
    double speed;       // phase drift per frame
    double amp;
    double gain[3];     // per-channel weight
};

Tensor synth_frame(int h, int w, int t, double gx, double gy, double base[3],
                   const std::vector<Wave>& waves) {
    Tensor img(1, 3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = gx * x / w + gy * y / h;
            double s[3] = {base[0] + v, base[1] + v, base[2] + v};
            for (const auto& wv : waves) {
                const double phase = 2.0 * 3.14159265358979323846 *
                                         (x * wv.ux + y * wv.uy) +
                                     wv.phase + t * wv.speed;
                const double val = wv.amp * std::sin(phase);
                for (int c = 0; c < 3; ++c) s[c] += wv.gain[c] * val;
            }
            for (int c = 0; c < 3; ++c)
                img.at(0, c, y, x) = static_cast<float>(std::clamp(s[c], 0.0, 1.0));
        }
    return img;
}

}  // namespace

void make_desk_fixtures(const std::string& root, const FixtureSpec& spec) {
    if (spec.height % 4 != 0 || spec.width % 4 != 0)
        throw std::invalid_argument("make_desk_fixtures: frame size must be divisible by 4");
    const int n_train = std::max(1, spec.sequences * 7 / 10);
    const int n_val = std::max(1, (spec.sequences - n_train) / 2);

    int seq_no = 0;
    for (int s = 0; s < spec.sequences; ++s, ++seq_no) {
        const char* split = s < n_train ? "train" : (s < n_train + n_val ? "val" : "test");
        char sid[8];
        std::snprintf(sid, sizeof(sid), "%03d", s);
        const fs::path hr_dir = fs::path(root) / split / sid;
        const fs::path lr_dir = fs::path(root) / (std::string(split) + "_lr") / sid;
        fs::create_directories(hr_dir);
        fs::create_directories(lr_dir);

        Rng rng(mix_seed(spec.seed, static_cast<uint64_t>(s)));
        double base[3];
        for (double& b : base) b = rng.uniform(0.35, 0.55);
        const double gx = rng.uniform(-0.25, 0.25), gy = rng.uniform(-0.25, 0.25);
        // Dense orientation coverage so train and val sequences share texture
        // statistics: a few smooth waves plus many mid-frequency ones in the
        // band where bicubic upscaling loses the most energy (but which the
        // x4 downsample still preserves).
        std::vector<Wave> waves;
        for (int k = 0; k < 18; ++k) {
            Wave wv;
            const bool smooth = k < 4;
            const double wavelength =
                smooth ? rng.uniform(20.0, 44.0) : rng.uniform(8.5, 16.0);
            const double angle = rng.uniform(0.0, 3.14159265358979323846);
            wv.ux = std::cos(angle) / wavelength;
            wv.uy = std::sin(angle) / wavelength;
            wv.phase = rng.uniform(0.0, 6.28318530717958647692);
            wv.speed = rng.uniform(-0.9, 0.9);
            wv.amp = smooth ? rng.uniform(0.04, 0.08) : rng.uniform(0.05, 0.11);
            for (double& gain : wv.gain) gain = rng.uniform(0.5, 1.0);
            waves.push_back(wv);
        }

        for (int f = 0; f < spec.frames; ++f) {
            Tensor hr = synth_frame(spec.height, spec.width, f, gx, gy, base, waves);
            const std::string hr_path = (hr_dir / frame_name(f)).string();
            encode_image(hr, hr_path);
            Tensor decoded = decode_image(hr_path);  // quantized HR, as a real pipeline sees it
            encode_image(make_lr(decoded), (lr_dir / frame_name(f)).string());
        }
    }
}

}  // namespace nanosr::data
