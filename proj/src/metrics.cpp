#include "nanosr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace nanosr::eval {

double psnr(const Tensor& a, const Tensor& b, double max_val) {
    if (!a.same_dims(b))
        throw std::invalid_argument("psnr: shape mismatch " + a.dims_str() + " vs " +
                                    b.dims_str());
    if (a.empty()) throw std::invalid_argument("psnr: empty tensors");
    double acc = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - b.v[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / mse);
}

namespace {

// 11-tap Gaussian, sigma 1.5, normalized.
const std::vector<double>& ssim_window() {
    static const std::vector<double> win = [] {
        std::vector<double> w(11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double d = i - 5.0;
            w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += w[i];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return win;
}

// Separable valid-mode Gaussian blur of one channel held as doubles.
std::vector<double> blur_valid(const std::vector<double>& src, int h, int w) {
    const auto& win = ssim_window();
    const int oh = h - 10, ow = w - 10;
    std::vector<double> mid(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += win[k] * src[static_cast<size_t>(y) * w + x + k];
            mid[static_cast<size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += win[k] * mid[static_cast<size_t>(y + k) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b))
        throw std::invalid_argument("ssim: shape mismatch " + a.dims_str() + " vs " +
                                    b.dims_str());
    if (a.h < 11 || a.w < 11)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    constexpr double c1 = 0.01 * 0.01;  // (K1 * L)^2
    constexpr double c2 = 0.03 * 0.03;  // (K2 * L)^2
    const size_t plane = static_cast<size_t>(a.h) * a.w;

    double total = 0.0;
    long long count = 0;
    std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
    for (int n = 0; n < a.n; ++n)
        for (int c = 0; c < a.c; ++c) {
            const float* ap = a.plane(n, c);
            const float* bp = b.plane(n, c);
            for (size_t i = 0; i < plane; ++i) {
                pa[i] = ap[i];
                pb[i] = bp[i];
                paa[i] = pa[i] * pa[i];
                pbb[i] = pb[i] * pb[i];
                pab[i] = pa[i] * pb[i];
            }
            const auto mu_a = blur_valid(pa, a.h, a.w);
            const auto mu_b = blur_valid(pb, a.h, a.w);
            const auto s_aa = blur_valid(paa, a.h, a.w);
            const auto s_bb = blur_valid(pbb, a.h, a.w);
            const auto s_ab = blur_valid(pab, a.h, a.w);
            for (size_t i = 0; i < mu_a.size(); ++i) {
                const double var_a = s_aa[i] - mu_a[i] * mu_a[i];
                const double var_b = s_bb[i] - mu_b[i] * mu_b[i];
                const double cov = s_ab[i] - mu_a[i] * mu_b[i];
                const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
                const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) *
                                   (var_a + var_b + c2);
                total += num / den;
                ++count;
            }
        }
    return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// MAC counting via shape propagation.

namespace {

struct Shape {
    int c = 0, h = 0, w = 0;
};

long long conv_macs(const ConvParams& p, const Shape& in, Shape& out, bool transposed) {
    const Tensor& W = p.weights;
    if (!transposed) {
        out.c = W.n;
        out.h = (in.h + 2 * p.padding - W.h) / p.stride + 1;
        out.w = (in.w + 2 * p.padding - W.w) / p.stride + 1;
        return static_cast<long long>(W.h) * W.w * W.c * W.n * out.h * out.w;
    }
    out.c = W.c * p.groups;
    out.h = (in.h - 1) * p.stride + W.h - 2 * p.padding;
    out.w = (in.w - 1) * p.stride + W.w - 2 * p.padding;
    return static_cast<long long>(W.h) * W.w * (W.n / p.groups) * out.c * in.h * in.w;
}

}  // namespace

long long count_macs(const ModelGraph& g, int h, int w) {
    std::map<std::string, Shape> shapes;
    shapes["frame"] = {3, h, w};
    for (const auto& slot : g.input_slots) shapes[slot] = {3, h, w};
    for (const auto& slot : g.state_slots) shapes[slot.name] = {slot.channels, h, w};

    long long total = 0;
    for (const auto& node : g.nodes) {
        const Shape in = node.inputs.empty() ? Shape{} : shapes.at(node.inputs[0]);
        Shape out = in;
        switch (node.kind) {
            case OpKind::Conv:
                total += conv_macs(node.conv, in, out, false);
                break;
            case OpKind::TConv:
                total += conv_macs(node.conv, in, out, true);
                break;
            case OpKind::BranchBlock:
                for (const auto& br : node.block.branches) {
                    Shape tmp = in;
                    if (br.kind == Branch::Kind::SingleConv) {
                        total += conv_macs(br.conv, in, tmp, false);
                    } else {
                        Shape mid;
                        total += conv_macs(br.expand, in, mid, false);
                        if (br.kind == Branch::Kind::ExpandThenConv) {
                            total += conv_macs(br.conv, mid, tmp, false);
                        } else {
                            ConvParams dw = edge_kernel(br.edge, node.block.c_out);
                            total += conv_macs(dw, mid, tmp, false);
                        }
                    }
                    out = tmp;
                }
                break;
            case OpKind::PixelShuffle:
                if (node.inverse) {
                    out = {in.c * node.factor * node.factor, in.h / node.factor,
                           in.w / node.factor};
                } else {
                    out = {in.c / (node.factor * node.factor), in.h * node.factor,
                           in.w * node.factor};
                }
                break;
            case OpKind::Bilinear:
                out = {in.c, in.h * node.factor, in.w * node.factor};
                break;
            case OpKind::Concat: {
                out = shapes.at(node.inputs[0]);
                out.c = 0;
                for (const auto& name : node.inputs) out.c += shapes.at(name).c;
                break;
            }
            case OpKind::SliceChannels:
                out.c = node.c_end - node.c_begin;
                break;
            case OpKind::ChannelRepeat:
                out.c = in.c * node.factor;
                break;
            case OpKind::Activation:
            case OpKind::ChannelScale:
            case OpKind::Add:
            case OpKind::Clip:
                break;
        }
        shapes[node.id] = out;
    }
    return total;
}

double measure_runtime_ms(const ModelGraph& g, int h, int w, int warmup, int iters) {
    if (iters < 1) throw std::invalid_argument("measure_runtime_ms: iters must be >= 1");
    Rng rng(1234);
    auto random_frame = [&] {
        Tensor t(1, 3, h, w);
        for (auto& v : t.v) v = rng.uniform_f(0.0f, 1.0f);
        return t;
    };
    std::vector<Tensor> frames;
    for (size_t i = 0; i < g.input_slots.size(); ++i) frames.push_back(random_frame());
    std::vector<Tensor> states = zero_states(g, 1, h, w);

    std::vector<double> samples;
    samples.reserve(iters);
    for (int i = 0; i < warmup + iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        ForwardResult r = run_graph(g, frames, states);
        const auto t1 = std::chrono::steady_clock::now();
        if (i >= warmup)
            samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        (void)r;
    }
    std::sort(samples.begin(), samples.end());
    const size_t n = samples.size();
    return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

double challenge_score(double psnr_db, double power_w, double runtime_ms, bool enforce_runtime) {
    if (power_w < 0) throw std::invalid_argument("challenge_score: power must be >= 0");
    if (enforce_runtime && runtime_ms > 33.0) return 0.0;
    return 1.66 * psnr_db + 50.0 * (1.0 - power_w);
}

ScoreRecord make_score_record(const MetricsRecord& metrics, bool enforce_runtime) {
    ScoreRecord r;
    r.metrics = metrics;
    r.final_score =
        challenge_score(metrics.psnr, metrics.power_w, metrics.runtime_ms, enforce_runtime);
    return r;
}

std::vector<ScoreRecord> leaderboard(std::vector<ScoreRecord> records) {
    std::sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        return a.metrics.team < b.metrics.team;
    });
    return records;
}

}  // namespace nanosr::eval
