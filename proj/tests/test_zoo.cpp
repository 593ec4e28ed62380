#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "nanosr/serialize.hpp"
#include "nanosr/zoo.hpp"
#include "test_util.hpp"

using namespace nanosr;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

// Independent scalar graph interpreter: every op re-implemented with plain
// loops (convs via the quadruple-loop oracle), no shared kernel code paths.
Tensor oracle_eval_op(const LayerNode& node, const std::map<std::string, Tensor>& env);

Tensor oracle_branch(const Tensor& x, const Branch& br, int c_out) {
    using testutil::conv_oracle;
    switch (br.kind) {
        case Branch::Kind::SingleConv:
            return conv_oracle(x, br.conv);
        case Branch::Kind::ExpandThenConv:
            return conv_oracle(conv_oracle(x, br.expand), br.conv);
        case Branch::Kind::ExpandThenEdge: {
            Tensor e = conv_oracle(x, br.expand);
            Tensor d = conv_oracle(e, edge_kernel(br.edge, c_out));
            for (int n = 0; n < d.n; ++n)
                for (int c = 0; c < d.c; ++c)
                    for (int y = 0; y < d.h; ++y)
                        for (int xx = 0; xx < d.w; ++xx) d.at(n, c, y, xx) *= br.scale[c];
            return d;
        }
    }
    throw std::logic_error("unreachable");
}

Tensor oracle_eval_op(const LayerNode& node, const std::map<std::string, Tensor>& env) {
    const Tensor& x = env.at(node.inputs.at(0));
    switch (node.kind) {
        case OpKind::Conv:
            return testutil::conv_oracle(x, node.conv);
        case OpKind::TConv:
            return testutil::tconv_oracle(x, node.conv);
        case OpKind::Activation: {
            Tensor y = x;
            for (int n = 0; n < x.n; ++n)
                for (int c = 0; c < x.c; ++c) {
                    const float slope = node.act == ActKind::Relu        ? 0.0f
                                        : node.act == ActKind::LeakyRelu ? node.leaky_alpha
                                                                         : node.prelu_slope[c];
                    for (int yy = 0; yy < x.h; ++yy)
                        for (int xx = 0; xx < x.w; ++xx) {
                            float& v = y.at(n, c, yy, xx);
                            v = std::max(v, 0.0f) + slope * std::min(v, 0.0f);
                        }
                }
            return y;
        }
        case OpKind::PixelShuffle: {
            const int r = node.factor;
            if (!node.inverse) {
                Tensor y(x.n, x.c / (r * r), x.h * r, x.w * r);
                for (int n = 0; n < y.n; ++n)
                    for (int c = 0; c < y.c; ++c)
                        for (int yy = 0; yy < y.h; ++yy)
                            for (int xx = 0; xx < y.w; ++xx)
                                y.at(n, c, yy, xx) =
                                    x.at(n, c * r * r + (yy % r) * r + (xx % r), yy / r, xx / r);
                return y;
            }
            Tensor y(x.n, x.c * r * r, x.h / r, x.w / r);
            for (int n = 0; n < x.n; ++n)
                for (int c = 0; c < x.c; ++c)
                    for (int yy = 0; yy < x.h; ++yy)
                        for (int xx = 0; xx < x.w; ++xx)
                            y.at(n, c * r * r + (yy % r) * r + (xx % r), yy / r, xx / r) =
                                x.at(n, c, yy, xx);
            return y;
        }
        case OpKind::Bilinear: {
            const int s = node.factor;
            Tensor y(x.n, x.c, x.h * s, x.w * s);
            for (int n = 0; n < x.n; ++n)
                for (int c = 0; c < x.c; ++c)
                    for (int oy = 0; oy < y.h; ++oy)
                        for (int ox = 0; ox < y.w; ++ox) {
                            const double sy = (oy + 0.5) / s - 0.5, sx = (ox + 0.5) / s - 0.5;
                            const int y0 = static_cast<int>(std::floor(sy));
                            const int x0 = static_cast<int>(std::floor(sx));
                            const double fy = sy - y0, fx = sx - x0;
                            auto tap = [&](int yy, int xx) {
                                return x.at(n, c, std::clamp(yy, 0, x.h - 1),
                                            std::clamp(xx, 0, x.w - 1));
                            };
                            y.at(n, c, oy, ox) = static_cast<float>(
                                tap(y0, x0) * (1 - fy) * (1 - fx) +
                                tap(y0, x0 + 1) * (1 - fy) * fx +
                                tap(y0 + 1, x0) * fy * (1 - fx) + tap(y0 + 1, x0 + 1) * fy * fx);
                        }
            return y;
        }
        case OpKind::Concat: {
            int c_sum = 0;
            for (const auto& in : node.inputs) c_sum += env.at(in).c;
            const Tensor& first = env.at(node.inputs[0]);
            Tensor y(first.n, c_sum, first.h, first.w);
            int oc = 0;
            for (const auto& in : node.inputs) {
                const Tensor& t = env.at(in);
                for (int c = 0; c < t.c; ++c, ++oc)
                    for (int n = 0; n < t.n; ++n)
                        for (int yy = 0; yy < t.h; ++yy)
                            for (int xx = 0; xx < t.w; ++xx)
                                y.at(n, oc, yy, xx) = t.at(n, c, yy, xx);
            }
            return y;
        }
        case OpKind::SliceChannels: {
            Tensor y(x.n, node.c_end - node.c_begin, x.h, x.w);
            for (int n = 0; n < x.n; ++n)
                for (int c = node.c_begin; c < node.c_end; ++c)
                    for (int yy = 0; yy < x.h; ++yy)
                        for (int xx = 0; xx < x.w; ++xx)
                            y.at(n, c - node.c_begin, yy, xx) = x.at(n, c, yy, xx);
            return y;
        }
        case OpKind::ChannelRepeat: {
            Tensor y(x.n, x.c * node.factor, x.h, x.w);
            for (int n = 0; n < x.n; ++n)
                for (int c = 0; c < y.c; ++c)
                    for (int yy = 0; yy < x.h; ++yy)
                        for (int xx = 0; xx < x.w; ++xx)
                            y.at(n, c, yy, xx) = x.at(n, c / node.factor, yy, xx);
            return y;
        }
        case OpKind::Add: {
            Tensor y = x;
            const Tensor& b = env.at(node.inputs.at(1));
            for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += b.v[i];
            return y;
        }
        case OpKind::Clip: {
            Tensor y = x;
            for (auto& v : y.v) v = std::clamp(v, node.clip_lo, node.clip_hi);
            return y;
        }
        case OpKind::BranchBlock: {
            Tensor acc = oracle_branch(x, node.block.branches[0], node.block.c_out);
            for (size_t i = 1; i < node.block.branches.size(); ++i) {
                Tensor part = oracle_branch(x, node.block.branches[i], node.block.c_out);
                for (size_t k = 0; k < acc.v.size(); ++k) acc.v[k] += part.v[k];
            }
            return acc;
        }
        case OpKind::ChannelScale:
            break;
    }
    throw std::logic_error("unsupported op in oracle");
}

Tensor oracle_forward(const ModelGraph& g, const std::vector<Tensor>& frames,
                      const std::vector<Tensor>& states) {
    std::map<std::string, Tensor> env;
    for (size_t i = 0; i < frames.size(); ++i) env[g.input_slots[i]] = frames[i];
    for (size_t i = 0; i < states.size(); ++i) env[g.state_slots[i].name] = states[i];
    for (const auto& node : g.nodes) env[node.id] = oracle_eval_op(node, env);
    return env.at(g.output);
}

bool has_nan(const Tensor& t) {
    for (float v : t.v)
        if (!std::isfinite(v)) return true;
    return false;
}

}  // namespace

TEST_CASE("mvideosr structure and parameter count") {
    ModelGraph g = zoo::build_model("mvideosr");
    int convs = 0, prelus = 0, shuffles = 0;
    for (const auto& n : g.nodes) {
        convs += n.kind == OpKind::Conv;
        prelus += n.kind == OpKind::Activation && n.act == ActKind::PRelu;
        shuffles += n.kind == OpKind::PixelShuffle;
    }
    CHECK(convs == 4);
    CHECK(prelus == 1);
    CHECK(shuffles == 1);
    CHECK(g.find("conv4")->conv.weights.n == 48);
    CHECK(zoo::describe(g).param_count == 3474);
}

TEST_CASE("xjtu puts ReLU after layers 2 and 3 only") {
    ModelGraph g = zoo::build_model("xjtu");
    std::vector<std::string> relu_inputs;
    for (const auto& n : g.nodes)
        if (n.kind == OpKind::Activation) {
            CHECK(n.act == ActKind::Relu);
            relu_inputs.push_back(n.inputs[0]);
        }
    CHECK(relu_inputs == std::vector<std::string>{"conv2", "conv3"});
    const int chans[] = {16, 16, 16, 48};
    int i = 0;
    for (const auto& n : g.nodes)
        if (n.kind == OpKind::Conv) CHECK(n.conv.weights.n == chans[i++]);
}

TEST_CASE("unknown arch and inconsistent config are rejected") {
    CHECK_THROWS_AS(zoo::build_model("resnet"), std::invalid_argument);
    zoo::BuildConfig cfg;
    cfg.scale = 2;
    CHECK_THROWS_AS(zoo::build_model("xjtu", cfg), std::invalid_argument);
}

TEST_CASE("every zoo model maps (1,3,h,w) to (1,3,4h,4w)") {
    for (const auto& id : zoo::arch_ids()) {
        ModelGraph g = zoo::build_model(id);
        zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
        for (int h : {4, 8}) {
            const int w = h + 4;
            Rng rng(h);
            std::vector<Tensor> frames;
            for (size_t i = 0; i < g.input_slots.size(); ++i)
                frames.push_back(random_tensor<float>(1, 3, h, w, rng, 0.0f, 1.0f));
            ForwardResult r = run_graph(g, frames, zero_states(g, 1, h, w));
            CHECK(r.sr.n == 1);
            CHECK(r.sr.c == 3);
            CHECK(r.sr.h == 4 * h);
            CHECK(r.sr.w == 4 * w);
        }
    }
}

TEST_CASE("zoo forwards match the scalar interpreter oracle") {
    Rng rng(99);
    for (const auto& id : zoo::arch_ids()) {
        CAPTURE(id);
        ModelGraph g = zoo::build_model(id);
        zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
        std::vector<Tensor> frames;
        for (size_t i = 0; i < g.input_slots.size(); ++i)
            frames.push_back(random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f));
        std::vector<Tensor> states = zero_states(g, 1, 8, 8);
        Tensor got = run_graph(g, frames, states).sr;
        Tensor want = oracle_forward(g, frames, states);
        CHECK(max_abs_diff(got, want) <= 1e-5f);
    }
}

TEST_CASE("genmedia with a zeroed mix conv degrades to the anchor path") {
    ModelGraph g = zoo::build_model("genmedia");
    zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
    LayerNode* mix = g.find("mix");
    std::fill(mix->conv.weights.v.begin(), mix->conv.weights.v.end(), 0.0f);
    std::fill(mix->conv.bias.begin(), mix->conv.bias.end(), 0.0f);
    Rng rng(5);
    Tensor frame = random_tensor<float>(1, 3, 6, 6, rng, 0.0f, 1.0f);
    Tensor sr = forward_model(g, frame);
    // anchor-only output is the nearest-neighbor x4 upscale of the input
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < sr.h; ++y)
            for (int x = 0; x < sr.w; ++x)
                CHECK(sr.at(0, c, y, x) == frame.at(0, c, y / 4, x / 4));
}

TEST_CASE("models with a final clip emit values in [0,1] for wild inputs") {
    ModelGraph g = zoo::build_model("genmedia");
    zoo::init_weights(g, zoo::InitScheme::UniformFanIn, 3);
    Rng rng(6);
    Tensor frame = random_tensor<float>(1, 3, 6, 6, rng, -10.0f, 10.0f);
    Tensor sr = forward_model(g, frame);
    for (float v : sr.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("recurrent graphs run from zero state and reject bad windows") {
    ModelGraph g = zoo::build_model("team221b");
    zoo::init_weights(g, zoo::InitScheme::UniformFanIn, 7);
    Rng rng(8);
    std::vector<Tensor> window;
    for (int i = 0; i < 3; ++i) window.push_back(random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f));
    auto [sr, states] = forward_recurrent(g, window, zero_states(g, 1, 8, 8));
    CHECK(!has_nan(sr));
    REQUIRE(states.size() == 2);
    CHECK(states[0].c == 16);
    CHECK(!has_nan(states[0]));

    CHECK_THROWS_AS(forward_recurrent(g, {window[0]}, zero_states(g, 1, 8, 8)),
                    std::invalid_argument);  // window length
    auto bad_states = zero_states(g, 1, 8, 8);
    bad_states[0] = Tensor(1, 4, 8, 8);
    CHECK_THROWS_AS(forward_recurrent(g, window, bad_states), std::invalid_argument);
    CHECK_THROWS_AS(forward_model(g, window[0]), std::invalid_argument);
    CHECK_THROWS_AS(forward_recurrent(zoo::build_model("xjtu"), window, {}),
                    std::invalid_argument);
}

TEST_CASE("all-black window with zero-bias redcat stays black") {
    ModelGraph g = zoo::build_model("redcat");
    zoo::init_weights(g, zoo::InitScheme::UniformFanIn, 9);
    // biases are random under uniform init; zero them so black propagates
    for (auto& node : g.nodes)
        if (node.kind == OpKind::Conv) std::fill(node.conv.bias.begin(), node.conv.bias.end(), 0.0f);
    Tensor black(1, 3, 8, 8);
    auto [sr, states] = forward_recurrent(g, {black, black}, zero_states(g, 1, 8, 8));
    for (float v : sr.v) CHECK(v == 0.0f);  // bilinear skip of black stays black
}

TEST_CASE("step-by-step recurrence equals an unrolled interpreter") {
    for (const char* id : {"redcat", "team221b"}) {
        CAPTURE(id);
        ModelGraph g = zoo::build_model(id);
        zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
        Rng rng(10);
        std::vector<Tensor> frames;
        for (int t = 0; t < 5; ++t) frames.push_back(random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f));

        std::vector<Tensor> got = process_sequence(g, frames);

        // unrolled reference: explicit window/state chaining over the scalar
        // interpreter
        std::vector<Tensor> states = zero_states(g, 1, 8, 8);
        for (int t = 0; t < 5; ++t) {
            std::map<std::string, Tensor> env;
            std::vector<Tensor> window;
            for (const auto& slot : g.input_slots) {
                const int idx = std::clamp(t + slot_time_offset(slot), 0, 4);
                window.push_back(frames[idx]);
            }
            for (size_t i = 0; i < window.size(); ++i) env[g.input_slots[i]] = window[i];
            for (size_t i = 0; i < states.size(); ++i) env[g.state_slots[i].name] = states[i];
            for (const auto& node : g.nodes) env[node.id] = oracle_eval_op(node, env);
            Tensor want = env.at(g.output);
            CHECK(max_abs_diff(got[t], want) <= 1e-5f);
            std::vector<Tensor> next;
            for (const auto& slot : g.state_slots)
                for (const auto& [sname, nid] : g.state_updates)
                    if (sname == slot.name) next.push_back(env.at(nid));
            states = std::move(next);
        }
    }
}

TEST_CASE("forward_recurrent with zero state equals zero-constant state inputs") {
    ModelGraph g = zoo::build_model("redcat");
    zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
    Rng rng(11);
    Tensor a = random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    Tensor b = random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    auto [sr1, st1] = forward_recurrent(g, {a, b}, zero_states(g, 1, 8, 8));
    // run_graph with explicitly-constructed zero constants
    ForwardResult r = run_graph(g, {a, b}, {Tensor(1, 8, 8, 8)});
    CHECK(sr1 == r.sr);
}

TEST_CASE("repeat_weights_2x_to_4x geometry") {
    Rng rng(12);
    ConvParams w2;
    w2.weights = random_tensor<float>(12, 6, 3, 3, rng);
    w2.bias.resize(12);
    for (auto& b : w2.bias) b = rng.uniform_f(-0.2f, 0.2f);
    w2.stride = 1;
    w2.padding = 1;

    ConvParams w4 = zoo::repeat_weights_2x_to_4x(w2);
    CHECK(w4.weights.n == 48);
    CHECK(w4.weights.c == 6);
    CHECK(w4.bias.size() == 48);

    // pure index duplication: the multiset of distinct filter values survives
    std::vector<float> v2 = w2.weights.v, v4 = w4.weights.v;
    std::sort(v2.begin(), v2.end());
    std::sort(v4.begin(), v4.end());
    std::vector<float> distinct2, distinct4;
    std::unique_copy(v2.begin(), v2.end(), std::back_inserter(distinct2));
    std::unique_copy(v4.begin(), v4.end(), std::back_inserter(distinct4));
    CHECK(distinct2 == distinct4);

    CHECK_THROWS_AS(zoo::repeat_weights_2x_to_4x(w4), std::invalid_argument);  // 48 != 12
}

TEST_CASE("4x model after repetition is the nearest-neighbor 2x upscale of the 2x model") {
    zoo::BuildConfig cfg2;
    cfg2.scale = 2;
    ModelGraph g2 = zoo::build_model("mvideosr", cfg2);
    zoo::init_weights(g2, zoo::InitScheme::FixedForTest, 0);
    ModelGraph g4 = zoo::build_model("mvideosr");
    zoo::transfer_2x_to_4x(g2, g4);

    Tensor frame = Tensor::full(1, 3, 6, 6, 0.37f);  // constant input, evaluated not assumed
    Tensor out2 = forward_model(g2, frame);
    Tensor out4 = forward_model(g4, frame);
    REQUIRE(out4.h == 2 * out2.h);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out4.h; ++y)
            for (int x = 0; x < out4.w; ++x)
                CHECK(out4.at(0, c, y, x) == out2.at(0, c, y / 2, x / 2));  // bitwise
}

TEST_CASE("init_weights determinism and fixed counter sequence") {
    ModelGraph a = zoo::build_model("xjtu");
    ModelGraph b = zoo::build_model("xjtu");
    zoo::init_weights(a, zoo::InitScheme::UniformFanIn, 42);
    zoo::init_weights(b, zoo::InitScheme::UniformFanIn, 42);
    auto ta = graph_tensors(a), tb = graph_tensors(b);
    REQUIRE(ta.size() == tb.size());
    for (size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].data == tb[i].data);

    zoo::init_weights(a, zoo::InitScheme::FixedForTest, 0);
    auto fixed = graph_tensors(a);
    // documented counter sequence: v(k) = (((k*2654435761) mod 2^32 >> 8) / 2^24 - 0.5) * 0.25
    auto expect = [](uint32_t k) {
        const uint32_t u = k * 2654435761u;
        return ((u >> 8) * (1.0f / 16777216.0f) - 0.5f) * 0.25f;
    };
    uint32_t k = 0;
    for (const auto& t : fixed)
        for (float v : t.data) CHECK(v == expect(k++));
}

TEST_CASE("uniform-fan-in bound holds per layer") {
    ModelGraph g = zoo::build_model("boe");
    zoo::init_weights(g, zoo::InitScheme::UniformFanIn, 77);
    for (const auto& p : collect_params(g)) {
        if (p.kind == ParamKind::Slope || p.kind == ParamKind::Scale) continue;
        const float bound = 1.0f / std::sqrt(static_cast<float>(p.fan_in));
        float maxabs = 0.0f;
        for (size_t i = 0; i < p.size; ++i) maxabs = std::max(maxabs, std::abs(p.data[i]));
        CHECK(maxabs <= bound);
        if (p.size >= 100) CHECK(maxabs > 0.5f * bound);  // actually fills the range
    }
}

TEST_CASE("describe closed forms") {
    ModelGraph empty;
    CHECK(zoo::describe(empty).param_count == 0);
    CHECK(zoo::describe(empty).model_bytes == 12);  // header-only file

    zoo::BuildConfig cfg;
    cfg.ncut_width = 28;
    ModelGraph ncut = zoo::build_model("ncut", cfg);
    const long long c = 28;
    const long long expect = (c * 3 * 9 + c) + (c * c * 9 + c) + (48 * c * 9 + 48);
    CHECK(zoo::describe(ncut).param_count == expect);

    // card counts match describe for every architecture
    for (const auto& id : zoo::arch_ids()) {
        ModelGraph g = zoo::build_model(id);
        CHECK(zoo::describe(g).param_count == zoo::arch_card(id).param_count);
    }
}
