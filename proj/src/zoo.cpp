#include "nanosr/zoo.hpp"

#include <cmath>
#include <sstream>

#include "nanosr/serialize.hpp"

namespace nanosr::zoo {

namespace {

ConvParams make_conv(int c_in, int c_out, int k, int pad, int stride = 1, int groups = 1) {
    ConvParams p;
    p.weights = Tensor(c_out, c_in / groups, k, k);
    p.bias.assign(c_out, 0.0f);
    p.stride = stride;
    p.padding = pad;
    p.groups = groups;
    return p;
}

ConvParams make_tconv(int c_in, int c_out, int k, int stride) {
    ConvParams p;
    p.weights = Tensor(c_in, c_out, k, k);
    p.bias.assign(c_out, 0.0f);
    p.stride = stride;
    p.padding = 0;
    p.groups = 1;
    return p;
}

struct GraphBuilder {
    ModelGraph g;

    std::string conv(const std::string& id, const std::string& in, int c_in, int c_out, int k,
                     int groups = 1) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Conv;
        n.inputs = {in};
        n.conv = make_conv(c_in, c_out, k, k == 3 ? 1 : 0, 1, groups);
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string tconv(const std::string& id, const std::string& in, int c_in, int c_out, int k,
                      int stride) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::TConv;
        n.inputs = {in};
        n.conv = make_tconv(c_in, c_out, k, stride);
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string relu(const std::string& id, const std::string& in) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Activation;
        n.act = ActKind::Relu;
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string prelu(const std::string& id, const std::string& in, int channels) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Activation;
        n.act = ActKind::PRelu;
        n.prelu_slope.assign(channels, 0.25f);
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string shuffle(const std::string& id, const std::string& in, int r) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::PixelShuffle;
        n.factor = r;
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string bilinear(const std::string& id, const std::string& in, int scale) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Bilinear;
        n.factor = scale;
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string concat(const std::string& id, std::vector<std::string> inputs) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Concat;
        n.inputs = std::move(inputs);
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string slice(const std::string& id, const std::string& in, int c0, int c1) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::SliceChannels;
        n.c_begin = c0;
        n.c_end = c1;
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string repeat(const std::string& id, const std::string& in, int times) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::ChannelRepeat;
        n.factor = times;
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string add(const std::string& id, const std::string& a, const std::string& b) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Add;
        n.inputs = {a, b};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string clip(const std::string& id, const std::string& in, float lo, float hi) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::Clip;
        n.clip_lo = lo;
        n.clip_hi = hi;
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
    std::string block(const std::string& id, const std::string& in, BranchBlock b) {
        LayerNode n;
        n.id = id;
        n.kind = OpKind::BranchBlock;
        n.block = std::move(b);
        n.inputs = {in};
        g.nodes.push_back(std::move(n));
        return id;
    }
};

Branch branch_single(int c_in, int c_out, int k) {
    Branch b;
    b.kind = Branch::Kind::SingleConv;
    b.conv = make_conv(c_in, c_out, k, k == 3 ? 1 : 0);
    return b;
}

Branch branch_expand_conv(int c_in, int c_out) {
    Branch b;
    b.kind = Branch::Kind::ExpandThenConv;
    b.expand = make_conv(c_in, c_out, 1, 1);  // 1x1 applied with padding 1
    b.conv = make_conv(c_out, c_out, 3, 0);
    return b;
}

Branch branch_expand_edge(int c_in, int c_out, EdgeKind edge) {
    Branch b;
    b.kind = Branch::Kind::ExpandThenEdge;
    b.expand = make_conv(c_in, c_out, 1, 1);
    b.scale.assign(c_out, 1.0f);
    b.edge = edge;
    return b;
}

// Edge-oriented block: plain 3x3, expanded 3x3, and three fixed edge
// detectors behind learnable 1x1 expansions and per-channel scales.
BranchBlock ecb_block(int c_in, int c_out) {
    BranchBlock b;
    b.c_in = c_in;
    b.c_out = c_out;
    b.branches.push_back(branch_single(c_in, c_out, 3));
    b.branches.push_back(branch_expand_conv(c_in, c_out));
    b.branches.push_back(branch_expand_edge(c_in, c_out, EdgeKind::SobelX));
    b.branches.push_back(branch_expand_edge(c_in, c_out, EdgeKind::SobelY));
    b.branches.push_back(branch_expand_edge(c_in, c_out, EdgeKind::Laplacian));
    return b;
}

// Training-time pair used by mortar: 3x3 with a parallel 1x1.
BranchBlock conv_pair_block(int c_in, int c_out) {
    BranchBlock b;
    b.c_in = c_in;
    b.c_out = c_out;
    b.branches.push_back(branch_single(c_in, c_out, 3));
    b.branches.push_back(branch_single(c_in, c_out, 1));
    return b;
}

ModelGraph build_mvideosr(int scale) {
    GraphBuilder b;
    b.g.arch_id = "mvideosr";
    b.g.scale = scale;
    b.g.input_slots = {"frame"};
    b.conv("conv1", "frame", 3, 6, 3);
    b.conv("conv2", "conv1", 6, 6, 3);
    b.prelu("act2", "conv2", 6);
    b.conv("conv3", "act2", 6, 6, 3);
    b.conv("conv4", "conv3", 6, 3 * scale * scale, 3);
    b.g.output = b.shuffle("shuffle", "conv4", scale);
    b.g.feature_tap = "conv3";
    return b.g;
}

ModelGraph build_rcbsr() {
    GraphBuilder b;
    b.g.arch_id = "rcbsr";
    b.g.input_slots = {"frame"};
    b.conv("stem", "frame", 3, 16, 3);
    b.relu("stem_act", "stem");
    b.block("ecb", "stem_act", ecb_block(16, 16));
    b.relu("ecb_act", "ecb");
    b.conv("tail", "ecb_act", 16, 48, 3);
    b.g.output = b.shuffle("shuffle", "tail", 4);
    b.g.feature_tap = "ecb_act";
    return b.g;
}

ModelGraph build_fighter() {
    GraphBuilder b;
    b.g.arch_id = "fighter";
    b.g.input_slots = {"frame"};
    b.conv("dw1", "frame", 3, 3, 3, 3);
    b.conv("pw1", "dw1", 3, 8, 1);
    b.relu("act1", "pw1");
    b.conv("dw2", "act1", 8, 8, 3, 8);
    b.conv("pw2", "dw2", 8, 8, 1);
    b.relu("act2", "pw2");
    b.add("res", "act1", "act2");
    b.conv("conv_up", "res", 8, 48, 3);
    b.g.output = b.shuffle("shuffle", "conv_up", 4);
    b.g.feature_tap = "res";
    return b.g;
}

ModelGraph build_xjtu() {
    GraphBuilder b;
    b.g.arch_id = "xjtu";
    b.g.input_slots = {"frame"};
    b.conv("conv1", "frame", 3, 16, 3);
    b.conv("conv2", "conv1", 16, 16, 3);
    b.relu("act2", "conv2");
    b.conv("conv3", "act2", 16, 16, 3);
    b.relu("act3", "conv3");
    b.conv("conv4", "act3", 16, 48, 3);
    b.g.output = b.shuffle("shuffle", "conv4", 4);
    b.g.feature_tap = "act3";
    return b.g;
}

ModelGraph build_boe() {
    GraphBuilder b;
    b.g.arch_id = "boe";
    b.g.input_slots = {"frame"};
    b.conv("conv1", "frame", 3, 25, 3);
    b.relu("act1", "conv1");
    b.conv("conv2", "act1", 25, 25, 3);
    b.relu("act2", "conv2");
    b.conv("conv3", "act2", 25, 25, 3);
    b.relu("act3", "conv3");
    b.conv("conv4", "act3", 25, 25, 3);
    b.relu("act4", "conv4");
    b.conv("conv5", "act4", 25, 25, 3);
    b.conv("conv6", "conv5", 25, 25, 3);
    b.relu("act6", "conv6");
    b.g.output = b.tconv("up", "act6", 25, 3, 4, 4);
    b.g.feature_tap = "act6";  // distillation tap, 25 channels
    return b.g;
}

ModelGraph build_genmedia() {
    GraphBuilder b;
    b.g.arch_id = "genmedia";
    b.g.input_slots = {"frame"};
    b.conv("conv1", "frame", 3, 28, 3);
    b.relu("act1", "conv1");
    b.conv("conv2", "act1", 28, 28, 3);
    b.relu("act2", "conv2");
    b.conv("conv3", "act2", 28, 28, 3);
    b.relu("act3", "conv3");
    b.conv("conv4", "act3", 28, 48, 3);
    b.repeat("anchor", "frame", 16);
    b.concat("cat", {"conv4", "anchor"});
    b.conv("mix", "cat", 96, 48, 1);
    b.add("skip", "mix", "anchor");
    b.clip("clipped", "skip", 0.0f, 1.0f);
    b.g.output = b.shuffle("shuffle", "clipped", 4);
    b.g.feature_tap = "conv4";
    return b.g;
}

ModelGraph build_ncut(int width) {
    GraphBuilder b;
    b.g.arch_id = "ncut";
    b.g.input_slots = {"frame"};
    b.conv("conv1", "frame", 3, width, 3);
    b.relu("act1", "conv1");
    b.conv("conv2", "act1", width, width, 3);
    b.relu("act2", "conv2");
    b.conv("conv3", "act2", width, 48, 3);
    b.g.output = b.shuffle("shuffle", "conv3", 4);
    b.g.feature_tap = "act2";
    return b.g;
}

ModelGraph build_mortar() {
    GraphBuilder b;
    b.g.arch_id = "mortar";
    b.g.input_slots = {"frame"};
    std::string prev = "frame";
    for (int i = 1; i <= 8; ++i) {
        const int c_in = i == 1 ? 3 : 32;
        const int c_out = i == 8 ? 48 : 32;
        prev = b.block("bb" + std::to_string(i), prev, conv_pair_block(c_in, c_out));
        if (i < 8) prev = b.relu("act" + std::to_string(i), prev);
    }
    b.g.output = b.shuffle("shuffle", prev, 4);
    b.g.feature_tap = "act7";
    return b.g;
}

void imdb_block(GraphBuilder& b, const std::string& id, const std::string& in, int c) {
    const int half = c / 2, quarter = c / 4;
    b.conv(id + "_conv1", in, c, c, 3);
    b.relu(id + "_act1", id + "_conv1");
    b.slice(id + "_d1", id + "_act1", 0, half);
    b.slice(id + "_r1", id + "_act1", half, c);
    b.conv(id + "_conv2", id + "_r1", half, half, 3);
    b.relu(id + "_act2", id + "_conv2");
    b.slice(id + "_d2", id + "_act2", 0, quarter);
    b.slice(id + "_r2", id + "_act2", quarter, half);
    b.conv(id + "_conv3", id + "_r2", quarter, quarter, 3);
    b.relu(id + "_act3", id + "_conv3");
    b.concat(id + "_cat", {id + "_d1", id + "_d2", id + "_act3"});
    b.conv(id + "_fuse", id + "_cat", c, c, 1);
    b.add(id, id + "_fuse", in);
}

ModelGraph build_redcat() {
    GraphBuilder b;
    b.g.arch_id = "redcat";
    b.g.input_slots = {"frame", "frame_next"};
    b.g.state_slots = {{"hidden", 8}};
    b.concat("cat_in", {"hidden", "frame", "frame_next"});
    b.conv("conv_in", "cat_in", 14, 8, 3);
    b.relu("act_in", "conv_in");
    std::string prev = "act_in";
    for (int i = 1; i <= 5; ++i) {
        imdb_block(b, "imdb" + std::to_string(i), prev, 8);
        prev = "imdb" + std::to_string(i);
    }
    b.conv("conv_up", prev, 8, 48, 3);
    b.shuffle("shuffle", "conv_up", 4);
    b.bilinear("skip", "frame", 4);
    b.g.output = b.add("out", "shuffle", "skip");
    b.g.state_updates = {{"hidden", prev}};
    b.g.feature_tap = prev;
    return b.g;
}

ModelGraph build_221b() {
    GraphBuilder b;
    b.g.arch_id = "team221b";
    b.g.input_slots = {"frame_prev", "frame", "frame_next"};
    b.g.state_slots = {{"state_fwd", 16}, {"state_bwd", 16}};
    b.concat("fcat", {"frame_prev", "frame", "state_fwd"});
    b.conv("fconv1", "fcat", 22, 16, 3);
    b.relu("fact1", "fconv1");
    b.conv("fconv2", "fact1", 16, 16, 3);
    b.relu("fact2", "fconv2");
    b.concat("bcat", {"frame_next", "frame", "state_bwd"});
    b.conv("bconv1", "bcat", 22, 16, 3);
    b.relu("bact1", "bconv1");
    b.conv("bconv2", "bact1", 16, 16, 3);
    b.relu("bact2", "bconv2");
    b.concat("rcat", {"fact2", "bact2"});
    b.conv("rconv1", "rcat", 32, 32, 3);
    b.relu("ract1", "rconv1");
    b.conv("rconv2", "ract1", 32, 48, 3);
    b.shuffle("shuffle", "rconv2", 4);
    b.bilinear("skip", "frame", 4);
    b.g.output = b.add("out", "shuffle", "skip");
    b.g.state_updates = {{"state_fwd", "fact2"}, {"state_bwd", "bact2"}};
    b.g.feature_tap = "ract1";
    return b.g;
}

}  // namespace

const std::vector<std::string>& arch_ids() {
    static const std::vector<std::string> ids = {"mvideosr", "rcbsr",  "fighter", "xjtu",
                                                 "boe",      "genmedia", "ncut",   "mortar",
                                                 "redcat",   "team221b"};
    return ids;
}

ModelGraph build_model(const std::string& arch_id, const BuildConfig& cfg) {
    if (cfg.scale != 4 && !(arch_id == "mvideosr" && cfg.scale == 2))
        throw std::invalid_argument("inconsistent config: scale " + std::to_string(cfg.scale) +
                                    " unsupported for " + arch_id);
    if (cfg.ncut_width < 4)
        throw std::invalid_argument("inconsistent config: ncut width too small");
    ModelGraph g;
    if (arch_id == "mvideosr")
        g = build_mvideosr(cfg.scale);
    else if (arch_id == "rcbsr")
        g = build_rcbsr();
    else if (arch_id == "fighter")
        g = build_fighter();
    else if (arch_id == "xjtu")
        g = build_xjtu();
    else if (arch_id == "boe")
        g = build_boe();
    else if (arch_id == "genmedia")
        g = build_genmedia();
    else if (arch_id == "ncut")
        g = build_ncut(cfg.ncut_width);
    else if (arch_id == "mortar")
        g = build_mortar();
    else if (arch_id == "redcat")
        g = build_redcat();
    else if (arch_id == "team221b")
        g = build_221b();
    else
        throw std::invalid_argument("unknown arch " + arch_id);
    validate_graph(g);
    return g;
}

// ---------------------------------------------------------------------------
// Initialization.

namespace {

// Counter-sequence value for fixed-for-test weights. All steps are exact in
// binary32, so any implementation reproduces the same bits:
//   u(k)  = (k * 2654435761) mod 2^32
//   v(k)  = ((u(k) >> 8) / 2^24 - 0.5) * 0.25         in [-0.125, 0.125)
// The 0.25 scale keeps activations near unit size through the deepest zoo
// stacks, so f32 round-off stays well inside the fusion tolerance.
float counter_value(uint32_t k) {
    const uint32_t u = k * 2654435761u;
    return (static_cast<float>(u >> 8) * (1.0f / 16777216.0f) - 0.5f) * 0.25f;
}

}  // namespace

void init_weights(ModelGraph& g, InitScheme scheme, uint64_t seed) {
    auto params = collect_params(g);
    if (scheme == InitScheme::FixedForTest) {
        uint32_t k = 0;
        for (auto& p : params)
            for (size_t i = 0; i < p.size; ++i) p.data[i] = counter_value(k++);
        return;
    }
    Rng rng(mix_seed(seed, 0x696e6974));  // "init"
    for (auto& p : params) {
        if (p.kind == ParamKind::Slope) {
            std::fill_n(p.data, p.size, 0.25f);
        } else if (p.kind == ParamKind::Scale) {
            std::fill_n(p.data, p.size, 1.0f);
        } else {
            const float bound = 1.0f / std::sqrt(static_cast<float>(p.fan_in));
            for (size_t i = 0; i < p.size; ++i) p.data[i] = rng.uniform_f(-bound, bound);
        }
    }
}

// ---------------------------------------------------------------------------
// 2x -> 4x weight repetition.

ConvParams repeat_weights_2x_to_4x(const ConvParams& w2) {
    const Tensor& W = w2.weights;
    if (W.n != 12)
        throw std::invalid_argument("repeat_weights_2x_to_4x: source must have 12 output "
                                    "channels, got " +
                                    std::to_string(W.n));
    ConvParams out = w2;
    out.weights = Tensor(48, W.c, W.h, W.w);
    out.bias.assign(w2.bias.empty() ? 0 : 48, 0.0f);
    const size_t filter = static_cast<size_t>(W.c) * W.h * W.w;
    for (int color = 0; color < 3; ++color)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const int co4 = color * 16 + i * 4 + j;
                const int co2 = color * 4 + (i / 2) * 2 + (j / 2);
                std::copy_n(W.v.data() + co2 * filter, filter,
                            out.weights.v.data() + co4 * filter);
                if (!w2.bias.empty()) out.bias[co4] = w2.bias[co2];
            }
    return out;
}

void transfer_2x_to_4x(const ModelGraph& g2, ModelGraph& g4) {
    if (g2.arch_id != "mvideosr" || g4.arch_id != "mvideosr" || g2.scale != 2 || g4.scale != 4)
        throw std::invalid_argument("transfer_2x_to_4x expects mvideosr graphs at scales 2 and 4");
    for (const auto& node : g2.nodes) {
        if (node.kind != OpKind::Conv && node.kind != OpKind::Activation) continue;
        LayerNode* dst = g4.find(node.id);
        if (!dst) throw std::invalid_argument("transfer_2x_to_4x: node mismatch at " + node.id);
        if (node.id == "conv4")
            dst->conv = repeat_weights_2x_to_4x(node.conv);
        else if (node.kind == OpKind::Conv)
            dst->conv = node.conv;
        else
            dst->prelu_slope = node.prelu_slope;
    }
}

// ---------------------------------------------------------------------------
// Description and cards.

Description describe(const ModelGraph& g) {
    Description d;
    ModelGraph& mutable_g = const_cast<ModelGraph&>(g);
    auto params = collect_params(mutable_g);
    for (const auto& p : params) d.param_count += static_cast<long long>(p.size);
    d.model_bytes = weight_file_bytes(mutable_g);
    return d;
}

namespace {

long long conv_p(int c_in, int c_out, int k) {
    return static_cast<long long>(c_out) * c_in * k * k + c_out;
}
long long dw_p(int c) { return static_cast<long long>(c) * 9 + c; }
long long ecb_p(int c_in, int c_out) {
    // 3x3 + (1x1 -> 3x3) + 3 * (1x1 -> fixed edge with per-channel scale)
    return conv_p(c_in, c_out, 3) + conv_p(c_in, c_out, 1) + conv_p(c_out, c_out, 3) +
           3 * (conv_p(c_in, c_out, 1) + c_out);
}
long long pair_p(int c_in, int c_out) { return conv_p(c_in, c_out, 3) + conv_p(c_in, c_out, 1); }
long long imdb_p(int c) {
    return conv_p(c, c, 3) + conv_p(c / 2, c / 2, 3) + conv_p(c / 4, c / 4, 3) + conv_p(c, c, 1);
}

}  // namespace

ArchCard arch_card(const std::string& arch_id) {
    ArchCard card;
    card.arch_id = arch_id;
    if (arch_id == "mvideosr") {
        card.summary = "4 convs 3-6-6-6-48 (k3) + PReLU + pixel shuffle x4";
        card.param_count = conv_p(3, 6, 3) + conv_p(6, 6, 3) + 6 + conv_p(6, 6, 3) +
                           conv_p(6, 48, 3);
        card.fused_param_count = card.param_count;
        card.notes = "PReLU placed after conv2; the source material names one PReLU layer "
                     "without fixing its position. 2x variant ends in a 12-channel conv whose "
                     "weights repeat into the 48-channel layout.";
    } else if (arch_id == "rcbsr") {
        card.summary = "conv 3-16 + ReLU, 1 edge-oriented multi-branch block 16-16 + ReLU, "
                       "conv 16-48, pixel shuffle x4";
        card.param_count = conv_p(3, 16, 3) + ecb_p(16, 16) + conv_p(16, 48, 3);
        card.fused_param_count = conv_p(3, 16, 3) + conv_p(16, 16, 3) + conv_p(16, 48, 3);
        card.notes = "Block branches: 3x3; 1x1->3x3; 1x1->scaled Sobel-x/Sobel-y/Laplacian. "
                     "Fuses to one 3x3 conv.";
    } else if (arch_id == "fighter") {
        card.summary = "2 depthwise-separable blocks at 8 channels, residual add between "
                       "block outputs, conv 8-48, pixel shuffle x4";
        card.param_count = dw_p(3) + conv_p(3, 8, 1) + dw_p(8) + conv_p(8, 8, 1) +
                           conv_p(8, 48, 3);
        card.fused_param_count = card.param_count;
        card.notes = "ReLU after each pointwise conv; activation placement chosen here.";
    } else if (arch_id == "xjtu") {
        card.summary = "convs 3-16-16-16-48 (k3), ReLU after layers 2 and 3 only, "
                       "pixel shuffle x4";
        card.param_count = conv_p(3, 16, 3) + conv_p(16, 16, 3) + conv_p(16, 16, 3) +
                           conv_p(16, 48, 3);
        card.fused_param_count = card.param_count;
    } else if (arch_id == "boe") {
        card.summary = "6 convs at 25 channels (ReLU after 1-4 and 6) + transposed conv "
                       "25-3 k4 s4";
        card.param_count = conv_p(3, 25, 3) + 5 * conv_p(25, 25, 3) +
                           (static_cast<long long>(25) * 3 * 16 + 3);
        card.fused_param_count = card.param_count;
        card.notes = "Non-overlapping x4 transposed conv (k = stride = 4). Distillation tap "
                     "exposed after the last ReLU (25 channels).";
    } else if (arch_id == "genmedia") {
        card.summary = "anchor-based plain net: convs 3-28-28-28-48 with ReLUs, anchor = "
                       "input repeated 16x, concat + 1x1 mix, anchor skip add, clip, "
                       "pixel shuffle x4";
        card.param_count = conv_p(3, 28, 3) + conv_p(28, 28, 3) + conv_p(28, 28, 3) +
                           conv_p(28, 48, 3) + conv_p(96, 48, 1);
        card.fused_param_count = card.param_count;
        card.notes = "Concat + 1x1 replaces the anchor summation; the extra skip adds the "
                     "anchor around the 1x1 so a zeroed mix conv degrades to "
                     "nearest-neighbor upsampling. Clip runs before depth-to-space.";
    } else if (arch_id == "ncut") {
        card.summary = "3 convs 3-28-28-48 (k3) with ReLU after the first two, "
                       "pixel shuffle x4";
        card.param_count = conv_p(3, 28, 3) + conv_p(28, 28, 3) + conv_p(28, 48, 3);
        card.fused_param_count = card.param_count;
        card.notes = "Body width is a config knob (default 28).";
    } else if (arch_id == "mortar") {
        card.summary = "8 conv blocks (3x3 with a parallel 1x1 while training) at 32 "
                       "channels, last one to 48, ReLU between, pixel shuffle x4";
        card.param_count = pair_p(3, 32) + 6 * pair_p(32, 32) + pair_p(32, 48);
        card.fused_param_count = conv_p(3, 32, 3) + 6 * conv_p(32, 32, 3) + conv_p(32, 48, 3);
        card.notes = "Each pair fuses into a single 3x3 conv for inference.";
    } else if (arch_id == "redcat") {
        card.summary = "recurrent: concat(h, x_t, x_t+1) -> conv 14-8 -> 5 channel-splitting "
                       "distillation blocks at 8 channels -> conv 8-48 -> pixel shuffle x4 "
                       "+ bilinear skip; hidden state = block-stack output (8 ch)";
        card.param_count = conv_p(14, 8, 3) + 5 * imdb_p(8) + conv_p(8, 48, 3);
        card.fused_param_count = card.param_count;
        card.notes = "Blocks split channels 1:1 over 3 stages, concat the distilled halves "
                     "and fuse with a 1x1, with a residual add.";
    } else if (arch_id == "team221b") {
        card.summary = "recurrent sliding window: forward group (x_t-1, x_t, h_fwd) and "
                       "backward group (x_t+1, x_t, h_bwd), 2 convs at 16 ch each, concat "
                       "-> convs 32-32-48 -> pixel shuffle x4 + bilinear skip";
        card.param_count = 2 * (conv_p(22, 16, 3) + conv_p(16, 16, 3)) + conv_p(32, 32, 3) +
                           conv_p(32, 48, 3);
        card.fused_param_count = card.param_count;
        card.notes = "Group features double as the next hidden states. Zero initial states; "
                     "edge frames are duplicated at sequence boundaries.";
    } else {
        throw std::invalid_argument("unknown arch " + arch_id);
    }
    return card;
}

std::string render_arch_cards() {
    std::ostringstream os;
    os << "# Architecture cards\n\n";
    os << "All models map (n, 3, h, w) inputs in [0, 1] to (n, 3, 4h, 4w).\n\n";
    for (const auto& id : arch_ids()) {
        ArchCard card = arch_card(id);
        os << "## " << card.arch_id << "\n\n";
        os << card.summary << "\n\n";
        os << "- parameters: " << card.param_count << "\n";
        if (card.fused_param_count != card.param_count)
            os << "- parameters after fusion: " << card.fused_param_count << "\n";
        if (!card.notes.empty()) os << "- notes: " << card.notes << "\n";
        os << "\n";
    }
    return os.str();
}

}  // namespace nanosr::zoo
