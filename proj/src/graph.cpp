#include "nanosr/graph.hpp"

#include <set>
#include <unordered_map>

namespace nanosr {

ConvParams edge_kernel(EdgeKind kind, int channels) {
    static const float sobel_x[9] = {1, 0, -1, 2, 0, -2, 1, 0, -1};
    static const float sobel_y[9] = {1, 2, 1, 0, 0, 0, -1, -2, -1};
    static const float laplacian[9] = {0, -1, 0, -1, 4, -1, 0, -1, 0};
    const float* k = kind == EdgeKind::SobelX   ? sobel_x
                     : kind == EdgeKind::SobelY ? sobel_y
                                                : laplacian;
    ConvParams p;
    p.weights = Tensor(channels, 1, 3, 3);
    for (int c = 0; c < channels; ++c)
        for (int i = 0; i < 9; ++i) p.weights.v[static_cast<size_t>(c) * 9 + i] = k[i];
    p.stride = 1;
    p.padding = 0;
    p.groups = channels;
    return p;
}

const LayerNode* ModelGraph::find(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

LayerNode* ModelGraph::find(const std::string& id) {
    for (auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

void validate_graph(const ModelGraph& g) {
    std::set<std::string> defined;
    for (const auto& slot : g.input_slots) defined.insert(slot);
    for (const auto& slot : g.state_slots) defined.insert(slot.name);
    for (const auto& node : g.nodes) {
        if (defined.count(node.id))
            throw std::invalid_argument("graph " + g.arch_id + ": duplicate id " + node.id);
        for (const auto& in : node.inputs)
            if (!defined.count(in))
                throw std::invalid_argument("graph " + g.arch_id + ": node " + node.id +
                                            " uses undefined input " + in);
        defined.insert(node.id);
    }
    if (!g.find(g.output))
        throw std::invalid_argument("graph " + g.arch_id + ": missing output node " + g.output);
    if (!g.feature_tap.empty() && !g.find(g.feature_tap))
        throw std::invalid_argument("graph " + g.arch_id + ": missing tap node " + g.feature_tap);
    if (g.state_updates.size() != g.state_slots.size())
        throw std::invalid_argument("graph " + g.arch_id + ": state updates/slots mismatch");
    for (const auto& [slot, node] : g.state_updates)
        if (!g.find(node))
            throw std::invalid_argument("graph " + g.arch_id + ": missing state node " + node);
}

// ---------------------------------------------------------------------------
// Parameters.

namespace {

void push_conv_params(std::vector<ParamRef>& out, const std::string& prefix, ConvParams& p,
                      bool transposed) {
    ParamRef w;
    w.name = prefix + ".weight";
    w.kind = ParamKind::Weight;
    w.data = p.weights.v.data();
    w.size = p.weights.v.size();
    const int per_group_c = transposed ? p.weights.n / p.groups : p.weights.c;
    w.fan_in = std::max(1, per_group_c * p.weights.h * p.weights.w);
    w.dims = {p.weights.n, p.weights.c, p.weights.h, p.weights.w};
    w.rank = 4;
    out.push_back(w);
    if (!p.bias.empty()) {
        ParamRef b;
        b.name = prefix + ".bias";
        b.kind = ParamKind::Bias;
        b.data = p.bias.data();
        b.size = p.bias.size();
        b.fan_in = w.fan_in;
        b.dims = {static_cast<int>(p.bias.size()), 0, 0, 0};
        b.rank = 1;
        out.push_back(b);
    }
}

void push_vector_param(std::vector<ParamRef>& out, const std::string& name, ParamKind kind,
                       std::vector<float>& v) {
    ParamRef r;
    r.name = name;
    r.kind = kind;
    r.data = v.data();
    r.size = v.size();
    r.fan_in = 1;
    r.dims = {static_cast<int>(v.size()), 0, 0, 0};
    r.rank = 1;
    out.push_back(r);
}

}  // namespace

std::vector<ParamRef> collect_params(ModelGraph& g) {
    std::vector<ParamRef> out;
    for (auto& node : g.nodes) {
        switch (node.kind) {
            case OpKind::Conv:
                push_conv_params(out, node.id, node.conv, false);
                break;
            case OpKind::TConv:
                push_conv_params(out, node.id, node.conv, true);
                break;
            case OpKind::Activation:
                if (node.act == ActKind::PRelu)
                    push_vector_param(out, node.id + ".slope", ParamKind::Slope, node.prelu_slope);
                break;
            case OpKind::BranchBlock: {
                for (size_t i = 0; i < node.block.branches.size(); ++i) {
                    auto& br = node.block.branches[i];
                    const std::string prefix = node.id + ".b" + std::to_string(i);
                    if (br.kind == Branch::Kind::SingleConv) {
                        push_conv_params(out, prefix, br.conv, false);
                    } else if (br.kind == Branch::Kind::ExpandThenConv) {
                        push_conv_params(out, prefix + ".expand", br.expand, false);
                        push_conv_params(out, prefix, br.conv, false);
                    } else {
                        push_conv_params(out, prefix + ".expand", br.expand, false);
                        push_vector_param(out, prefix + ".scale", ParamKind::Scale, br.scale);
                    }
                }
                break;
            }
            default:
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inference executor.

namespace {

Tensor branch_forward(const Tensor& x, const Branch& br, int c_out) {
    switch (br.kind) {
        case Branch::Kind::SingleConv:
            return conv2d(x, br.conv);
        case Branch::Kind::ExpandThenConv: {
            Tensor e = conv2d(x, br.expand);
            return conv2d(e, br.conv);
        }
        case Branch::Kind::ExpandThenEdge: {
            Tensor e = conv2d(x, br.expand);
            Tensor d = conv2d(e, edge_kernel(br.edge, c_out));
            return channel_scale(d, br.scale);
        }
    }
    throw std::logic_error("unreachable");
}

Tensor block_forward(const Tensor& x, const BranchBlock& block) {
    if (block.branches.empty())
        throw std::invalid_argument("branch block has no branches");
    Tensor acc = branch_forward(x, block.branches[0], block.c_out);
    for (size_t i = 1; i < block.branches.size(); ++i)
        acc = add(acc, branch_forward(x, block.branches[i], block.c_out));
    return acc;
}

Tensor eval_node(const LayerNode& node, const std::unordered_map<std::string, Tensor>& env) {
    auto in = [&](size_t i) -> const Tensor& { return env.at(node.inputs.at(i)); };
    switch (node.kind) {
        case OpKind::Conv:
            return conv2d(in(0), node.conv);
        case OpKind::TConv:
            return transposed_conv2d(in(0), node.conv);
        case OpKind::Activation:
            return activation(in(0), node.act, node.leaky_alpha, node.prelu_slope);
        case OpKind::ChannelScale:
            return channel_scale(in(0), node.prelu_slope);
        case OpKind::PixelShuffle:
            return pixel_shuffle(in(0), node.factor, node.inverse);
        case OpKind::Bilinear:
            return bilinear_resize(in(0), node.factor);
        case OpKind::Concat: {
            std::vector<const Tensor*> xs;
            for (const auto& name : node.inputs) xs.push_back(&env.at(name));
            return concat_channels(xs);
        }
        case OpKind::SliceChannels:
            return slice_channels(in(0), node.c_begin, node.c_end);
        case OpKind::ChannelRepeat:
            return channel_repeat(in(0), node.factor);
        case OpKind::Add:
            return add(in(0), in(1));
        case OpKind::Clip:
            return clip(in(0), node.clip_lo, node.clip_hi);
        case OpKind::BranchBlock:
            return block_forward(in(0), node.block);
    }
    throw std::logic_error("unreachable");
}

void check_slot_bindings(const ModelGraph& g, const std::vector<Tensor>& frames,
                         const std::vector<Tensor>& states) {
    if (frames.size() != g.input_slots.size())
        throw std::invalid_argument(g.arch_id + ": window length " +
                                    std::to_string(frames.size()) + " does not match " +
                                    std::to_string(g.input_slots.size()) + " input slots");
    if (states.size() != g.state_slots.size())
        throw std::invalid_argument(g.arch_id + ": got " + std::to_string(states.size()) +
                                    " states, graph declares " +
                                    std::to_string(g.state_slots.size()));
    for (size_t i = 0; i < states.size(); ++i) {
        const auto& slot = g.state_slots[i];
        const Tensor& s = states[i];
        const Tensor& f = frames.at(0);
        if (s.c != slot.channels || s.n != f.n || s.h != f.h || s.w != f.w)
            throw std::invalid_argument(g.arch_id + ": state " + slot.name + " dims " +
                                        s.dims_str() + " do not match slot (" +
                                        std::to_string(f.n) + "," +
                                        std::to_string(slot.channels) + "," +
                                        std::to_string(f.h) + "," + std::to_string(f.w) + ")");
    }
}

}  // namespace

ForwardResult run_graph(const ModelGraph& g, const std::vector<Tensor>& frames,
                        const std::vector<Tensor>& states) {
    check_slot_bindings(g, frames, states);
    std::unordered_map<std::string, Tensor> env;
    for (size_t i = 0; i < frames.size(); ++i) env[g.input_slots[i]] = frames[i];
    for (size_t i = 0; i < states.size(); ++i) env[g.state_slots[i].name] = states[i];
    for (const auto& node : g.nodes) env[node.id] = eval_node(node, env);

    ForwardResult res;
    res.sr = env.at(g.output);
    const Tensor& f = frames.at(0);
    if (res.sr.n != f.n || res.sr.c != 3 || res.sr.h != f.h * g.scale ||
        res.sr.w != f.w * g.scale)
        throw std::runtime_error(g.arch_id + ": SR output dims " + res.sr.dims_str() +
                                 " violate the (n,3," + std::to_string(g.scale) + "h," +
                                 std::to_string(g.scale) + "w) contract");
    for (const auto& slot : g.state_slots) {
        for (const auto& [sname, nid] : g.state_updates)
            if (sname == slot.name) res.state_out.push_back(env.at(nid));
    }
    if (!g.feature_tap.empty()) res.tap = env.at(g.feature_tap);
    return res;
}

Tensor forward_model(const ModelGraph& g, const Tensor& frame) {
    if (g.recurrent())
        throw std::invalid_argument(g.arch_id +
                                    " is recurrent; use forward_recurrent instead");
    return run_graph(g, {frame}, {}).sr;
}

std::pair<Tensor, std::vector<Tensor>> forward_recurrent(const ModelGraph& g,
                                                         const std::vector<Tensor>& window,
                                                         const std::vector<Tensor>& states) {
    if (!g.recurrent())
        throw std::invalid_argument(g.arch_id + " is not recurrent; use forward_model");
    ForwardResult res = run_graph(g, window, states);
    return {std::move(res.sr), std::move(res.state_out)};
}

std::vector<Tensor> zero_states(const ModelGraph& g, int n, int h, int w) {
    std::vector<Tensor> out;
    for (const auto& slot : g.state_slots) out.emplace_back(n, slot.channels, h, w);
    return out;
}

int slot_time_offset(const std::string& slot) {
    if (slot == "frame_prev") return -1;
    if (slot == "frame") return 0;
    if (slot == "frame_next") return 1;
    throw std::invalid_argument("unknown frame slot " + slot);
}

std::vector<Tensor> process_sequence(const ModelGraph& g, const std::vector<Tensor>& frames) {
    if (frames.empty()) return {};
    const int T = static_cast<int>(frames.size());
    std::vector<Tensor> states =
        zero_states(g, frames[0].n, frames[0].h, frames[0].w);
    std::vector<Tensor> out;
    out.reserve(T);
    for (int t = 0; t < T; ++t) {
        std::vector<Tensor> window;
        for (const auto& slot : g.input_slots) {
            int idx = std::clamp(t + slot_time_offset(slot), 0, T - 1);
            window.push_back(frames[idx]);
        }
        auto [sr, next] = forward_recurrent(g, window, states);
        out.push_back(std::move(sr));
        states = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Taped executor.

namespace {

int tape_branch(Tape& tape, const Branch& br, int x_id, int c_out,
                const std::map<std::string, int>& leaves, const std::string& prefix) {
    auto leaf_id = [&](const std::string& suffix) -> int {
        auto it = leaves.find(prefix + suffix);
        return it == leaves.end() ? -1 : it->second;
    };
    switch (br.kind) {
        case Branch::Kind::SingleConv:
            return tape.conv2d(x_id, leaf_id(".weight"), leaf_id(".bias"), br.conv.stride,
                               br.conv.padding, br.conv.groups);
        case Branch::Kind::ExpandThenConv: {
            int e = tape.conv2d(x_id, leaf_id(".expand.weight"), leaf_id(".expand.bias"),
                                br.expand.stride, br.expand.padding, br.expand.groups);
            return tape.conv2d(e, leaf_id(".weight"), leaf_id(".bias"), br.conv.stride,
                               br.conv.padding, br.conv.groups);
        }
        case Branch::Kind::ExpandThenEdge: {
            int e = tape.conv2d(x_id, leaf_id(".expand.weight"), leaf_id(".expand.bias"),
                                br.expand.stride, br.expand.padding, br.expand.groups);
            ConvParams fixed = edge_kernel(br.edge, c_out);
            int k_id = tape.leaf(fixed.weights);  // constant, not a trainable param
            int d = tape.conv2d(e, k_id, -1, 1, 0, c_out);
            return tape.channel_scale(d, leaves.at(prefix + ".scale"));
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

TapedForward run_graph_taped(Tape& tape, ModelGraph& g, const std::vector<Tensor>& frames,
                             const std::vector<Tensor>& states) {
    check_slot_bindings(g, frames, states);
    TapedForward res;

    auto params = collect_params(g);
    for (const auto& p : params) {
        Tensor t;
        if (p.rank == 4)
            t = Tensor(p.dims[0], p.dims[1], p.dims[2], p.dims[3]);
        else
            t = Tensor(1, static_cast<int>(p.size), 1, 1);
        std::copy_n(p.data, p.size, t.v.begin());
        res.param_leaves[p.name] = tape.leaf(std::move(t));
    }

    std::unordered_map<std::string, int> env;
    for (size_t i = 0; i < frames.size(); ++i) env[g.input_slots[i]] = tape.leaf(frames[i]);
    for (size_t i = 0; i < states.size(); ++i) env[g.state_slots[i].name] = tape.leaf(states[i]);

    auto leaf_id = [&](const std::string& name) -> int {
        auto it = res.param_leaves.find(name);
        return it == res.param_leaves.end() ? -1 : it->second;
    };

    for (const auto& node : g.nodes) {
        const int x0 = node.inputs.empty() ? -1 : env.at(node.inputs[0]);
        int out_id = -1;
        switch (node.kind) {
            case OpKind::Conv:
                out_id = tape.conv2d(x0, leaf_id(node.id + ".weight"), leaf_id(node.id + ".bias"),
                                     node.conv.stride, node.conv.padding, node.conv.groups);
                break;
            case OpKind::TConv:
                out_id = tape.transposed_conv2d(x0, leaf_id(node.id + ".weight"),
                                                leaf_id(node.id + ".bias"), node.conv.stride,
                                                node.conv.padding, node.conv.groups);
                break;
            case OpKind::Activation:
                if (node.act == ActKind::Relu)
                    out_id = tape.relu(x0);
                else if (node.act == ActKind::LeakyRelu)
                    out_id = tape.leaky_relu(x0, node.leaky_alpha);
                else
                    out_id = tape.prelu(x0, leaf_id(node.id + ".slope"));
                break;
            case OpKind::ChannelScale:
                throw std::invalid_argument("standalone channel_scale nodes are not trainable");
            case OpKind::PixelShuffle:
                out_id = tape.pixel_shuffle(x0, node.factor, node.inverse);
                break;
            case OpKind::Bilinear:
                out_id = tape.bilinear_resize(x0, node.factor);
                break;
            case OpKind::Concat: {
                std::vector<int> ids;
                for (const auto& name : node.inputs) ids.push_back(env.at(name));
                out_id = tape.concat(ids);
                break;
            }
            case OpKind::SliceChannels:
                out_id = tape.slice_channels(x0, node.c_begin, node.c_end);
                break;
            case OpKind::ChannelRepeat:
                out_id = tape.channel_repeat(x0, node.factor);
                break;
            case OpKind::Add:
                out_id = tape.add(x0, env.at(node.inputs[1]));
                break;
            case OpKind::Clip:
                out_id = tape.clip(x0, node.clip_lo, node.clip_hi);
                break;
            case OpKind::BranchBlock: {
                std::vector<int> parts;
                for (size_t i = 0; i < node.block.branches.size(); ++i)
                    parts.push_back(tape_branch(tape, node.block.branches[i], x0,
                                                node.block.c_out, res.param_leaves,
                                                node.id + ".b" + std::to_string(i)));
                out_id = parts[0];
                for (size_t i = 1; i < parts.size(); ++i) out_id = tape.add(out_id, parts[i]);
                break;
            }
        }
        env[node.id] = out_id;
    }

    res.sr_id = env.at(g.output);
    for (const auto& slot : g.state_slots)
        for (const auto& [sname, nid] : g.state_updates)
            if (sname == slot.name) res.state_out_ids.push_back(env.at(nid));
    if (!g.feature_tap.empty()) res.tap_id = env.at(g.feature_tap);
    return res;
}

}  // namespace nanosr
