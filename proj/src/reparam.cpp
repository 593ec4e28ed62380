#include "nanosr/reparam.hpp"

namespace nanosr::reparam {

ConvParams embed_to_3x3(const ConvParams& p) {
    const Tensor& W = p.weights;
    if (W.h != W.w || W.h > 3)
        throw std::invalid_argument("embed_to_3x3: kernel must be 1x1 or 3x3, got " +
                                    std::to_string(W.h) + "x" + std::to_string(W.w));
    if (W.h == 3) return p;
    if (W.h != 1) throw std::invalid_argument("embed_to_3x3: 2x2 kernels have no center");
    ConvParams out = p;
    out.weights = Tensor(W.n, W.c, 3, 3);
    for (int o = 0; o < W.n; ++o)
        for (int i = 0; i < W.c; ++i) out.weights.at(o, i, 1, 1) = W.at(o, i, 0, 0);
    out.padding = 1;
    return out;
}

ConvParams fuse_parallel(const std::vector<ConvParams>& branches) {
    if (branches.empty()) throw std::invalid_argument("fuse_parallel: no branches");
    ConvParams out = branches[0];
    for (size_t i = 1; i < branches.size(); ++i) {
        const ConvParams& b = branches[i];
        if (!b.weights.same_dims(out.weights) || b.stride != out.stride ||
            b.padding != out.padding || b.groups != out.groups)
            throw std::invalid_argument("fuse_parallel: branch shape mismatch");
        for (size_t k = 0; k < out.weights.v.size(); ++k) out.weights.v[k] += b.weights.v[k];
        if (!b.bias.empty()) {
            if (out.bias.empty()) out.bias.assign(out.weights.n, 0.0f);
            for (size_t k = 0; k < b.bias.size(); ++k) out.bias[k] += b.bias[k];
        }
    }
    return out;
}

ConvParams fuse_sequential(const ConvParams& first, const ConvParams& second) {
    const Tensor& W1 = first.weights;
    const Tensor& W2 = second.weights;
    if (W1.h != 1 || W1.w != 1 || first.stride != 1 || first.groups != 1)
        throw std::invalid_argument("fuse_sequential: first stage must be a 1x1, stride 1, "
                                    "ungrouped conv");
    if (second.stride != 1 || second.groups != 1)
        throw std::invalid_argument("fuse_sequential: second stage must be stride 1, ungrouped");
    if (W1.n != W2.c)
        throw std::invalid_argument("fuse_sequential: channel mismatch, 1x1 emits " +
                                    std::to_string(W1.n) + " but k x k expects " +
                                    std::to_string(W2.c));
    ConvParams out;
    out.weights = Tensor(W2.n, W1.c, W2.h, W2.w);
    out.stride = 1;
    out.padding = W2.h == 3 ? 1 : 0;
    out.groups = 1;
    for (int o = 0; o < W2.n; ++o)
        for (int i = 0; i < W1.c; ++i)
            for (int u = 0; u < W2.h; ++u)
                for (int v = 0; v < W2.w; ++v) {
                    double acc = 0.0;
                    for (int m = 0; m < W2.c; ++m)
                        acc += static_cast<double>(W2.at(o, m, u, v)) * W1.at(m, i, 0, 0);
                    out.weights.at(o, i, u, v) = static_cast<float>(acc);
                }
    if (!second.bias.empty() || !first.bias.empty()) {
        out.bias.assign(W2.n, 0.0f);
        for (int o = 0; o < W2.n; ++o) {
            double acc = second.bias.empty() ? 0.0 : second.bias[o];
            if (!first.bias.empty())
                for (int m = 0; m < W2.c; ++m) {
                    double ksum = 0.0;
                    for (int u = 0; u < W2.h; ++u)
                        for (int v = 0; v < W2.w; ++v) ksum += W2.at(o, m, u, v);
                    acc += static_cast<double>(first.bias[m]) * ksum;
                }
            out.bias[o] = static_cast<float>(acc);
        }
    }
    return out;
}

namespace {

// Dense (c_out, c_out, 3, 3) conv equivalent to a fixed depthwise edge kernel
// with per-channel scales.
ConvParams scaled_edge_as_dense(EdgeKind edge, const std::vector<float>& scale) {
    const int c = static_cast<int>(scale.size());
    ConvParams dw = edge_kernel(edge, c);
    ConvParams dense;
    dense.weights = Tensor(c, c, 3, 3);
    dense.stride = 1;
    dense.padding = 0;
    dense.groups = 1;
    for (int o = 0; o < c; ++o)
        for (int u = 0; u < 3; ++u)
            for (int v = 0; v < 3; ++v)
                dense.weights.at(o, o, u, v) = scale[o] * dw.weights.at(o, 0, u, v);
    return dense;
}

ConvParams fuse_branch(const Branch& br) {
    switch (br.kind) {
        case Branch::Kind::SingleConv:
            return embed_to_3x3(br.conv);
        case Branch::Kind::ExpandThenConv:
            return fuse_sequential(br.expand, br.conv);
        case Branch::Kind::ExpandThenEdge:
            return fuse_sequential(br.expand, scaled_edge_as_dense(br.edge, br.scale));
    }
    throw std::invalid_argument("fuse_block: unsupported branch form");
}

}  // namespace

ConvParams fuse_block(const BranchBlock& block) {
    if (block.branches.empty()) throw std::invalid_argument("fuse_block: empty block");
    std::vector<ConvParams> fused;
    fused.reserve(block.branches.size());
    for (const auto& br : block.branches) fused.push_back(fuse_branch(br));
    return fuse_parallel(fused);
}

ModelGraph fuse_model(const ModelGraph& g) {
    ModelGraph out = g;
    for (auto& node : out.nodes) {
        if (node.kind != OpKind::BranchBlock) continue;
        ConvParams fused = fuse_block(node.block);
        node.kind = OpKind::Conv;
        node.conv = std::move(fused);
        node.block = BranchBlock{};
    }
    return out;
}

}  // namespace nanosr::reparam
