#pragma once

#include <functional>
#include <utility>

#include "nanosr/ops.hpp"

namespace nanosr {

// Reverse-mode tape. Records every executed op together with references to
// its inputs (tape indices) and the produced output value, which is enough
// both to accumulate gradients backwards and to replay the forward pass.
// Recording is confined to one thread; the kernels it calls may parallelize
// internally.
template <typename T>
class TapeT {
public:
    using Tensor_ = TensorT<T>;

    int leaf(Tensor_ value) {
        Node node;
        node.value = std::move(value);
        nodes_.push_back(std::move(node));
        return static_cast<int>(nodes_.size()) - 1;
    }

    // b_id < 0 means no bias.
    int conv2d(int x_id, int w_id, int b_id, int stride, int padding, int groups) {
        ConvParamsT<T> p{value(w_id), bias_vec(b_id), stride, padding, groups};
        Tensor_ out = nanosr::conv2d(value(x_id), p);
        Node node;
        node.value = std::move(out);
        node.parents = b_id >= 0 ? std::vector<int>{x_id, w_id, b_id}
                                 : std::vector<int>{x_id, w_id};
        node.backward = [x_id, w_id, b_id, stride, padding, groups](TapeT& t, int,
                                                                    const Tensor_& g) {
            ConvParamsT<T> p{t.value(w_id), t.bias_vec(b_id), stride, padding, groups};
            t.accum(x_id, conv2d_grad_input(t.value(x_id), p, g));
            t.accum(w_id, conv2d_grad_weights(t.value(x_id), p, g));
            if (b_id >= 0) t.accum_bias(b_id, grad_bias(g));
        };
        node.replay = [x_id, w_id, b_id, stride, padding, groups](TapeT& t) {
            ConvParamsT<T> p{t.value(w_id), t.bias_vec(b_id), stride, padding, groups};
            return nanosr::conv2d(t.value(x_id), p);
        };
        return push(std::move(node));
    }

    int transposed_conv2d(int x_id, int w_id, int b_id, int stride, int padding, int groups) {
        ConvParamsT<T> p{value(w_id), bias_vec(b_id), stride, padding, groups};
        Tensor_ out = nanosr::transposed_conv2d(value(x_id), p);
        Node node;
        node.value = std::move(out);
        node.parents = b_id >= 0 ? std::vector<int>{x_id, w_id, b_id}
                                 : std::vector<int>{x_id, w_id};
        node.backward = [x_id, w_id, b_id, stride, padding, groups](TapeT& t, int,
                                                                    const Tensor_& g) {
            ConvParamsT<T> p{t.value(w_id), t.bias_vec(b_id), stride, padding, groups};
            t.accum(x_id, transposed_conv2d_grad_input(t.value(x_id), p, g));
            t.accum(w_id, transposed_conv2d_grad_weights(t.value(x_id), p, g));
            if (b_id >= 0) t.accum_bias(b_id, grad_bias(g));
        };
        node.replay = [x_id, w_id, b_id, stride, padding, groups](TapeT& t) {
            ConvParamsT<T> p{t.value(w_id), t.bias_vec(b_id), stride, padding, groups};
            return nanosr::transposed_conv2d(t.value(x_id), p);
        };
        return push(std::move(node));
    }

    int relu(int x_id) { return act(x_id, ActKind::Relu, T(0), -1); }
    int leaky_relu(int x_id, T alpha) { return act(x_id, ActKind::LeakyRelu, alpha, -1); }
    // slope_id is a (1, c, 1, 1) leaf holding the per-channel slopes.
    int prelu(int x_id, int slope_id) { return act(x_id, ActKind::PRelu, T(0), slope_id); }

    int channel_scale(int x_id, int scale_id) {
        Tensor_ out = nanosr::channel_scale(value(x_id), bias_vec(scale_id));
        Node node;
        node.value = std::move(out);
        node.parents = {x_id, scale_id};
        node.backward = [x_id, scale_id](TapeT& t, int, const Tensor_& g) {
            const auto s = t.bias_vec(scale_id);
            t.accum(x_id, channel_scale_grad_input(t.value(x_id), g, s));
            t.accum_bias(scale_id, channel_scale_grad_scale(t.value(x_id), g));
        };
        node.replay = [x_id, scale_id](TapeT& t) {
            return nanosr::channel_scale(t.value(x_id), t.bias_vec(scale_id));
        };
        return push(std::move(node));
    }

    int pixel_shuffle(int x_id, int r, bool inverse) {
        Node node;
        node.value = nanosr::pixel_shuffle(value(x_id), r, inverse);
        node.parents = {x_id};
        node.backward = [x_id, r, inverse](TapeT& t, int, const Tensor_& g) {
            t.accum(x_id, pixel_shuffle_grad_input(g, r, inverse));
        };
        node.replay = [x_id, r, inverse](TapeT& t) {
            return nanosr::pixel_shuffle(t.value(x_id), r, inverse);
        };
        return push(std::move(node));
    }

    int bilinear_resize(int x_id, int scale) {
        Node node;
        node.value = nanosr::bilinear_resize(value(x_id), scale);
        node.parents = {x_id};
        node.backward = [x_id, scale](TapeT& t, int, const Tensor_& g) {
            t.accum(x_id, bilinear_resize_grad_input(t.value(x_id), scale, g));
        };
        node.replay = [x_id, scale](TapeT& t) {
            return nanosr::bilinear_resize(t.value(x_id), scale);
        };
        return push(std::move(node));
    }

    int concat(std::vector<int> input_ids) {
        std::vector<const Tensor_*> ptrs;
        for (int id : input_ids) ptrs.push_back(&value(id));
        Node node;
        node.value = nanosr::concat_channels(ptrs);
        node.parents = input_ids;
        node.backward = [ids = input_ids](TapeT& t, int, const Tensor_& g) {
            int c0 = 0;
            for (int id : ids) {
                const int c = t.value(id).c;
                t.accum(id, nanosr::slice_channels(g, c0, c0 + c));
                c0 += c;
            }
        };
        node.replay = [ids = input_ids](TapeT& t) {
            std::vector<const Tensor_*> p;
            for (int id : ids) p.push_back(&t.value(id));
            return nanosr::concat_channels(p);
        };
        return push(std::move(node));
    }

    int slice_channels(int x_id, int c_begin, int c_end) {
        Node node;
        node.value = nanosr::slice_channels(value(x_id), c_begin, c_end);
        node.parents = {x_id};
        node.backward = [x_id, c_begin, c_end](TapeT& t, int, const Tensor_& g) {
            const Tensor_& x = t.value(x_id);
            Tensor_ gi(x.n, x.c, x.h, x.w);
            const size_t plane = static_cast<size_t>(x.h) * x.w;
            for (int in = 0; in < x.n; ++in)
                for (int ci = c_begin; ci < c_end; ++ci)
                    std::copy_n(g.plane(in, ci - c_begin), plane, gi.plane(in, ci));
            t.accum(x_id, std::move(gi));
        };
        node.replay = [x_id, c_begin, c_end](TapeT& t) {
            return nanosr::slice_channels(t.value(x_id), c_begin, c_end);
        };
        return push(std::move(node));
    }

    int channel_repeat(int x_id, int times) {
        Node node;
        node.value = nanosr::channel_repeat(value(x_id), times);
        node.parents = {x_id};
        node.backward = [x_id, times](TapeT& t, int, const Tensor_& g) {
            t.accum(x_id, channel_repeat_grad_input(t.value(x_id), times, g));
        };
        node.replay = [x_id, times](TapeT& t) {
            return nanosr::channel_repeat(t.value(x_id), times);
        };
        return push(std::move(node));
    }

    int add(int a_id, int b_id) {
        Node node;
        node.value = nanosr::add(value(a_id), value(b_id));
        node.parents = {a_id, b_id};
        node.backward = [a_id, b_id](TapeT& t, int, const Tensor_& g) {
            t.accum(a_id, g);
            t.accum(b_id, g);
        };
        node.replay = [a_id, b_id](TapeT& t) { return nanosr::add(t.value(a_id), t.value(b_id)); };
        return push(std::move(node));
    }

    int clip(int x_id, T lo, T hi) {
        Node node;
        node.value = nanosr::clip(value(x_id), lo, hi);
        node.parents = {x_id};
        node.backward = [x_id, lo, hi](TapeT& t, int, const Tensor_& g) {
            t.accum(x_id, clip_grad_input(t.value(x_id), lo, hi, g));
        };
        node.replay = [x_id, lo, hi](TapeT& t) { return nanosr::clip(t.value(x_id), lo, hi); };
        return push(std::move(node));
    }

    const Tensor_& value(int id) const { return nodes_[id].value; }
    Tensor_& value(int id) { return nodes_[id].value; }
    int size() const { return static_cast<int>(nodes_.size()); }
    bool empty() const { return nodes_.empty(); }

    // Reverse-mode accumulation from a seed gradient at `output_id`. The seed
    // must have the dims of that output. Returns nothing; read results via
    // grad(). Gradients of nodes the output does not depend on stay zero.
    void backward(int output_id, const Tensor_& seed) {
        backward_multi({{output_id, seed}});
    }

    // Same, seeding several outputs at once (e.g. a data loss on the SR frame
    // plus a feature loss on a tap node).
    void backward_multi(const std::vector<std::pair<int, Tensor_>>& seeds) {
        if (nodes_.empty()) throw std::invalid_argument("backward: empty tape");
        if (seeds.empty()) throw std::invalid_argument("backward: no seed gradients");
        grads_.assign(nodes_.size(), Tensor_());
        int start = -1;
        for (const auto& [id, seed] : seeds) {
            if (!seed.same_dims(nodes_[id].value))
                throw std::invalid_argument("backward: seed gradient dims mismatch");
            accum(id, seed);
            start = std::max(start, id);
        }
        for (int i = start; i >= 0; --i) {
            if (grads_[i].empty() || !nodes_[i].backward) continue;
            nodes_[i].backward(*this, i, grads_[i]);
        }
    }

    // Gradient of the last backward() seed wrt node `id`; zeros if untouched.
    Tensor_ grad(int id) const {
        if (id < static_cast<int>(grads_.size()) && !grads_[id].empty()) return grads_[id];
        const Tensor_& v = nodes_[id].value;
        return Tensor_(v.n, v.c, v.h, v.w);
    }

    // Re-executes every recorded op from its recorded inputs and checks the
    // stored outputs are reproduced bit-identically.
    bool replay_matches() {
        for (auto& node : nodes_) {
            if (!node.replay) continue;
            Tensor_ again = node.replay(*this);
            if (!(again == node.value)) return false;
        }
        return true;
    }

private:
    struct Node {
        Tensor_ value;
        std::vector<int> parents;
        std::function<void(TapeT&, int, const Tensor_&)> backward;  // null for leaves
        std::function<Tensor_(TapeT&)> replay;                      // null for leaves
    };

    int push(Node node) {
        nodes_.push_back(std::move(node));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int act(int x_id, ActKind kind, T alpha, int slope_id) {
        Node node;
        node.value = activation(value(x_id), kind, alpha,
                                slope_id >= 0 ? bias_vec(slope_id) : std::vector<T>{});
        node.parents = slope_id >= 0 ? std::vector<int>{x_id, slope_id} : std::vector<int>{x_id};
        node.backward = [x_id, kind, alpha, slope_id](TapeT& t, int, const Tensor_& g) {
            const auto slope = slope_id >= 0 ? t.bias_vec(slope_id) : std::vector<T>{};
            t.accum(x_id, activation_grad_input(t.value(x_id), g, kind, alpha, slope));
            if (slope_id >= 0) t.accum_bias(slope_id, prelu_grad_slope(t.value(x_id), g));
        };
        node.replay = [x_id, kind, alpha, slope_id](TapeT& t) {
            return activation(t.value(x_id), kind, alpha,
                              slope_id >= 0 ? t.bias_vec(slope_id) : std::vector<T>{});
        };
        return push(std::move(node));
    }

    // Per-channel parameter leaves (bias, prelu slope, branch scale) are
    // stored as (1, c, 1, 1) tensors; this flattens them for the kernels.
    std::vector<T> bias_vec(int id) const {
        if (id < 0) return {};
        return nodes_[id].value.v;
    }

    void accum(int id, Tensor_ g) {
        if (grads_[id].empty())
            grads_[id] = std::move(g);
        else
            for (size_t i = 0; i < g.v.size(); ++i) grads_[id].v[i] += g.v[i];
    }

    void accum_bias(int id, const std::vector<T>& g) {
        Tensor_ t(1, static_cast<int>(g.size()), 1, 1);
        t.v = g;
        accum(id, std::move(t));
    }

    std::vector<Node> nodes_;
    std::vector<Tensor_> grads_;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

}  // namespace nanosr
