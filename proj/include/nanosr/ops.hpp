#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nanosr/tensor.hpp"
#include "nanosr/threading.hpp"

namespace nanosr {

// Convolution parameters. weights dims are (c_out, c_in/groups, kh, kw) for
// conv2d and (c_in, c_out/groups, kh, kw) for transposed_conv2d. An empty
// bias vector means no bias.
template <typename T>
struct ConvParamsT {
    TensorT<T> weights;
    std::vector<T> bias;
    int stride = 1;
    int padding = 0;
    int groups = 1;

    template <typename U>
    ConvParamsT<U> cast() const {
        ConvParamsT<U> o;
        o.weights = weights.template cast<U>();
        o.bias.assign(bias.begin(), bias.end());
        o.stride = stride;
        o.padding = padding;
        o.groups = groups;
        return o;
    }
};

using ConvParams = ConvParamsT<float>;

enum class ActKind { Relu, LeakyRelu, PRelu };

namespace detail {

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: direct summation, symmetric zero padding.

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvParamsT<T>& p) {
    const TensorT<T>& W = p.weights;
    const int s = p.stride, pad = p.padding, g = p.groups;
    detail::check(s >= 1, "conv2d: stride must be positive");
    detail::check(pad >= 0, "conv2d: padding must be non-negative");
    detail::check(g >= 1 && W.n % g == 0, "conv2d: c_out not divisible by groups");
    detail::check(x.c == W.c * g, "conv2d: input channels " + std::to_string(x.c) +
                                      " do not match weights expecting " + std::to_string(W.c * g));
    const int kh = W.h, kw = W.w;
    const int hnum = x.h + 2 * pad - kh, wnum = x.w + 2 * pad - kw;
    detail::check(hnum >= 0 && wnum >= 0 && hnum % s == 0 && wnum % s == 0,
                  "conv2d: padding/stride do not yield integer output dims");
    const int ho = hnum / s + 1, wo = wnum / s + 1;
    const int c_out = W.n, cpg = W.c, copg = c_out / g;
    detail::check(p.bias.empty() || static_cast<int>(p.bias.size()) == c_out,
                  "conv2d: bias length mismatch");

    TensorT<T> out(x.n, c_out, ho, wo);
    parallel_for(x.n * c_out, [&](int idx) {
        const int in = idx / c_out, co = idx % c_out;
        T* op = out.plane(in, co);
        const T b = p.bias.empty() ? T(0) : p.bias[co];
        std::fill(op, op + static_cast<size_t>(ho) * wo, b);
        const int grp = co / copg;
        for (int cig = 0; cig < cpg; ++cig) {
            const int ci = grp * cpg + cig;
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    const T wv = W.at(co, cig, ky, kx);
                    if (wv == T(0)) continue;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * s - pad + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        const T* xr = x.row(in, ci, iy);
                        T* orow = op + static_cast<size_t>(oy) * wo;
                        if (s == 1) {
                            const int lo = std::max(0, pad - kx);
                            const int hi = std::min(wo, x.w + pad - kx);
                            const T* xs = xr - pad + kx;
                            for (int ox = lo; ox < hi; ++ox) orow[ox] += wv * xs[ox];
                        } else {
                            for (int ox = 0; ox < wo; ++ox) {
                                const int ix = ox * s - pad + kx;
                                if (ix >= 0 && ix < x.w) orow[ox] += wv * xr[ix];
                            }
                        }
                    }
                }
        }
    });
    return out;
}

template <typename T>
TensorT<T> conv2d_grad_input(const TensorT<T>& x, const ConvParamsT<T>& p,
                             const TensorT<T>& gout) {
    const TensorT<T>& W = p.weights;
    const int s = p.stride, pad = p.padding;
    const int cpg = W.c, copg = W.n / p.groups;
    TensorT<T> gin(x.n, x.c, x.h, x.w);
    parallel_for(x.n * x.c, [&](int idx) {
        const int in = idx / x.c, ci = idx % x.c;
        const int grp = ci / cpg, cig = ci % cpg;
        T* gp = gin.plane(in, ci);
        for (int co = grp * copg; co < (grp + 1) * copg; ++co)
            for (int ky = 0; ky < W.h; ++ky)
                for (int kx = 0; kx < W.w; ++kx) {
                    const T wv = W.at(co, cig, ky, kx);
                    if (wv == T(0)) continue;
                    for (int oy = 0; oy < gout.h; ++oy) {
                        const int iy = oy * s - pad + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        const T* gr = gout.row(in, co, oy);
                        T* gi = gp + static_cast<size_t>(iy) * x.w;
                        if (s == 1) {
                            const int lo = std::max(0, pad - kx);
                            const int hi = std::min(gout.w, x.w + pad - kx);
                            T* gs = gi - pad + kx;
                            for (int ox = lo; ox < hi; ++ox) gs[ox] += wv * gr[ox];
                        } else {
                            for (int ox = 0; ox < gout.w; ++ox) {
                                const int ix = ox * s - pad + kx;
                                if (ix >= 0 && ix < x.w) gi[ix] += wv * gr[ox];
                            }
                        }
                    }
                }
    });
    return gin;
}

template <typename T>
TensorT<T> conv2d_grad_weights(const TensorT<T>& x, const ConvParamsT<T>& p,
                               const TensorT<T>& gout) {
    const TensorT<T>& W = p.weights;
    const int s = p.stride, pad = p.padding;
    const int cpg = W.c, copg = W.n / p.groups;
    TensorT<T> gw(W.n, W.c, W.h, W.w);
    parallel_for(W.n, [&](int co) {
        const int grp = co / copg;
        for (int cig = 0; cig < cpg; ++cig) {
            const int ci = grp * cpg + cig;
            for (int ky = 0; ky < W.h; ++ky)
                for (int kx = 0; kx < W.w; ++kx) {
                    double acc = 0.0;
                    for (int in = 0; in < x.n; ++in)
                        for (int oy = 0; oy < gout.h; ++oy) {
                            const int iy = oy * s - pad + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            const T* xr = x.row(in, ci, iy);
                            const T* gr = gout.row(in, co, oy);
                            if (s == 1) {
                                const int lo = std::max(0, pad - kx);
                                const int hi = std::min(gout.w, x.w + pad - kx);
                                const T* xs = xr - pad + kx;
                                for (int ox = lo; ox < hi; ++ox)
                                    acc += static_cast<double>(gr[ox]) * xs[ox];
                            } else {
                                for (int ox = 0; ox < gout.w; ++ox) {
                                    const int ix = ox * s - pad + kx;
                                    if (ix >= 0 && ix < x.w)
                                        acc += static_cast<double>(gr[ox]) * xr[ix];
                                }
                            }
                        }
                    gw.at(co, cig, ky, kx) = static_cast<T>(acc);
                }
        }
    });
    return gw;
}

template <typename T>
std::vector<T> grad_bias(const TensorT<T>& gout) {
    std::vector<T> gb(gout.c, T(0));
    for (int co = 0; co < gout.c; ++co) {
        double acc = 0.0;
        for (int in = 0; in < gout.n; ++in) {
            const T* gp = gout.plane(in, co);
            for (size_t i = 0; i < static_cast<size_t>(gout.h) * gout.w; ++i) acc += gp[i];
        }
        gb[co] = static_cast<T>(acc);
    }
    return gb;
}

// ---------------------------------------------------------------------------
// transposed_conv2d: gradient-of-conv semantics, zero output padding.
// Output dims: (h-1)*stride + k - 2*padding.

template <typename T>
TensorT<T> transposed_conv2d(const TensorT<T>& x, const ConvParamsT<T>& p) {
    const TensorT<T>& W = p.weights;
    const int s = p.stride, pad = p.padding, g = p.groups;
    detail::check(s >= 1, "transposed_conv2d: stride must be >= 1");
    detail::check(g >= 1 && W.n % g == 0, "transposed_conv2d: c_in not divisible by groups");
    detail::check(x.c == W.n, "transposed_conv2d: input channels " + std::to_string(x.c) +
                                  " do not match weights expecting " + std::to_string(W.n));
    detail::check(x.h >= 1 && x.w >= 1, "transposed_conv2d: empty spatial input");
    const int kh = W.h, kw = W.w;
    const int ho = (x.h - 1) * s + kh - 2 * pad;
    const int wo = (x.w - 1) * s + kw - 2 * pad;
    detail::check(ho >= 1 && wo >= 1, "transposed_conv2d: output dims not positive");
    const int copg = W.c, c_out = copg * g, cipg = W.n / g;
    detail::check(p.bias.empty() || static_cast<int>(p.bias.size()) == c_out,
                  "transposed_conv2d: bias length mismatch");

    TensorT<T> out(x.n, c_out, ho, wo);
    parallel_for(x.n * c_out, [&](int idx) {
        const int in = idx / c_out, co = idx % c_out;
        const int grp = co / copg, cog = co % copg;
        T* op = out.plane(in, co);
        const T b = p.bias.empty() ? T(0) : p.bias[co];
        std::fill(op, op + static_cast<size_t>(ho) * wo, b);
        for (int ci = grp * cipg; ci < (grp + 1) * cipg; ++ci)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    const T xv = x.at(in, ci, y, xx);
                    if (xv == T(0)) continue;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int oy = y * s + ky - pad;
                        if (oy < 0 || oy >= ho) continue;
                        T* orow = op + static_cast<size_t>(oy) * wo;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ox = xx * s + kx - pad;
                            if (ox >= 0 && ox < wo) orow[ox] += xv * W.at(ci, cog, ky, kx);
                        }
                    }
                }
    });
    return out;
}

template <typename T>
TensorT<T> transposed_conv2d_grad_input(const TensorT<T>& x, const ConvParamsT<T>& p,
                                        const TensorT<T>& gout) {
    const TensorT<T>& W = p.weights;
    const int s = p.stride, pad = p.padding;
    const int copg = W.c, cipg = W.n / p.groups;
    TensorT<T> gin(x.n, x.c, x.h, x.w);
    parallel_for(x.n * x.c, [&](int idx) {
        const int in = idx / x.c, ci = idx % x.c;
        const int grp = ci / cipg;
        T* gp = gin.plane(in, ci);
        for (int cog = 0; cog < copg; ++cog) {
            const int co = grp * copg + cog;
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    double acc = 0.0;
                    for (int ky = 0; ky < W.h; ++ky) {
                        const int oy = y * s + ky - pad;
                        if (oy < 0 || oy >= gout.h) continue;
                        const T* gr = gout.row(in, co, oy);
                        for (int kx = 0; kx < W.w; ++kx) {
                            const int ox = xx * s + kx - pad;
                            if (ox >= 0 && ox < gout.w)
                                acc += static_cast<double>(gr[ox]) * W.at(ci, cog, ky, kx);
                        }
                    }
                    gp[static_cast<size_t>(y) * x.w + xx] += static_cast<T>(acc);
                }
        }
    });
    return gin;
}

template <typename T>
TensorT<T> transposed_conv2d_grad_weights(const TensorT<T>& x, const ConvParamsT<T>& p,
                                          const TensorT<T>& gout) {
    const TensorT<T>& W = p.weights;
    const int s = p.stride, pad = p.padding;
    const int copg = W.c;
    TensorT<T> gw(W.n, W.c, W.h, W.w);
    parallel_for(W.n, [&](int ci) {
        const int grp = ci / (W.n / p.groups);
        for (int cog = 0; cog < copg; ++cog) {
            const int co = grp * copg + cog;
            for (int ky = 0; ky < W.h; ++ky)
                for (int kx = 0; kx < W.w; ++kx) {
                    double acc = 0.0;
                    for (int in = 0; in < x.n; ++in)
                        for (int y = 0; y < x.h; ++y) {
                            const int oy = y * s + ky - pad;
                            if (oy < 0 || oy >= gout.h) continue;
                            const T* xr = x.row(in, ci, y);
                            const T* gr = gout.row(in, co, oy);
                            for (int xx = 0; xx < x.w; ++xx) {
                                const int ox = xx * s + kx - pad;
                                if (ox >= 0 && ox < gout.w)
                                    acc += static_cast<double>(xr[xx]) * gr[ox];
                            }
                        }
                    gw.at(ci, cog, ky, kx) = static_cast<T>(acc);
                }
        }
    });
    return gw;
}

// ---------------------------------------------------------------------------
// Activations: max(x,0) + slope*min(x,0). At x == 0 the subgradient from the
// slope side is used.

template <typename T>
TensorT<T> activation(const TensorT<T>& x, ActKind kind, T alpha = T(0),
                      const std::vector<T>& slope = {}) {
    if (kind == ActKind::PRelu)
        detail::check(static_cast<int>(slope.size()) == x.c,
                      "prelu: slope length " + std::to_string(slope.size()) +
                          " does not match channels " + std::to_string(x.c));
    TensorT<T> out(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ci = 0; ci < x.c; ++ci) {
            const T a = kind == ActKind::Relu       ? T(0)
                        : kind == ActKind::LeakyRelu ? alpha
                                                     : slope[ci];
            const T* xp = x.plane(in, ci);
            T* op = out.plane(in, ci);
            for (size_t i = 0; i < plane; ++i) op[i] = xp[i] > T(0) ? xp[i] : a * xp[i];
        }
    return out;
}

template <typename T>
TensorT<T> activation_grad_input(const TensorT<T>& x, const TensorT<T>& gout, ActKind kind,
                                 T alpha = T(0), const std::vector<T>& slope = {}) {
    TensorT<T> gin(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ci = 0; ci < x.c; ++ci) {
            const T a = kind == ActKind::Relu       ? T(0)
                        : kind == ActKind::LeakyRelu ? alpha
                                                     : slope[ci];
            const T* xp = x.plane(in, ci);
            const T* gp = gout.plane(in, ci);
            T* op = gin.plane(in, ci);
            for (size_t i = 0; i < plane; ++i) op[i] = xp[i] > T(0) ? gp[i] : a * gp[i];
        }
    return gin;
}

template <typename T>
std::vector<T> prelu_grad_slope(const TensorT<T>& x, const TensorT<T>& gout) {
    std::vector<T> gs(x.c, T(0));
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int ci = 0; ci < x.c; ++ci) {
        double acc = 0.0;
        for (int in = 0; in < x.n; ++in) {
            const T* xp = x.plane(in, ci);
            const T* gp = gout.plane(in, ci);
            for (size_t i = 0; i < plane; ++i)
                if (xp[i] <= T(0)) acc += static_cast<double>(xp[i]) * gp[i];
        }
        gs[ci] = static_cast<T>(acc);
    }
    return gs;
}

// Per-channel multiplier y = s_c * x; the learnable scale of fixed-kernel
// re-parametrization branches.
template <typename T>
TensorT<T> channel_scale(const TensorT<T>& x, const std::vector<T>& scale) {
    detail::check(static_cast<int>(scale.size()) == x.c, "channel_scale: scale length mismatch");
    TensorT<T> out(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ci = 0; ci < x.c; ++ci) {
            const T* xp = x.plane(in, ci);
            T* op = out.plane(in, ci);
            for (size_t i = 0; i < plane; ++i) op[i] = scale[ci] * xp[i];
        }
    return out;
}

template <typename T>
TensorT<T> channel_scale_grad_input(const TensorT<T>& x, const TensorT<T>& gout,
                                    const std::vector<T>& scale) {
    return channel_scale(gout, scale);
}

template <typename T>
std::vector<T> channel_scale_grad_scale(const TensorT<T>& x, const TensorT<T>& gout) {
    std::vector<T> gs(x.c, T(0));
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int ci = 0; ci < x.c; ++ci) {
        double acc = 0.0;
        for (int in = 0; in < x.n; ++in) {
            const T* xp = x.plane(in, ci);
            const T* gp = gout.plane(in, ci);
            for (size_t i = 0; i < plane; ++i) acc += static_cast<double>(xp[i]) * gp[i];
        }
        gs[ci] = static_cast<T>(acc);
    }
    return gs;
}

// ---------------------------------------------------------------------------
// pixel_shuffle, depth-major (DCR) order:
//   out(n, c, y*r+i, x*r+j) = in(n, c*r*r + i*r + j, y, x)
// inverse=true applies the inverse permutation (space-to-depth).

template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int r, bool inverse = false) {
    detail::check(r >= 1, "pixel_shuffle: r must be positive");
    if (r == 1) return x;
    if (!inverse) {
        detail::check(x.c % (r * r) == 0, "pixel_shuffle: channels " + std::to_string(x.c) +
                                              " not divisible by r^2");
        TensorT<T> out(x.n, x.c / (r * r), x.h * r, x.w * r);
        for (int in = 0; in < x.n; ++in)
            for (int oc = 0; oc < out.c; ++oc)
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < r; ++j) {
                        const int ic = oc * r * r + i * r + j;
                        for (int y = 0; y < x.h; ++y) {
                            const T* xr = x.row(in, ic, y);
                            T* orow = out.row(in, oc, y * r + i) + j;
                            for (int xx = 0; xx < x.w; ++xx) orow[xx * r] = xr[xx];
                        }
                    }
        return out;
    }
    detail::check(x.h % r == 0 && x.w % r == 0,
                  "pixel_shuffle inverse: spatial dims not divisible by r");
    TensorT<T> out(x.n, x.c * r * r, x.h / r, x.w / r);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) {
                    const int oc = ic * r * r + i * r + j;
                    for (int y = 0; y < out.h; ++y) {
                        const T* xr = x.row(in, ic, y * r + i) + j;
                        T* orow = out.row(in, oc, y);
                        for (int xx = 0; xx < out.w; ++xx) orow[xx] = xr[xx * r];
                    }
                }
    return out;
}

template <typename T>
TensorT<T> pixel_shuffle_grad_input(const TensorT<T>& gout, int r, bool inverse) {
    return pixel_shuffle(gout, r, !inverse);
}

// ---------------------------------------------------------------------------
// bilinear_resize: integer upscale, align_corners=false (half-pixel centers).

template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& x, int scale) {
    detail::check(scale >= 1, "bilinear_resize: scale must be >= 1");
    if (scale == 1) return x;
    detail::check(x.h >= 1 && x.w >= 1, "bilinear_resize: empty spatial input");
    const int ho = x.h * scale, wo = x.w * scale;
    std::vector<int> y0(ho), y1(ho), x0(wo), x1(wo);
    std::vector<T> fy(ho), fx(wo);
    auto fill = [&](int out_size, int in_size, std::vector<int>& i0, std::vector<int>& i1,
                    std::vector<T>& f) {
        for (int o = 0; o < out_size; ++o) {
            const double src = (o + 0.5) / scale - 0.5;
            const double fl = std::floor(src);
            const int a = static_cast<int>(fl);
            i0[o] = std::clamp(a, 0, in_size - 1);
            i1[o] = std::clamp(a + 1, 0, in_size - 1);
            f[o] = static_cast<T>(src - fl);
        }
    };
    fill(ho, x.h, y0, y1, fy);
    fill(wo, x.w, x0, x1, fx);

    TensorT<T> out(x.n, x.c, ho, wo);
    parallel_for(x.n * x.c, [&](int idx) {
        const int in = idx / x.c, ci = idx % x.c;
        const T* xp = x.plane(in, ci);
        T* op = out.plane(in, ci);
        for (int oy = 0; oy < ho; ++oy) {
            const T* r0 = xp + static_cast<size_t>(y0[oy]) * x.w;
            const T* r1 = xp + static_cast<size_t>(y1[oy]) * x.w;
            T* orow = op + static_cast<size_t>(oy) * wo;
            const T wy = fy[oy];
            for (int ox = 0; ox < wo; ++ox) {
                const T wx = fx[ox];
                const T top = r0[x0[ox]] * (T(1) - wx) + r0[x1[ox]] * wx;
                const T bot = r1[x0[ox]] * (T(1) - wx) + r1[x1[ox]] * wx;
                orow[ox] = top * (T(1) - wy) + bot * wy;
            }
        }
    });
    return out;
}

template <typename T>
TensorT<T> bilinear_resize_grad_input(const TensorT<T>& x, int scale, const TensorT<T>& gout) {
    if (scale == 1) return gout;
    const int ho = gout.h, wo = gout.w;
    std::vector<int> y0(ho), y1(ho), x0(wo), x1(wo);
    std::vector<T> fy(ho), fx(wo);
    auto fill = [&](int out_size, int in_size, std::vector<int>& i0, std::vector<int>& i1,
                    std::vector<T>& f) {
        for (int o = 0; o < out_size; ++o) {
            const double src = (o + 0.5) / scale - 0.5;
            const double fl = std::floor(src);
            const int a = static_cast<int>(fl);
            i0[o] = std::clamp(a, 0, in_size - 1);
            i1[o] = std::clamp(a + 1, 0, in_size - 1);
            f[o] = static_cast<T>(src - fl);
        }
    };
    fill(ho, x.h, y0, y1, fy);
    fill(wo, x.w, x0, x1, fx);

    TensorT<T> gin(x.n, x.c, x.h, x.w);
    parallel_for(x.n * x.c, [&](int idx) {
        const int in = idx / x.c, ci = idx % x.c;
        T* gp = gin.plane(in, ci);
        const T* op = gout.plane(in, ci);
        for (int oy = 0; oy < ho; ++oy) {
            const T wy = fy[oy];
            T* r0 = gp + static_cast<size_t>(y0[oy]) * x.w;
            T* r1 = gp + static_cast<size_t>(y1[oy]) * x.w;
            const T* orow = op + static_cast<size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
                const T wx = fx[ox], gv = orow[ox];
                r0[x0[ox]] += gv * (T(1) - wx) * (T(1) - wy);
                r0[x1[ox]] += gv * wx * (T(1) - wy);
                r1[x0[ox]] += gv * (T(1) - wx) * wy;
                r1[x1[ox]] += gv * wx * wy;
            }
        }
    });
    return gin;
}

// ---------------------------------------------------------------------------
// Channel concat / slice / repeat.

template <typename T>
TensorT<T> concat_channels(const std::vector<const TensorT<T>*>& inputs) {
    detail::check(!inputs.empty(), "concat_channels: empty input list");
    const TensorT<T>& first = *inputs[0];
    int c_sum = 0;
    for (const auto* t : inputs) {
        detail::check(t->n == first.n && t->h == first.h && t->w == first.w,
                      "concat_channels: spatial/batch dims mismatch");
        c_sum += t->c;
    }
    TensorT<T> out(first.n, c_sum, first.h, first.w);
    const size_t plane = static_cast<size_t>(first.h) * first.w;
    for (int in = 0; in < first.n; ++in) {
        int oc = 0;
        for (const auto* t : inputs)
            for (int ci = 0; ci < t->c; ++ci, ++oc)
                std::copy_n(t->plane(in, ci), plane, out.plane(in, oc));
    }
    return out;
}

template <typename T>
TensorT<T> concat_channels(const std::vector<TensorT<T>>& inputs) {
    std::vector<const TensorT<T>*> ptrs;
    ptrs.reserve(inputs.size());
    for (const auto& t : inputs) ptrs.push_back(&t);
    return concat_channels(ptrs);
}

template <typename T>
TensorT<T> slice_channels(const TensorT<T>& x, int c_begin, int c_end) {
    detail::check(0 <= c_begin && c_begin <= c_end && c_end <= x.c,
                  "slice_channels: invalid channel range");
    TensorT<T> out(x.n, c_end - c_begin, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ci = c_begin; ci < c_end; ++ci)
            std::copy_n(x.plane(in, ci), plane, out.plane(in, ci - c_begin));
    return out;
}

// Repeats every channel `times` consecutively: out channel oc = in channel oc/times.
template <typename T>
TensorT<T> channel_repeat(const TensorT<T>& x, int times) {
    detail::check(times >= 1, "channel_repeat: times must be >= 1");
    TensorT<T> out(x.n, x.c * times, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int oc = 0; oc < out.c; ++oc)
            std::copy_n(x.plane(in, oc / times), plane, out.plane(in, oc));
    return out;
}

template <typename T>
TensorT<T> channel_repeat_grad_input(const TensorT<T>& x, int times, const TensorT<T>& gout) {
    TensorT<T> gin(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ci = 0; ci < x.c; ++ci) {
            T* gp = gin.plane(in, ci);
            for (int k = 0; k < times; ++k) {
                const T* op = gout.plane(in, ci * times + k);
                for (size_t i = 0; i < plane; ++i) gp[i] += op[i];
            }
        }
    return gin;
}

// ---------------------------------------------------------------------------
// Elementwise.

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check(a.same_dims(b), "add: shape mismatch " + a.dims_str() + " vs " + b.dims_str());
    TensorT<T> out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
    return out;
}

template <typename T>
TensorT<T> clip(const TensorT<T>& x, T lo, T hi) {
    detail::check(lo <= hi, "clip: lo must be <= hi");
    TensorT<T> out = x;
    for (auto& e : out.v) e = std::min(hi, std::max(lo, e));
    return out;
}

// Gradient passes where lo <= x <= hi (inclusive at the boundaries), else 0.
template <typename T>
TensorT<T> clip_grad_input(const TensorT<T>& x, T lo, T hi, const TensorT<T>& gout) {
    TensorT<T> gin(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.v.size(); ++i)
        gin.v[i] = (x.v[i] >= lo && x.v[i] <= hi) ? gout.v[i] : T(0);
    return gin;
}

}  // namespace nanosr
