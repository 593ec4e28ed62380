#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nanosr {

// Rank-4 NCHW tensor. Row-major, n-major / w-minor. Zero-sized tensors are
// legal: dims may be 0 and the data vector is empty.
template <typename T>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_) {
        if (n < 0 || c < 0 || h < 0 || w < 0)
            throw std::invalid_argument("tensor dims must be non-negative");
        v.assign(static_cast<size_t>(n) * c * h * w, T(0));
    }

    static TensorT zeros(int n, int c, int h, int w) { return TensorT(n, c, h, w); }
    static TensorT full(int n, int c, int h, int w, T value) {
        TensorT t(n, c, h, w);
        std::fill(t.v.begin(), t.v.end(), value);
        return t;
    }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    size_t offset(int in, int ic, int iy, int ix) const {
        return ((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    T& at(int in, int ic, int iy, int ix) { return v[offset(in, ic, iy, ix)]; }
    const T& at(int in, int ic, int iy, int ix) const { return v[offset(in, ic, iy, ix)]; }

    T* plane(int in, int ic) { return v.data() + offset(in, ic, 0, 0); }
    const T* plane(int in, int ic) const { return v.data() + offset(in, ic, 0, 0); }
    T* row(int in, int ic, int iy) { return v.data() + offset(in, ic, iy, 0); }
    const T* row(int in, int ic, int iy) const { return v.data() + offset(in, ic, iy, 0); }

    bool same_dims(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string dims_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> o;
        o.n = n; o.c = c; o.h = h; o.w = w;
        o.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) o.v[i] = static_cast<U>(v[i]);
        return o;
    }

    bool operator==(const TensorT& o) const {
        return same_dims(o) && v == o.v;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Deterministic RNG. mt19937_64 has a standard-specified sequence; the
// float/int mappings below avoid std::*_distribution, whose output is
// implementation-defined, so streams are identical on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    float uniform_f(float lo, float hi) {
        return static_cast<float>(lo + (static_cast<double>(hi) - lo) * uniform());
    }
    // [0, bound)
    int next_int(int bound) {
        return static_cast<int>(next_u64() % static_cast<uint64_t>(bound));
    }
    bool next_bool() { return (next_u64() & 1u) != 0; }

private:
    std::mt19937_64 eng_;
};

// splitmix64; used to derive independent child seeds from (seed, tag) pairs.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace nanosr
