#ifndef TADKIT_TENSOR_HPP
#define TADKIT_TENSOR_HPP

#include <cstddef>
#include <vector>

#include "tadkit/types.hpp"

namespace tadkit {

// Network-internal value: channels x time x spatial-columns, row-major.
// s collapses any H x W extent into one axis; temporal operators treat each
// spatial column independently (spatial kernel is always 1).
// Also reused as a plain 3D container for conv weights (c_out, c_in, k).
template <typename T>
struct Tensor {
    int c = 0, t = 0, s = 1;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c_, int t_, int s_ = 1) : c(c_), t(t_), s(s_) {
        v.assign(static_cast<size_t>(c) * t * s, T(0));
    }

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& at(int ci, int ti, int si = 0) { return v[(static_cast<size_t>(ci) * t + ti) * s + si]; }
    T at(int ci, int ti, int si = 0) const {
        return v[(static_cast<size_t>(ci) * t + ti) * s + si];
    }

    bool same_shape(const Tensor& o) const { return c == o.c && t == o.t && s == o.s; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.c = c; out.t = t; out.s = s;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    DenseArray to_dense() const {
        DenseArray d;
        if (s == 1) d.shape = {static_cast<size_t>(c), static_cast<size_t>(t)};
        else d.shape = {static_cast<size_t>(c), static_cast<size_t>(t), static_cast<size_t>(s)};
        d.data.assign(v.begin(), v.end());
        return d;
    }
};

}  // namespace tadkit

#endif
