#ifndef TADKIT_KERNELS_HPP
#define TADKIT_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "tadkit/errors.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

// Output length of a strided window op: floor((t + 2*pad - k)/stride) + 1.
inline int conv_out_len(int t, int k, int stride, int pad) {
    const int span = t + 2 * pad - k;
    if (span < 0 || stride < 1) {
        throw ConfigError("window does not fit: t=" + std::to_string(t) + " k=" +
                          std::to_string(k) + " stride=" + std::to_string(stride) +
                          " pad=" + std::to_string(pad));
    }
    return span / stride + 1;
}

// Cross-correlation along time, applied independently per spatial column.
// x: (c_in, t_in, s); w: (c_out, c_in, k); bias: c_out values or null.
template <typename T>
Tensor<T> conv_temporal_fwd(const Tensor<T>& x, const Tensor<T>& w, const T* bias,
                            int stride, int pad) {
    if (w.t != x.c) throw ConfigError("conv weight c_in mismatch");
    const int k = w.s, co_n = w.c, t_out = conv_out_len(x.t, k, stride, pad);
    Tensor<T> y(co_n, t_out, x.s);
    const int s = x.s;
    for (int co = 0; co < co_n; ++co) {
        T* yrow = y.data() + static_cast<size_t>(co) * t_out * s;
        if (bias) {
            const T b = bias[co];
            for (int i = 0; i < t_out * s; ++i) yrow[i] = b;
        }
        for (int ci = 0; ci < x.c; ++ci) {
            const T* xrow = x.data() + static_cast<size_t>(ci) * x.t * s;
            const T* wrow = w.data() + (static_cast<size_t>(co) * w.t + ci) * k;
            for (int kk = 0; kk < k; ++kk) {
                const T wv = wrow[kk];
                if (wv == T(0)) continue;
                // valid output range for this tap: 0 <= to*stride - pad + kk < t_in
                const int off = kk - pad;
                int to_lo = off < 0 ? (-off + stride - 1) / stride : 0;
                int to_hi = (x.t - 1 - off) / stride;  // inclusive
                if (to_hi >= t_out) to_hi = t_out - 1;
                if (s == 1) {
                    const T* xp = xrow + to_lo * stride + off;
                    T* yp = yrow + to_lo;
                    for (int to = to_lo; to <= to_hi; ++to, xp += stride, ++yp) {
                        *yp += wv * *xp;
                    }
                } else {
                    for (int to = to_lo; to <= to_hi; ++to) {
                        const T* xp = xrow + (to * stride + off) * s;
                        T* yp = yrow + to * s;
                        for (int si = 0; si < s; ++si) yp[si] += wv * xp[si];
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> conv_temporal_fwd(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
    return conv_temporal_fwd(x, w, static_cast<const T*>(nullptr), stride, pad);
}

template <typename T>
void conv_temporal_bwd(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                       int stride, int pad, Tensor<T>* dx, Tensor<T>* dw, T* dbias) {
    const int k = w.s, co_n = w.c, t_out = dy.t, s = x.s;
    for (int co = 0; co < co_n; ++co) {
        const T* dyrow = dy.data() + static_cast<size_t>(co) * t_out * s;
        if (dbias) {
            T acc = T(0);
            for (int i = 0; i < t_out * s; ++i) acc += dyrow[i];
            dbias[co] += acc;
        }
        for (int ci = 0; ci < x.c; ++ci) {
            const T* xrow = x.data() + static_cast<size_t>(ci) * x.t * s;
            T* dxrow = dx ? dx->data() + static_cast<size_t>(ci) * x.t * s : nullptr;
            const T* wrow = w.data() + (static_cast<size_t>(co) * w.t + ci) * k;
            T* dwrow = dw ? dw->data() + (static_cast<size_t>(co) * w.t + ci) * k : nullptr;
            for (int kk = 0; kk < k; ++kk) {
                const int off = kk - pad;
                int to_lo = off < 0 ? (-off + stride - 1) / stride : 0;
                int to_hi = (x.t - 1 - off) / stride;
                if (to_hi >= t_out) to_hi = t_out - 1;
                if (s == 1) {
                    if (dw) {
                        T acc = T(0);
                        const T* xp = xrow + to_lo * stride + off;
                        const T* dyp = dyrow + to_lo;
                        if (stride == 1) {
                            // Unrolled partial sums so the reduction can run
                            // in SIMD lanes; summation order stays fixed.
                            const int n = to_hi - to_lo + 1;
                            T a[8] = {};
                            int i = 0;
                            for (; i + 8 <= n; i += 8) {
                                for (int u = 0; u < 8; ++u) a[u] += dyp[i + u] * xp[i + u];
                            }
                            for (; i < n; ++i) a[0] += dyp[i] * xp[i];
                            acc = ((a[0] + a[1]) + (a[2] + a[3])) +
                                  ((a[4] + a[5]) + (a[6] + a[7]));
                        } else {
                            for (int to = to_lo; to <= to_hi; ++to, xp += stride, ++dyp) {
                                acc += *dyp * *xp;
                            }
                        }
                        dwrow[kk] += acc;
                    }
                    if (dx) {
                        const T wv = wrow[kk];
                        if (wv == T(0)) continue;
                        T* dxp = dxrow + to_lo * stride + off;
                        const T* dyp = dyrow + to_lo;
                        if (stride == 1) {
                            const int n = to_hi - to_lo + 1;
                            for (int i = 0; i < n; ++i) dxp[i] += wv * dyp[i];
                        } else {
                            for (int to = to_lo; to <= to_hi; ++to, dxp += stride, ++dyp) {
                                *dxp += wv * *dyp;
                            }
                        }
                    }
                } else {
                    if (dw) {
                        T acc = T(0);
                        for (int to = to_lo; to <= to_hi; ++to) {
                            const T* xp = xrow + (to * stride + off) * s;
                            const T* dyp = dyrow + to * s;
                            for (int si = 0; si < s; ++si) acc += dyp[si] * xp[si];
                        }
                        dwrow[kk] += acc;
                    }
                    if (dx) {
                        const T wv = wrow[kk];
                        if (wv == T(0)) continue;
                        for (int to = to_lo; to <= to_hi; ++to) {
                            T* dxp = dxrow + (to * stride + off) * s;
                            const T* dyp = dyrow + to * s;
                            for (int si = 0; si < s; ++si) dxp[si] += wv * dyp[si];
                        }
                    }
                }
            }
        }
    }
}

// Max over temporal windows; padding positions act as -inf. argmax records
// the chosen input time index per output element (first index wins ties).
template <typename T>
Tensor<T> maxpool_temporal_fwd(const Tensor<T>& x, int k, int stride, int pad,
                               std::vector<int32_t>* argmax) {
    const int t_out = conv_out_len(x.t, k, stride, pad), s = x.s;
    Tensor<T> y(x.c, t_out, s);
    if (argmax) argmax->assign(y.size(), -1);
    for (int ci = 0; ci < x.c; ++ci) {
        const T* xrow = x.data() + static_cast<size_t>(ci) * x.t * s;
        for (int to = 0; to < t_out; ++to) {
            const int base = to * stride - pad;
            for (int si = 0; si < s; ++si) {
                T best = -std::numeric_limits<T>::infinity();
                int best_ti = -1;
                for (int kk = 0; kk < k; ++kk) {
                    const int ti = base + kk;
                    if (ti < 0 || ti >= x.t) continue;
                    const T xv = xrow[ti * s + si];
                    if (xv > best) { best = xv; best_ti = ti; }
                }
                const size_t yi = (static_cast<size_t>(ci) * t_out + to) * s + si;
                y.v[yi] = best;
                if (argmax) (*argmax)[yi] = best_ti;
            }
        }
    }
    return y;
}

template <typename T>
void maxpool_temporal_bwd(const Tensor<T>& dy, const std::vector<int32_t>& argmax,
                          Tensor<T>* dx) {
    const int s = dx->s;
    for (int ci = 0; ci < dy.c; ++ci) {
        for (int to = 0; to < dy.t; ++to) {
            for (int si = 0; si < s; ++si) {
                const size_t yi = (static_cast<size_t>(ci) * dy.t + to) * s + si;
                const int ti = argmax[yi];
                if (ti >= 0) dx->at(ci, ti, si) += dy.v[yi];
            }
        }
    }
}

// Mean over the collapsed spatial axis: (c, t, s) -> (c, t, 1).
template <typename T>
Tensor<T> spatial_avg_pool_fwd(const Tensor<T>& x) {
    Tensor<T> y(x.c, x.t, 1);
    const T inv = T(1) / T(x.s);
    for (int ci = 0; ci < x.c; ++ci) {
        for (int ti = 0; ti < x.t; ++ti) {
            const T* xp = x.data() + (static_cast<size_t>(ci) * x.t + ti) * x.s;
            T acc = T(0);
            for (int si = 0; si < x.s; ++si) acc += xp[si];
            y.at(ci, ti) = acc * inv;
        }
    }
    return y;
}

template <typename T>
void spatial_avg_pool_bwd(const Tensor<T>& dy, Tensor<T>* dx) {
    const T inv = T(1) / T(dx->s);
    for (int ci = 0; ci < dy.c; ++ci) {
        for (int ti = 0; ti < dy.t; ++ti) {
            const T g = dy.at(ci, ti) * inv;
            T* dxp = dx->data() + (static_cast<size_t>(ci) * dx->t + ti) * dx->s;
            for (int si = 0; si < dx->s; ++si) dxp[si] += g;
        }
    }
}

// Linear x2 upsampling along time, align-corners false: output sample i reads
// input coordinate (i + 0.5)/2 - 0.5, clamped to [0, t-1].
template <typename T>
Tensor<T> upsample_x2_fwd(const Tensor<T>& x) {
    Tensor<T> y(x.c, 2 * x.t, x.s);
    for (int i = 0; i < 2 * x.t; ++i) {
        double cf = (i + 0.5) / 2.0 - 0.5;
        cf = std::clamp(cf, 0.0, static_cast<double>(x.t - 1));
        const int lo = static_cast<int>(std::floor(cf));
        const int hi = std::min(lo + 1, x.t - 1);
        const T frac = static_cast<T>(cf - lo);
        for (int ci = 0; ci < x.c; ++ci) {
            const T* xl = x.data() + (static_cast<size_t>(ci) * x.t + lo) * x.s;
            const T* xh = x.data() + (static_cast<size_t>(ci) * x.t + hi) * x.s;
            T* yp = y.data() + (static_cast<size_t>(ci) * y.t + i) * x.s;
            for (int si = 0; si < x.s; ++si) {
                yp[si] = (T(1) - frac) * xl[si] + frac * xh[si];
            }
        }
    }
    return y;
}

template <typename T>
void upsample_x2_bwd(const Tensor<T>& dy, Tensor<T>* dx) {
    const int t_in = dx->t;
    for (int i = 0; i < dy.t; ++i) {
        double cf = (i + 0.5) / 2.0 - 0.5;
        cf = std::clamp(cf, 0.0, static_cast<double>(t_in - 1));
        const int lo = static_cast<int>(std::floor(cf));
        const int hi = std::min(lo + 1, t_in - 1);
        const T frac = static_cast<T>(cf - lo);
        for (int ci = 0; ci < dy.c; ++ci) {
            const T* dyp = dy.data() + (static_cast<size_t>(ci) * dy.t + i) * dy.s;
            T* dl = dx->data() + (static_cast<size_t>(ci) * t_in + lo) * dx->s;
            T* dh = dx->data() + (static_cast<size_t>(ci) * t_in + hi) * dx->s;
            for (int si = 0; si < dy.s; ++si) {
                dl[si] += (T(1) - frac) * dyp[si];
                dh[si] += frac * dyp[si];
            }
        }
    }
}

template <typename T>
T stable_sigmoid(T z) {
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

// log(sigmoid(z)) without overflow for large |z|.
template <typename T>
T log_sigmoid(T z) {
    if (z >= T(0)) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

}  // namespace tadkit

#endif
