#pragma once

#include <algorithm>
#include <cmath>

#include "bseg/tensor.hpp"

// Raw layer kernels shared by the gradient tape and the tape-free inference
// path. All loops are fixed-order and single-threaded per call; batch-level
// parallelism lives above this layer.
namespace bseg::kernels {

// 3x3 cross-correlation, zero padding 1, stride 1 or 2.
// out dims: [N, F, ceil(H/stride), ceil(W/stride)].
template <typename T>
std::vector<int> conv2d_out_dims(const BasicTensor<T>& x, const BasicTensor<T>& k, int stride) {
    require_rank(x, 4, "conv2d input");
    require_rank(k, 4, "conv2d kernel");
    if (k.dim(2) != 3 || k.dim(3) != 3) {
        throw ShapeError("conv2d: kernel spatial size must be 3x3, got " + dims_str(k.dims()));
    }
    if (k.dim(1) != x.dim(1)) {
        throw ShapeError("conv2d: kernel channels " + std::to_string(k.dim(1)) +
                         " != input channels " + std::to_string(x.dim(1)));
    }
    if (stride != 1 && stride != 2) {
        throw ShapeError("conv2d: stride must be 1 or 2, got " + std::to_string(stride));
    }
    const int oh = (x.dim(2) + stride - 1) / stride;
    const int ow = (x.dim(3) + stride - 1) / stride;
    return {x.dim(0), k.dim(0), oh, ow};
}

template <typename T>
void conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& k, const BasicTensor<T>& b,
                    int stride, BasicTensor<T>& out) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int F = k.dim(0);
    require_dims(b, {F}, "conv2d bias");
    const int OH = out.dim(2), OW = out.dim(3);

    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < F; ++f) {
            T* oplane = out.data() + (static_cast<std::int64_t>(n) * F + f) * OH * OW;
            const T bias = b[f];
            std::fill(oplane, oplane + static_cast<std::int64_t>(OH) * OW, bias);
            for (int c = 0; c < C; ++c) {
                const T* xplane = x.data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
                const T* kbase = k.data() + (static_cast<std::int64_t>(f) * C + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const T w = kbase[ky * 3 + kx];
                        if (w == T(0)) continue;
                        const int ox_lo = (kx == 0) ? 1 : 0;
                        const int ox_hi = std::min(OW - 1, (W - kx) / stride);
                        const int dx = kx - 1;
                        for (int oy = 0; oy < OH; ++oy) {
                            const int iy = oy * stride + ky - 1;
                            if (iy < 0 || iy >= H) continue;
                            T* orow = oplane + static_cast<std::int64_t>(oy) * OW;
                            const T* xrow = xplane + static_cast<std::int64_t>(iy) * W;
                            if (stride == 1) {
                                for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += w * xrow[ox + dx];
                            } else {
                                for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += w * xrow[2 * ox + dx];
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& k, int stride,
                     const BasicTensor<T>& gout, BasicTensor<T>& gx, BasicTensor<T>& gk,
                     BasicTensor<T>& gb) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int F = k.dim(0), OH = gout.dim(2), OW = gout.dim(3);

    for (int f = 0; f < F; ++f) {
        T acc = 0;
        for (int n = 0; n < N; ++n) {
            const T* gplane = gout.data() + (static_cast<std::int64_t>(n) * F + f) * OH * OW;
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(OH) * OW; ++i) acc += gplane[i];
        }
        gb[f] += acc;
    }

    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < F; ++f) {
            const T* gplane = gout.data() + (static_cast<std::int64_t>(n) * F + f) * OH * OW;
            for (int c = 0; c < C; ++c) {
                const T* xplane = x.data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
                T* gxplane = gx.data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
                const T* kbase = k.data() + (static_cast<std::int64_t>(f) * C + c) * 9;
                T* gkbase = gk.data() + (static_cast<std::int64_t>(f) * C + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const T w = kbase[ky * 3 + kx];
                        T wacc = 0;
                        const int ox_lo = (kx == 0) ? 1 : 0;
                        const int ox_hi = std::min(OW - 1, (W - kx) / stride);
                        const int dx = kx - 1;
                        for (int oy = 0; oy < OH; ++oy) {
                            const int iy = oy * stride + ky - 1;
                            if (iy < 0 || iy >= H) continue;
                            const T* grow = gplane + static_cast<std::int64_t>(oy) * OW;
                            const T* xrow = xplane + static_cast<std::int64_t>(iy) * W;
                            T* gxrow = gxplane + static_cast<std::int64_t>(iy) * W;
                            if (stride == 1) {
                                for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                                    wacc += grow[ox] * xrow[ox + dx];
                                    gxrow[ox + dx] += w * grow[ox];
                                }
                            } else {
                                for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                                    wacc += grow[ox] * xrow[2 * ox + dx];
                                    gxrow[2 * ox + dx] += w * grow[ox];
                                }
                            }
                        }
                        gkbase[ky * 3 + kx] += wacc;
                    }
                }
            }
        }
    }
}

template <typename T>
void relu_forward(const BasicTensor<T>& x, BasicTensor<T>& out) {
    const T* xp = x.data();
    T* op = out.data();
    for (std::int64_t i = 0; i < x.size(); ++i) op[i] = xp[i] > T(0) ? xp[i] : T(0);
}

// Subgradient at exactly 0 is 0.
template <typename T>
void relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& gout, BasicTensor<T>& gx) {
    const T* xp = x.data();
    const T* gp = gout.data();
    T* op = gx.data();
    for (std::int64_t i = 0; i < x.size(); ++i) op[i] += xp[i] > T(0) ? gp[i] : T(0);
}

template <typename T>
void upsample2x_forward(const BasicTensor<T>& x, BasicTensor<T>& out) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    for (int nc = 0; nc < N * C; ++nc) {
        const T* xplane = x.data() + static_cast<std::int64_t>(nc) * H * W;
        T* oplane = out.data() + static_cast<std::int64_t>(nc) * 4 * H * W;
        for (int y = 0; y < H; ++y) {
            const T* xrow = xplane + static_cast<std::int64_t>(y) * W;
            T* r0 = oplane + static_cast<std::int64_t>(2 * y) * 2 * W;
            T* r1 = r0 + 2 * W;
            for (int x0 = 0; x0 < W; ++x0) {
                const T v = xrow[x0];
                r0[2 * x0] = v;
                r0[2 * x0 + 1] = v;
                r1[2 * x0] = v;
                r1[2 * x0 + 1] = v;
            }
        }
    }
}

template <typename T>
void upsample2x_backward(const BasicTensor<T>& x, const BasicTensor<T>& gout, BasicTensor<T>& gx) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    for (int nc = 0; nc < N * C; ++nc) {
        const T* gplane = gout.data() + static_cast<std::int64_t>(nc) * 4 * H * W;
        T* gxplane = gx.data() + static_cast<std::int64_t>(nc) * H * W;
        for (int y = 0; y < H; ++y) {
            const T* r0 = gplane + static_cast<std::int64_t>(2 * y) * 2 * W;
            const T* r1 = r0 + 2 * W;
            T* gxrow = gxplane + static_cast<std::int64_t>(y) * W;
            for (int x0 = 0; x0 < W; ++x0) {
                gxrow[x0] += r0[2 * x0] + r0[2 * x0 + 1] + r1[2 * x0] + r1[2 * x0 + 1];
            }
        }
    }
}

template <typename T>
void check_two_channels(const BasicTensor<T>& t, const char* what) {
    require_rank(t, 4, what);
    if (t.dim(1) != 2) {
        throw ShapeError(std::string(what) + ": expected 2 channels, got " +
                         std::to_string(t.dim(1)));
    }
}

// Per-pixel softmax across the 2-channel axis, max-subtracted for stability.
template <typename T>
void softmax_channels_forward(const BasicTensor<T>& x, BasicTensor<T>& out) {
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        const T* l0 = x.data() + static_cast<std::int64_t>(n) * 2 * plane;
        const T* l1 = l0 + plane;
        T* p0 = out.data() + static_cast<std::int64_t>(n) * 2 * plane;
        T* p1 = p0 + plane;
        for (std::int64_t i = 0; i < plane; ++i) {
            const T m = std::max(l0[i], l1[i]);
            const T e0 = std::exp(l0[i] - m);
            const T e1 = std::exp(l1[i] - m);
            const T inv = T(1) / (e0 + e1);
            p0[i] = e0 * inv;
            p1[i] = e1 * inv;
        }
    }
}

template <typename T>
void softmax_channels_backward(const BasicTensor<T>& probs, const BasicTensor<T>& gout,
                               BasicTensor<T>& gx) {
    const int N = probs.dim(0), H = probs.dim(2), W = probs.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        const T* p0 = probs.data() + static_cast<std::int64_t>(n) * 2 * plane;
        const T* p1 = p0 + plane;
        const T* g0 = gout.data() + static_cast<std::int64_t>(n) * 2 * plane;
        const T* g1 = g0 + plane;
        T* o0 = gx.data() + static_cast<std::int64_t>(n) * 2 * plane;
        T* o1 = o0 + plane;
        for (std::int64_t i = 0; i < plane; ++i) {
            const T dot = g0[i] * p0[i] + g1[i] * p1[i];
            o0[i] += p0[i] * (g0[i] - dot);
            o1[i] += p1[i] * (g1[i] - dot);
        }
    }
}

}  // namespace bseg::kernels
