#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "csrcnn/rng.hpp"
#include "csrcnn/tensor.hpp"

namespace csrcnn {

enum class LayerKind { conv, deconv, prelu };

// Learning-rate group per the training schedule: the final deconvolution of a
// stage steps with the deconv base rate, every other parameter with the conv
// base rate.
enum class LrGroup { conv_group, deconv_group };

// Parameters of one layer plus its gradient and momentum buffers.
// Weight layout: conv (out_c, in_c, k, k); deconv (in_c, out_c, k, k).
template <typename T>
struct LayerParams {
    LayerKind kind = LayerKind::conv;
    LrGroup lr_group = LrGroup::conv_group;
    int in_c = 0, out_c = 0, k = 0;
    int stride = 1, pad = 0, out_pad = 0;

    Tensor<T> w, w_grad, w_vel;
    std::vector<T> b, b_grad, b_vel;
    std::vector<T> a, a_grad, a_vel; // PReLU per-channel slopes

    static LayerParams conv(int in_c, int out_c, int k, int pad, int stride = 1) {
        LayerParams p;
        p.kind = LayerKind::conv;
        p.in_c = in_c;
        p.out_c = out_c;
        p.k = k;
        p.pad = pad;
        p.stride = stride;
        p.w = Tensor<T>(out_c, in_c, k, k);
        p.w_grad = Tensor<T>(out_c, in_c, k, k);
        p.w_vel = Tensor<T>(out_c, in_c, k, k);
        p.b.assign(out_c, T(0));
        p.b_grad.assign(out_c, T(0));
        p.b_vel.assign(out_c, T(0));
        return p;
    }

    static LayerParams deconv(int in_c, int out_c, int k, int stride, int pad, int out_pad) {
        LayerParams p;
        p.kind = LayerKind::deconv;
        p.lr_group = LrGroup::deconv_group;
        p.in_c = in_c;
        p.out_c = out_c;
        p.k = k;
        p.stride = stride;
        p.pad = pad;
        p.out_pad = out_pad;
        p.w = Tensor<T>(in_c, out_c, k, k);
        p.w_grad = Tensor<T>(in_c, out_c, k, k);
        p.w_vel = Tensor<T>(in_c, out_c, k, k);
        p.b.assign(out_c, T(0));
        p.b_grad.assign(out_c, T(0));
        p.b_vel.assign(out_c, T(0));
        return p;
    }

    static LayerParams prelu(int channels) {
        LayerParams p;
        p.kind = LayerKind::prelu;
        p.in_c = channels;
        p.out_c = channels;
        p.a.assign(channels, T(0.25));
        p.a_grad.assign(channels, T(0));
        p.a_vel.assign(channels, T(0));
        return p;
    }

    void zero_grads() {
        if (!w_grad.empty()) w_grad.fill(T(0));
        std::fill(b_grad.begin(), b_grad.end(), T(0));
        std::fill(a_grad.begin(), a_grad.end(), T(0));
    }

    std::int64_t param_count() const {
        return (w.empty() ? 0 : w.size()) + static_cast<std::int64_t>(b.size()) +
               static_cast<std::int64_t>(a.size());
    }
};

namespace detail {

inline int conv_out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

inline int deconv_out_extent(int in, int k, int stride, int pad, int out_pad) {
    return (in - 1) * stride - 2 * pad + k + out_pad;
}

// Patch matrix: row q = (c*k + ky)*k + kx, column = output pixel oy*out_w + ox.
template <typename T>
void im2col(const T* src, int C, int H, int W, int k, int stride, int pad, int out_h, int out_w, T* col) {
    const std::int64_t pix = static_cast<std::int64_t>(out_h) * out_w;
    for (int c = 0; c < C; ++c) {
        const T* plane = src + static_cast<std::int64_t>(c) * H * W;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col + (static_cast<std::int64_t>((c * k + ky)) * k + kx) * pix;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    T* drow = dst + static_cast<std::int64_t>(oy) * out_w;
                    if (iy < 0 || iy >= H) {
                        std::fill(drow, drow + out_w, T(0));
                        continue;
                    }
                    const T* srow = plane + static_cast<std::int64_t>(iy) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        drow[ox] = (ix >= 0 && ix < W) ? srow[ix] : T(0);
                    }
                }
            }
    }
}

// Adjoint of im2col: scatter-add columns back into the (C,H,W) image.
template <typename T>
void col2im_add(const T* col, int C, int H, int W, int k, int stride, int pad, int out_h, int out_w, T* dst) {
    const std::int64_t pix = static_cast<std::int64_t>(out_h) * out_w;
    for (int c = 0; c < C; ++c) {
        T* plane = dst + static_cast<std::int64_t>(c) * H * W;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col + (static_cast<std::int64_t>((c * k + ky)) * k + kx) * pix;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    const T* srow = src + static_cast<std::int64_t>(oy) * out_w;
                    T* prow = plane + static_cast<std::int64_t>(iy) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) prow[ix] += srow[ox];
                    }
                }
            }
    }
}

template <typename T>
void axpy(std::int64_t len, T alpha, const T* x, T* y) {
    for (std::int64_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot(std::int64_t len, const T* x, const T* y) {
    T acc = T(0);
    for (std::int64_t i = 0; i < len; ++i) acc += x[i] * y[i];
    return acc;
}

} // namespace detail

// Cross-correlation (CNN convention, no kernel flip) of x with p.w plus bias.
// Output spatial extent (in + 2*pad - k)/stride + 1 per axis.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const LayerParams<T>& p, int stride, int pad) {
    if (p.kind != LayerKind::conv) throw ConfigError("conv2d_forward: layer is not a convolution");
    if (x.c() != p.in_c)
        throw ShapeError("conv2d_forward: input has " + std::to_string(x.c()) + " channels, layer expects " +
                         std::to_string(p.in_c));
    const int out_h = detail::conv_out_extent(x.h(), p.k, stride, pad);
    const int out_w = detail::conv_out_extent(x.w(), p.k, stride, pad);
    if (out_h < 1 || out_w < 1) throw ConfigError("conv2d_forward: non-positive output size");

    Tensor<T> out(x.n(), p.out_c, out_h, out_w);
    const std::int64_t pix = static_cast<std::int64_t>(out_h) * out_w;
    const std::int64_t q_count = static_cast<std::int64_t>(p.in_c) * p.k * p.k;
    std::vector<T> col(static_cast<std::size_t>(q_count * pix));
    for (int in = 0; in < x.n(); ++in) {
        detail::im2col(x.data() + x.offset(in, 0, 0, 0), x.c(), x.h(), x.w(), p.k, stride, pad, out_h, out_w,
                       col.data());
        for (int oc = 0; oc < p.out_c; ++oc) {
            T* orow = out.data() + out.offset(in, oc, 0, 0);
            std::fill(orow, orow + pix, p.b[oc]);
            const T* wrow = p.w.data() + static_cast<std::int64_t>(oc) * q_count;
            for (std::int64_t q = 0; q < q_count; ++q)
                detail::axpy(pix, wrow[q], col.data() + q * pix, orow);
        }
    }
    return out;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const LayerParams<T>& p) {
    return conv2d_forward(x, p, p.stride, p.pad);
}

// Accumulates dL/dW and dL/db into p, returns dL/dx.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, LayerParams<T>& p, const Tensor<T>& grad_out, int stride, int pad) {
    if (p.kind != LayerKind::conv) throw ConfigError("conv2d_backward: layer is not a convolution");
    const int out_h = detail::conv_out_extent(x.h(), p.k, stride, pad);
    const int out_w = detail::conv_out_extent(x.w(), p.k, stride, pad);
    if (grad_out.n() != x.n() || grad_out.c() != p.out_c || grad_out.h() != out_h || grad_out.w() != out_w)
        throw ShapeError("conv2d_backward: grad_out shape (" + grad_out.shape_str() + ") does not match forward output");

    Tensor<T> grad_in(x.n(), x.c(), x.h(), x.w());
    const std::int64_t pix = static_cast<std::int64_t>(out_h) * out_w;
    const std::int64_t q_count = static_cast<std::int64_t>(p.in_c) * p.k * p.k;
    std::vector<T> col(static_cast<std::size_t>(q_count * pix));
    std::vector<T> col_grad(static_cast<std::size_t>(q_count * pix));
    for (int in = 0; in < x.n(); ++in) {
        const T* g = grad_out.data() + grad_out.offset(in, 0, 0, 0);
        for (int oc = 0; oc < p.out_c; ++oc) {
            const T* grow = g + static_cast<std::int64_t>(oc) * pix;
            T acc = T(0);
            for (std::int64_t i = 0; i < pix; ++i) acc += grow[i];
            p.b_grad[oc] += acc;
        }
        detail::im2col(x.data() + x.offset(in, 0, 0, 0), x.c(), x.h(), x.w(), p.k, stride, pad, out_h, out_w,
                       col.data());
        for (int oc = 0; oc < p.out_c; ++oc) {
            const T* grow = g + static_cast<std::int64_t>(oc) * pix;
            T* wg = p.w_grad.data() + static_cast<std::int64_t>(oc) * q_count;
            for (std::int64_t q = 0; q < q_count; ++q) wg[q] += detail::dot(pix, grow, col.data() + q * pix);
        }
        std::fill(col_grad.begin(), col_grad.end(), T(0));
        for (int oc = 0; oc < p.out_c; ++oc) {
            const T* grow = g + static_cast<std::int64_t>(oc) * pix;
            const T* wrow = p.w.data() + static_cast<std::int64_t>(oc) * q_count;
            for (std::int64_t q = 0; q < q_count; ++q)
                detail::axpy(pix, wrow[q], grow, col_grad.data() + q * pix);
        }
        detail::col2im_add(col_grad.data(), x.c(), x.h(), x.w(), p.k, stride, pad, out_h, out_w,
                           grad_in.data() + grad_in.offset(in, 0, 0, 0));
    }
    return grad_in;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, LayerParams<T>& p, const Tensor<T>& grad_out) {
    return conv2d_backward(x, p, grad_out, p.stride, p.pad);
}

// Transposed convolution: the adjoint of a strided convolution, so the output
// extent is (in-1)*stride - 2*pad + k + out_pad. With k=9, pad=4,
// out_pad=stride-1 the output is exactly stride times the input per axis.
template <typename T>
Tensor<T> deconv2d_forward(const Tensor<T>& x, const LayerParams<T>& p, int stride, int pad, int out_pad) {
    if (p.kind != LayerKind::deconv) throw ConfigError("deconv2d_forward: layer is not a deconvolution");
    if (x.c() != p.in_c)
        throw ShapeError("deconv2d_forward: input has " + std::to_string(x.c()) + " channels, layer expects " +
                         std::to_string(p.in_c));
    if (out_pad < 0 || out_pad >= stride) throw ConfigError("deconv2d_forward: out_pad must lie in [0, stride)");
    const int out_h = detail::deconv_out_extent(x.h(), p.k, stride, pad, out_pad);
    const int out_w = detail::deconv_out_extent(x.w(), p.k, stride, pad, out_pad);
    if (out_h < 1 || out_w < 1) throw ConfigError("deconv2d_forward: non-positive output size");

    Tensor<T> out(x.n(), p.out_c, out_h, out_w);
    const std::int64_t pix = static_cast<std::int64_t>(x.h()) * x.w();
    const std::int64_t q_count = static_cast<std::int64_t>(p.out_c) * p.k * p.k;
    std::vector<T> col(static_cast<std::size_t>(q_count * pix));
    for (int in = 0; in < x.n(); ++in) {
        std::fill(col.begin(), col.end(), T(0));
        const T* xs = x.data() + x.offset(in, 0, 0, 0);
        for (int ic = 0; ic < p.in_c; ++ic) {
            const T* xrow = xs + static_cast<std::int64_t>(ic) * pix;
            const T* wrow = p.w.data() + static_cast<std::int64_t>(ic) * q_count;
            for (std::int64_t q = 0; q < q_count; ++q)
                detail::axpy(pix, wrow[q], xrow, col.data() + q * pix);
        }
        T* os = out.data() + out.offset(in, 0, 0, 0);
        for (int oc = 0; oc < p.out_c; ++oc) {
            T* plane = os + static_cast<std::int64_t>(oc) * out_h * out_w;
            std::fill(plane, plane + static_cast<std::int64_t>(out_h) * out_w, p.b[oc]);
        }
        detail::col2im_add(col.data(), p.out_c, out_h, out_w, p.k, stride, pad, x.h(), x.w(), os);
    }
    return out;
}

template <typename T>
Tensor<T> deconv2d_forward(const Tensor<T>& x, const LayerParams<T>& p) {
    return deconv2d_forward(x, p, p.stride, p.pad, p.out_pad);
}

// grad_in is a strided convolution of grad_out with the weights; dL/dW and
// dL/db accumulate into p.
template <typename T>
Tensor<T> deconv2d_backward(const Tensor<T>& x, LayerParams<T>& p, const Tensor<T>& grad_out, int stride, int pad,
                            int out_pad) {
    if (p.kind != LayerKind::deconv) throw ConfigError("deconv2d_backward: layer is not a deconvolution");
    const int out_h = detail::deconv_out_extent(x.h(), p.k, stride, pad, out_pad);
    const int out_w = detail::deconv_out_extent(x.w(), p.k, stride, pad, out_pad);
    if (grad_out.n() != x.n() || grad_out.c() != p.out_c || grad_out.h() != out_h || grad_out.w() != out_w)
        throw ShapeError("deconv2d_backward: grad_out shape (" + grad_out.shape_str() +
                         ") does not match forward output");

    Tensor<T> grad_in(x.n(), x.c(), x.h(), x.w());
    const std::int64_t pix = static_cast<std::int64_t>(x.h()) * x.w();
    const std::int64_t q_count = static_cast<std::int64_t>(p.out_c) * p.k * p.k;
    std::vector<T> col(static_cast<std::size_t>(q_count * pix));
    for (int in = 0; in < x.n(); ++in) {
        const T* g = grad_out.data() + grad_out.offset(in, 0, 0, 0);
        for (int oc = 0; oc < p.out_c; ++oc) {
            const T* plane = g + static_cast<std::int64_t>(oc) * out_h * out_w;
            T acc = T(0);
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(out_h) * out_w; ++i) acc += plane[i];
            p.b_grad[oc] += acc;
        }
        detail::im2col(g, p.out_c, out_h, out_w, p.k, stride, pad, x.h(), x.w(), col.data());
        const T* xs = x.data() + x.offset(in, 0, 0, 0);
        T* gi = grad_in.data() + grad_in.offset(in, 0, 0, 0);
        for (int ic = 0; ic < p.in_c; ++ic) {
            T* girow = gi + static_cast<std::int64_t>(ic) * pix;
            const T* xrow = xs + static_cast<std::int64_t>(ic) * pix;
            const T* wrow = p.w.data() + static_cast<std::int64_t>(ic) * q_count;
            T* wgrow = p.w_grad.data() + static_cast<std::int64_t>(ic) * q_count;
            for (std::int64_t q = 0; q < q_count; ++q) {
                detail::axpy(pix, wrow[q], col.data() + q * pix, girow);
                wgrow[q] += detail::dot(pix, xrow, col.data() + q * pix);
            }
        }
    }
    return grad_in;
}

template <typename T>
Tensor<T> deconv2d_backward(const Tensor<T>& x, LayerParams<T>& p, const Tensor<T>& grad_out) {
    return deconv2d_backward(x, p, grad_out, p.stride, p.pad, p.out_pad);
}

template <typename T>
Tensor<T> prelu_forward(const Tensor<T>& x, const LayerParams<T>& p) {
    if (p.kind != LayerKind::prelu) throw ConfigError("prelu_forward: layer is not a PReLU");
    if (x.c() != static_cast<int>(p.a.size()))
        throw ShapeError("prelu_forward: " + std::to_string(p.a.size()) + " slopes for " + std::to_string(x.c()) +
                         " channels");
    Tensor<T> out(x.n(), x.c(), x.h(), x.w());
    const std::int64_t plane = static_cast<std::int64_t>(x.h()) * x.w();
    for (int in = 0; in < x.n(); ++in)
        for (int ic = 0; ic < x.c(); ++ic) {
            const T slope = p.a[ic];
            const T* src = x.data() + x.offset(in, ic, 0, 0);
            T* dst = out.data() + out.offset(in, ic, 0, 0);
            for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] > T(0) ? src[i] : slope * src[i];
        }
    return out;
}

// Subgradient at x == 0 takes the x <= 0 branch. Slope gradients accumulate
// sum over {x <= 0} of grad_out * x per channel.
template <typename T>
Tensor<T> prelu_backward(const Tensor<T>& x, LayerParams<T>& p, const Tensor<T>& grad_out) {
    if (p.kind != LayerKind::prelu) throw ConfigError("prelu_backward: layer is not a PReLU");
    if (!x.same_shape(grad_out))
        throw ShapeError("prelu_backward: grad_out shape (" + grad_out.shape_str() + ") vs input (" + x.shape_str() +
                         ")");
    Tensor<T> grad_in(x.n(), x.c(), x.h(), x.w());
    const std::int64_t plane = static_cast<std::int64_t>(x.h()) * x.w();
    for (int in = 0; in < x.n(); ++in)
        for (int ic = 0; ic < x.c(); ++ic) {
            const T slope = p.a[ic];
            const T* xs = x.data() + x.offset(in, ic, 0, 0);
            const T* g = grad_out.data() + grad_out.offset(in, ic, 0, 0);
            T* gi = grad_in.data() + grad_in.offset(in, ic, 0, 0);
            T slope_acc = T(0);
            for (std::int64_t i = 0; i < plane; ++i) {
                if (xs[i] > T(0)) {
                    gi[i] = g[i];
                } else {
                    gi[i] = slope * g[i];
                    slope_acc += g[i] * xs[i];
                }
            }
            p.a_grad[ic] += slope_acc;
        }
    return grad_in;
}

// MSRA initialization: weights ~ N(0, 2/fan_in) with fan_in = k*k*in_c,
// biases zero, PReLU slopes 0.25. Deterministic for a given generator state.
template <typename T>
void msra_init(LayerParams<T>& p, Rng& rng) {
    if (p.kind == LayerKind::prelu) {
        std::fill(p.a.begin(), p.a.end(), T(0.25));
        std::fill(p.a_vel.begin(), p.a_vel.end(), T(0));
        return;
    }
    const double fan_in = static_cast<double>(p.k) * p.k * p.in_c;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::int64_t i = 0; i < p.w.size(); ++i) p.w[i] = static_cast<T>(stddev * rng.gaussian());
    std::fill(p.b.begin(), p.b.end(), T(0));
    p.w_vel.fill(T(0));
    std::fill(p.b_vel.begin(), p.b_vel.end(), T(0));
}

template <typename T>
void msra_init(LayerParams<T>& p, std::uint64_t seed) {
    Rng rng(seed);
    msra_init(p, rng);
}

} // namespace csrcnn
