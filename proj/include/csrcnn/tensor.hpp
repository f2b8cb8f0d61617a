#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "csrcnn/errors.hpp"

namespace csrcnn {

// Dense 4-D array in NCHW order, row-major, contiguous. The value type used
// for activations, gradients and image batches everywhere. Training runs
// Tensor<float>; finite-difference checks run Tensor<double>.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    Tensor(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
        if (n < 1 || c < 1 || h < 1 || w < 1)
            throw ShapeError("tensor dimensions must all be >= 1, got (" + shape_str(n, c, h, w) + ")");
        data_.assign(static_cast<std::size_t>(n) * c * h * w, T(0));
    }

    static Tensor full(int n, int c, int h, int w, T value) {
        Tensor t(n, c, h, w);
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    // Offset formula ((n*C + c)*H + y)*W + x; the index round-trip invariant
    // is tested against this exact expression.
    std::int64_t offset(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::int64_t>(in) * c_ + ic) * h_ + iy) * w_ + ix;
    }

    T& at(int in, int ic, int iy, int ix) { return data_[offset(in, ic, iy, ix)]; }
    T at(int in, int ic, int iy, int ix) const { return data_[offset(in, ic, iy, ix)]; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    T operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const {
        return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
    }

    std::string shape_str() const { return shape_str(n_, c_, h_, w_); }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    const std::vector<T>& raw() const { return data_; }
    std::vector<T>& raw() { return data_; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(n_, c_, h_, w_);
        for (std::int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<std::size_t>(i)]);
        return out;
    }

private:
    static std::string shape_str(int n, int c, int h, int w) {
        return std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w);
    }

    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Zero border of `pad` pixels on each spatial side.
template <typename T>
Tensor<T> pad2d(const Tensor<T>& t, int pad) {
    if (pad < 0) throw ConfigError("pad2d: pad must be >= 0");
    if (pad == 0) return t;
    Tensor<T> out(t.n(), t.c(), t.h() + 2 * pad, t.w() + 2 * pad);
    for (int in = 0; in < t.n(); ++in)
        for (int ic = 0; ic < t.c(); ++ic)
            for (int iy = 0; iy < t.h(); ++iy) {
                const T* src = t.data() + t.offset(in, ic, iy, 0);
                T* dst = out.data() + out.offset(in, ic, iy + pad, pad);
                std::copy(src, src + t.w(), dst);
            }
    return out;
}

template <typename T>
Tensor<T> crop2d(const Tensor<T>& t, int top, int left, int h, int w) {
    if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > t.h() || left + w > t.w())
        throw BoundsError("crop2d: window (" + std::to_string(top) + "," + std::to_string(left) + "," +
                          std::to_string(h) + "," + std::to_string(w) + ") outside tensor (" + t.shape_str() + ")");
    Tensor<T> out(t.n(), t.c(), h, w);
    for (int in = 0; in < t.n(); ++in)
        for (int ic = 0; ic < t.c(); ++ic)
            for (int iy = 0; iy < h; ++iy) {
                const T* src = t.data() + t.offset(in, ic, top + iy, left);
                std::copy(src, src + w, out.data() + out.offset(in, ic, iy, 0));
            }
    return out;
}

// Mean absolute difference over all elements; accumulation in double
// regardless of T so the result is stable and order-deterministic.
template <typename T>
double mean_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b))
        throw ShapeError("mean_abs_diff: shape (" + a.shape_str() + ") vs (" + b.shape_str() + ")");
    double acc = 0.0;
    const std::int64_t len = a.size();
    for (std::int64_t i = 0; i < len; ++i) acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc / static_cast<double>(len);
}

} // namespace csrcnn
