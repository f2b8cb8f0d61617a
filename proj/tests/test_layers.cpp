#include <doctest.h>

#include "csrcnn/gradcheck.hpp"
#include "csrcnn/layers.hpp"
#include "oracles.hpp"

using namespace csrcnn;

namespace {

template <typename T>
void fill_random(Tensor<T>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(lo + (hi - lo) * rng.uniform());
}

double max_abs_diff(const TensorD& a, const TensorD& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("conv2d_forward basics") {
    SUBCASE("1x1 unit kernel is the identity") {
        auto p = LayerParams<double>::conv(1, 1, 1, 0);
        p.w[0] = 1.0;
        Rng rng(1);
        TensorD x(1, 1, 4, 4);
        fill_random(x, rng);
        TensorD out = conv2d_forward(x, p, 1, 0);
        CHECK(max_abs_diff(out, x) == 0.0);
    }
    SUBCASE("zero kernel with bias 7 is constant 7") {
        auto p = LayerParams<double>::conv(2, 3, 3, 1);
        p.b.assign(3, 7.0);
        Rng rng(2);
        TensorD x(1, 2, 5, 5);
        fill_random(x, rng);
        TensorD out = conv2d_forward(x, p, 1, 1);
        CHECK(out.c() == 3);
        for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 7.0);
    }
    SUBCASE("random instance matches the direct-loop oracle") {
        Rng rng(3);
        auto p = LayerParams<double>::conv(2, 3, 3, 1);
        fill_random(p.w, rng);
        for (auto& b : p.b) b = rng.uniform();
        TensorD x(2, 2, 5, 5);
        fill_random(x, rng);
        TensorD out = conv2d_forward(x, p, 1, 1);
        TensorD ref = oracle::conv2d(x, p.w, p.b, 1, 1);
        CHECK(max_abs_diff(out, ref) < 1e-12);
    }
    SUBCASE("same-padding preserves spatial size for odd k") {
        auto p = LayerParams<double>::conv(1, 1, 5, 2);
        TensorD x(1, 1, 7, 9);
        TensorD out = conv2d_forward(x, p, 1, 2);
        CHECK(out.h() == 7);
        CHECK(out.w() == 9);
    }
    SUBCASE("channel mismatch throws") {
        auto p = LayerParams<double>::conv(2, 3, 3, 1);
        CHECK_THROWS_AS(conv2d_forward(TensorD(1, 1, 5, 5), p, 1, 1), ShapeError);
    }
}

TEST_CASE("conv2d_backward") {
    Rng rng(4);
    auto p = LayerParams<double>::conv(2, 3, 3, 1);
    fill_random(p.w, rng);
    for (auto& b : p.b) b = rng.uniform();
    TensorD x(1, 2, 5, 5);
    fill_random(x, rng);

    SUBCASE("zero grad_out yields zero gradients") {
        TensorD g(1, 3, 5, 5);
        TensorD gi = conv2d_backward(x, p, g, 1, 1);
        for (std::int64_t i = 0; i < gi.size(); ++i) CHECK(gi[i] == 0.0);
        for (std::int64_t i = 0; i < p.w_grad.size(); ++i) CHECK(p.w_grad[i] == 0.0);
        for (double b : p.b_grad) CHECK(b == 0.0);
    }
    SUBCASE("1x1 identity kernel passes grad through") {
        auto q = LayerParams<double>::conv(1, 1, 1, 0);
        q.w[0] = 1.0;
        TensorD g(1, 1, 4, 4);
        fill_random(g, rng);
        TensorD x1(1, 1, 4, 4);
        fill_random(x1, rng);
        TensorD gi = conv2d_backward(x1, q, g, 1, 0);
        CHECK(max_abs_diff(gi, g) == 0.0);
    }
    SUBCASE("bias grad is the per-channel sum of grad_out") {
        TensorD g(1, 3, 5, 5);
        fill_random(g, rng);
        p.zero_grads();
        conv2d_backward(x, p, g, 1, 1);
        for (int oc = 0; oc < 3; ++oc) {
            double sum = 0.0;
            for (int y = 0; y < 5; ++y)
                for (int xx = 0; xx < 5; ++xx) sum += g.at(0, oc, y, xx);
            CHECK(p.b_grad[static_cast<std::size_t>(oc)] == doctest::Approx(sum).epsilon(1e-12));
        }
    }
    SUBCASE("finite differences confirm all three gradients") {
        TensorD coeffs(1, 3, 5, 5);
        fill_random(coeffs, rng);
        auto r = gradcheck_layer(p, x, coeffs, 1e-4);
        CHECK(r.max_rel_err < 1e-4);
    }
    SUBCASE("grad_out shape mismatch throws") {
        CHECK_THROWS_AS(conv2d_backward(x, p, TensorD(1, 3, 4, 4), 1, 1), ShapeError);
    }
}

TEST_CASE("deconv2d_forward") {
    SUBCASE("size formula: 12x12 -> 24x24 with k=9 s=2 p=4 op=1") {
        auto p = LayerParams<double>::deconv(1, 1, 9, 2, 4, 1);
        TensorD x(1, 1, 12, 12);
        TensorD out = deconv2d_forward(x, p, 2, 4, 1);
        CHECK(out.h() == 24);
        CHECK(out.w() == 24);
    }
    SUBCASE("zero weights with bias 3 gives constant 3") {
        auto p = LayerParams<double>::deconv(2, 1, 9, 2, 4, 1);
        p.b.assign(1, 3.0);
        Rng rng(5);
        TensorD x(1, 2, 4, 4);
        fill_random(x, rng);
        TensorD out = deconv2d_forward(x, p, 2, 4, 1);
        CHECK(out.h() == 8);
        for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 3.0);
    }
    SUBCASE("random instance matches the scatter-add oracle") {
        Rng rng(6);
        auto p = LayerParams<double>::deconv(2, 1, 9, 2, 4, 1);
        fill_random(p.w, rng);
        p.b[0] = rng.uniform();
        TensorD x(1, 2, 4, 4);
        fill_random(x, rng);
        TensorD out = deconv2d_forward(x, p, 2, 4, 1);
        TensorD ref = oracle::deconv2d(x, p.w, p.b, 2, 4, 1);
        CHECK(max_abs_diff(out, ref) < 1e-12);
    }
    SUBCASE("non-positive output size throws") {
        auto p = LayerParams<double>::deconv(1, 1, 3, 2, 4, 1);
        CHECK_THROWS_AS(deconv2d_forward(TensorD(1, 1, 2, 2), p, 2, 4, 1), ConfigError);
    }
}

TEST_CASE("deconv2d_backward") {
    Rng rng(7);
    auto p = LayerParams<double>::deconv(2, 1, 9, 2, 4, 1);
    fill_random(p.w, rng);
    p.b[0] = rng.uniform();
    TensorD x(1, 2, 4, 4);
    fill_random(x, rng);

    SUBCASE("zero grad_out yields zero gradients") {
        TensorD g(1, 1, 8, 8);
        TensorD gi = deconv2d_backward(x, p, g, 2, 4, 1);
        for (std::int64_t i = 0; i < gi.size(); ++i) CHECK(gi[i] == 0.0);
        for (std::int64_t i = 0; i < p.w_grad.size(); ++i) CHECK(p.w_grad[i] == 0.0);
    }
    SUBCASE("single-pixel input, single-tap kernel reduces to a scalar product") {
        // out = w * x + b at the one position the kernel reaches, so
        // dL/dw = g * x, dL/dx = g * w, dL/db = g.
        auto q = LayerParams<double>::deconv(1, 1, 1, 1, 0, 0);
        q.w[0] = 1.75;
        q.b[0] = 0.25;
        TensorD x1 = TensorD::full(1, 1, 1, 1, 3.0);
        TensorD g = TensorD::full(1, 1, 1, 1, 2.0);
        q.zero_grads();
        TensorD gi = deconv2d_backward(x1, q, g, 1, 0, 0);
        CHECK(gi[0] == doctest::Approx(2.0 * 1.75));
        CHECK(q.w_grad[0] == doctest::Approx(2.0 * 3.0));
        CHECK(q.b_grad[0] == doctest::Approx(2.0));
    }
    SUBCASE("finite differences confirm all three gradients") {
        TensorD coeffs(1, 1, 8, 8);
        fill_random(coeffs, rng);
        auto r = gradcheck_layer(p, x, coeffs, 1e-4);
        CHECK(r.max_rel_err < 1e-4);
    }
}

TEST_CASE("prelu") {
    Rng rng(8);
    auto p = LayerParams<double>::prelu(2);

    SUBCASE("slope 0 clamps negatives like ReLU") {
        p.a.assign(2, 0.0);
        TensorD x(1, 2, 2, 2);
        fill_random(x, rng);
        TensorD out = prelu_forward(x, p);
        for (std::int64_t i = 0; i < x.size(); ++i) CHECK(out[i] == (x[i] > 0 ? x[i] : 0.0));
    }
    SUBCASE("slope 1 is the identity") {
        p.a.assign(2, 1.0);
        TensorD x(1, 2, 2, 2);
        fill_random(x, rng);
        TensorD out = prelu_forward(x, p);
        CHECK(max_abs_diff(out, x) == 0.0);
    }
    SUBCASE("x = -2 with slope 0.25 gives -0.5") {
        p.a.assign(2, 0.25);
        TensorD x = TensorD::full(1, 2, 1, 1, -2.0);
        TensorD out = prelu_forward(x, p);
        CHECK(out[0] == doctest::Approx(-0.5));
    }
    SUBCASE("slope count mismatch throws") {
        CHECK_THROWS_AS(prelu_forward(TensorD(1, 3, 2, 2), p), ShapeError);
    }
    SUBCASE("all-positive input passes grad through with zero slope grads") {
        TensorD x(1, 2, 3, 3);
        fill_random(x, rng, 0.1, 1.0);
        TensorD g(1, 2, 3, 3);
        fill_random(g, rng);
        p.zero_grads();
        TensorD gi = prelu_backward(x, p, g);
        CHECK(max_abs_diff(gi, g) == 0.0);
        for (double a : p.a_grad) CHECK(a == 0.0);
    }
    SUBCASE("zero grad_out yields zeros") {
        TensorD x(1, 2, 3, 3);
        fill_random(x, rng);
        TensorD g(1, 2, 3, 3);
        p.zero_grads();
        TensorD gi = prelu_backward(x, p, g);
        for (std::int64_t i = 0; i < gi.size(); ++i) CHECK(gi[i] == 0.0);
        for (double a : p.a_grad) CHECK(a == 0.0);
    }
    SUBCASE("finite differences away from the kink") {
        for (auto& s : p.a) s = 0.1 + 0.5 * rng.uniform();
        TensorD x(1, 2, 3, 3);
        for (std::int64_t i = 0; i < x.size(); ++i) {
            const double mag = 0.01 + rng.uniform();
            x[i] = rng.uniform() < 0.5 ? -mag : mag;
        }
        TensorD coeffs(1, 2, 3, 3);
        fill_random(coeffs, rng);
        auto r = gradcheck_layer(p, x, coeffs, 1e-4);
        CHECK(r.max_rel_err < 1e-4);
    }
}

TEST_CASE("msra_init") {
    SUBCASE("Conv(5, 56, in=1): empirical std within 10% of sqrt(2/25)") {
        auto p = LayerParams<double>::conv(1, 56, 5, 2);
        msra_init(p, std::uint64_t(42));
        double mean = 0.0;
        for (std::int64_t i = 0; i < p.w.size(); ++i) mean += p.w[i];
        mean /= static_cast<double>(p.w.size());
        double var = 0.0;
        for (std::int64_t i = 0; i < p.w.size(); ++i) var += (p.w[i] - mean) * (p.w[i] - mean);
        var /= static_cast<double>(p.w.size());
        const double expect = std::sqrt(2.0 / 25.0); // 0.2828
        CHECK(std::sqrt(var) == doctest::Approx(expect).epsilon(0.10));
        for (double b : p.b) CHECK(b == 0.0);
    }
    SUBCASE("same seed twice gives bit-identical weights") {
        auto p1 = LayerParams<float>::conv(12, 56, 3, 1);
        auto p2 = LayerParams<float>::conv(12, 56, 3, 1);
        msra_init(p1, std::uint64_t(7));
        msra_init(p2, std::uint64_t(7));
        for (std::int64_t i = 0; i < p1.w.size(); ++i) CHECK(p1.w[i] == p2.w[i]);
    }
    SUBCASE("empirical mean within 3*std/sqrt(N) of zero") {
        auto p = LayerParams<double>::conv(12, 56, 3, 1);
        msra_init(p, std::uint64_t(9));
        const double stddev = std::sqrt(2.0 / (3.0 * 3.0 * 12.0));
        double mean = 0.0;
        for (std::int64_t i = 0; i < p.w.size(); ++i) mean += p.w[i];
        mean /= static_cast<double>(p.w.size());
        CHECK(std::abs(mean) < 3.0 * stddev / std::sqrt(static_cast<double>(p.w.size())));
    }
    SUBCASE("prelu slopes initialize to 0.25") {
        auto p = LayerParams<double>::prelu(8);
        msra_init(p, std::uint64_t(1));
        for (double a : p.a) CHECK(a == 0.25);
    }
}

TEST_CASE("adjoint identity: <conv(x), g> == <x, conv_backward_input(g)>") {
    Rng rng(10);
    for (int trial = 0; trial < 8; ++trial) {
        auto p = LayerParams<double>::conv(2, 3, 3, 1);
        fill_random(p.w, rng); // bias stays zero
        TensorD x(1, 2, 6, 6);
        fill_random(x, rng);
        TensorD out = conv2d_forward(x, p, 1, 1);
        TensorD g(out.n(), out.c(), out.h(), out.w());
        fill_random(g, rng);
        p.zero_grads();
        TensorD gi = conv2d_backward(x, p, g, 1, 1);
        double lhs = 0.0, rhs = 0.0;
        for (std::int64_t i = 0; i < out.size(); ++i) lhs += out[i] * g[i];
        for (std::int64_t i = 0; i < x.size(); ++i) rhs += x[i] * gi[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
    // same identity for the transposed convolution
    for (int trial = 0; trial < 8; ++trial) {
        auto p = LayerParams<double>::deconv(2, 1, 9, 2, 4, 1);
        fill_random(p.w, rng);
        TensorD x(1, 2, 4, 4);
        fill_random(x, rng);
        TensorD out = deconv2d_forward(x, p, 2, 4, 1);
        TensorD g(out.n(), out.c(), out.h(), out.w());
        fill_random(g, rng);
        p.zero_grads();
        TensorD gi = deconv2d_backward(x, p, g, 2, 4, 1);
        double lhs = 0.0, rhs = 0.0;
        for (std::int64_t i = 0; i < out.size(); ++i) lhs += out[i] * g[i];
        for (std::int64_t i = 0; i < x.size(); ++i) rhs += x[i] * gi[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("deconv with stride 1, out_pad 0 equals conv with flipped transposed weights") {
    Rng rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        const int k = 3, in_c = 2, out_c = 2, pad = 1;
        auto dp = LayerParams<double>::deconv(in_c, out_c, k, 1, pad, 0);
        fill_random(dp.w, rng);
        for (auto& b : dp.b) b = rng.uniform();

        auto cp = LayerParams<double>::conv(in_c, out_c, k, pad);
        cp.b = dp.b;
        for (int oc = 0; oc < out_c; ++oc)
            for (int ic = 0; ic < in_c; ++ic)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        cp.w.at(oc, ic, ky, kx) = dp.w.at(ic, oc, k - 1 - ky, k - 1 - kx);

        TensorD x(1, in_c, 5, 5);
        fill_random(x, rng);
        TensorD a = deconv2d_forward(x, dp, 1, pad, 0);
        TensorD b = conv2d_forward(x, cp, 1, pad);
        REQUIRE(a.same_shape(b));
        CHECK(max_abs_diff(a, b) < 1e-12);
    }
}

TEST_CASE("output-size formulas over a small exhaustive sweep") {
    for (int k : {1, 3, 5, 9})
        for (int stride : {1, 2, 4})
            for (int pad : {0, 1, 4}) {
                const int in = 12;
                if (in + 2 * pad - k < 0) continue;
                auto p = LayerParams<double>::conv(1, 1, k, pad, stride);
                TensorD x(1, 1, in, in);
                TensorD out = conv2d_forward(x, p, stride, pad);
                CHECK(out.h() == (in + 2 * pad - k) / stride + 1);

                for (int out_pad = 0; out_pad < stride; ++out_pad) {
                    const int expect = (in - 1) * stride - 2 * pad + k + out_pad;
                    auto d = LayerParams<double>::deconv(1, 1, k, stride, pad, out_pad);
                    if (expect < 1) {
                        CHECK_THROWS_AS(deconv2d_forward(x, d, stride, pad, out_pad), ConfigError);
                        continue;
                    }
                    TensorD dout = deconv2d_forward(x, d, stride, pad, out_pad);
                    CHECK(dout.h() == expect);
                }
            }
}

TEST_CASE("fast paths match the naive oracles across k and stride") {
    Rng rng(12);
    int done = 0;
    for (int k : {1, 3, 5, 9})
        for (int stride : {1, 2, 4}) {
            const int pad = k / 2;
            const int in = 8 + static_cast<int>(rng.below(5));
            auto p = LayerParams<double>::conv(2, 2, k, pad, stride);
            fill_random(p.w, rng);
            for (auto& b : p.b) b = rng.uniform();
            TensorD x(1, 2, in, in);
            fill_random(x, rng);
            if ((in + 2 * pad - k) / stride + 1 >= 1) {
                TensorD fast = conv2d_forward(x, p, stride, pad);
                TensorD ref = oracle::conv2d(x, p.w, p.b, stride, pad);
                CHECK(max_abs_diff(fast, ref) < 1e-6);
            }
            for (int out_pad = 0; out_pad < stride; ++out_pad) {
                if ((in - 1) * stride - 2 * pad + k + out_pad < 1) continue;
                auto d = LayerParams<double>::deconv(2, 1, k, stride, pad, out_pad);
                fill_random(d.w, rng);
                d.b[0] = rng.uniform();
                TensorD fast = deconv2d_forward(x, d, stride, pad, out_pad);
                TensorD ref = oracle::deconv2d(x, d.w, d.b, stride, pad, out_pad);
                CHECK(max_abs_diff(fast, ref) < 1e-6);
                ++done;
            }
        }
    CHECK(done > 0);
}

TEST_CASE("gradcheck: zero-weight conv with mean loss is exact in the bias") {
    auto p = LayerParams<double>::conv(1, 2, 3, 1);
    TensorD x(1, 1, 4, 4);
    Rng rng(13);
    fill_random(x, rng);
    // loss = mean of output: coeffs = 1/len
    TensorD coeffs = TensorD::full(1, 2, 4, 4, 1.0 / 32.0);
    auto r = gradcheck_layer(p, x, coeffs, 1e-4);
    CHECK(r.max_rel_err < 1e-10); // linear in the bias, so central diff is exact
}
