#include <doctest.h>

#include "csrcnn/rng.hpp"
#include "csrcnn/tensor.hpp"

using namespace csrcnn;

namespace {

TensorD random_tensor(int n, int c, int h, int w, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(n, c, h, w);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rng.uniform();
    return t;
}

} // namespace

TEST_CASE("tensor shape and indexing invariants") {
    TensorD t(2, 3, 4, 5);
    CHECK(t.size() == 2 * 3 * 4 * 5);
    CHECK_THROWS_AS(TensorD(0, 1, 1, 1), ShapeError);
    CHECK_THROWS_AS(TensorD(1, 1, -2, 1), ShapeError);

    // offset formula round-trips for random coordinates
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int in = static_cast<int>(rng.below(2));
        const int ic = static_cast<int>(rng.below(3));
        const int iy = static_cast<int>(rng.below(4));
        const int ix = static_cast<int>(rng.below(5));
        const std::int64_t off = t.offset(in, ic, iy, ix);
        CHECK(off == ((static_cast<std::int64_t>(in) * 3 + ic) * 4 + iy) * 5 + ix);
        // recover coordinates from the offset
        std::int64_t rem = off;
        const int rx = static_cast<int>(rem % 5);
        rem /= 5;
        const int ry = static_cast<int>(rem % 4);
        rem /= 4;
        const int rc = static_cast<int>(rem % 3);
        rem /= 3;
        CHECK(rx == ix);
        CHECK(ry == iy);
        CHECK(rc == ic);
        CHECK(static_cast<int>(rem) == in);
    }
}

TEST_CASE("pad2d") {
    SUBCASE("pad 0 is the identity") {
        TensorD ones = TensorD::full(1, 1, 2, 2, 1.0);
        TensorD out = pad2d(ones, 0);
        CHECK(out.same_shape(ones));
        for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == ones[i]);
    }
    SUBCASE("1x1 value 5 padded to 3x3") {
        TensorD t = TensorD::full(1, 1, 1, 1, 5.0);
        TensorD out = pad2d(t, 1);
        CHECK(out.h() == 3);
        CHECK(out.w() == 3);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) CHECK(out.at(0, 0, y, x) == ((y == 1 && x == 1) ? 5.0 : 0.0));
    }
    SUBCASE("random tensor matches the copy-with-offset oracle") {
        Rng rng(3);
        TensorD t = random_tensor(2, 3, 4, 4, rng);
        const int pad = 2;
        TensorD out = pad2d(t, pad);
        for (int n = 0; n < out.n(); ++n)
            for (int c = 0; c < out.c(); ++c)
                for (int y = 0; y < out.h(); ++y)
                    for (int x = 0; x < out.w(); ++x) {
                        const int sy = y - pad, sx = x - pad;
                        const double expect =
                            (sy >= 0 && sy < t.h() && sx >= 0 && sx < t.w()) ? t.at(n, c, sy, sx) : 0.0;
                        CHECK(out.at(n, c, y, x) == expect);
                    }
    }
    SUBCASE("negative pad rejected") { CHECK_THROWS_AS(pad2d(TensorD(1, 1, 2, 2), -1), ConfigError); }
}

TEST_CASE("crop2d") {
    Rng rng(4);
    TensorD t = random_tensor(1, 1, 8, 8, rng);

    SUBCASE("full-extent crop is the identity") {
        TensorD out = crop2d(t, 0, 0, 8, 8);
        for (std::int64_t i = 0; i < t.size(); ++i) CHECK(out[i] == t[i]);
    }
    SUBCASE("window matches the direct-index oracle") {
        TensorD out = crop2d(t, 2, 3, 4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(out.at(0, 0, y, x) == t.at(0, 0, 2 + y, 3 + x));
    }
    SUBCASE("out-of-bounds window throws") {
        CHECK_THROWS_AS(crop2d(t, 5, 5, 4, 4), BoundsError);
        CHECK_THROWS_AS(crop2d(t, -1, 0, 4, 4), BoundsError);
    }
}

TEST_CASE("pad2d then crop2d is the identity for all small shapes") {
    Rng rng(5);
    for (int h = 1; h <= 8; ++h)
        for (int w = 1; w <= 8; ++w)
            for (int pad = 1; pad <= 3; ++pad) {
                TensorD t = random_tensor(1, 2, h, w, rng);
                TensorD round = crop2d(pad2d(t, pad), pad, pad, h, w);
                REQUIRE(round.same_shape(t));
                for (std::int64_t i = 0; i < t.size(); ++i) REQUIRE(round[i] == t[i]);
            }
}

TEST_CASE("mean_abs_diff") {
    Rng rng(6);
    TensorD a = random_tensor(1, 1, 3, 3, rng);

    SUBCASE("zero for identical tensors") { CHECK(mean_abs_diff(a, a) == 0.0); }
    SUBCASE("constant offset of 0.5") {
        TensorD b = a;
        for (std::int64_t i = 0; i < b.size(); ++i) b[i] += 0.5;
        CHECK(mean_abs_diff(a, b) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("matches the scalar-loop oracle to 1e-12") {
        TensorD b = random_tensor(1, 1, 3, 3, rng);
        double acc = 0.0;
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) acc += std::abs(a.at(0, 0, y, x) - b.at(0, 0, y, x));
        CHECK(mean_abs_diff(a, b) == doctest::Approx(acc / 9.0).epsilon(1e-12));
    }
    SUBCASE("symmetric, non-negative, zero only on equality") {
        for (int trial = 0; trial < 50; ++trial) {
            TensorD x = random_tensor(1, 2, 3, 2, rng);
            TensorD y = random_tensor(1, 2, 3, 2, rng);
            const double d = mean_abs_diff(x, y);
            CHECK(d >= 0.0);
            CHECK(d == mean_abs_diff(y, x));
            bool equal = true;
            for (std::int64_t i = 0; i < x.size(); ++i) equal = equal && x[i] == y[i];
            CHECK((d == 0.0) == equal);
        }
    }
    SUBCASE("shape mismatch throws") {
        CHECK_THROWS_AS(mean_abs_diff(a, TensorD(1, 1, 3, 4)), ShapeError);
    }
}
