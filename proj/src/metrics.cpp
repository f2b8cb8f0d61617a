#include "csrcnn/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace csrcnn {

namespace {

void check_pair(const ImageY& a, const ImageY& b, int crop_border, int min_size, const char* who) {
    if (a.h != b.h || a.w != b.w)
        throw ShapeError(std::string(who) + ": image sizes differ (" + std::to_string(a.h) + "x" + std::to_string(a.w) +
                         " vs " + std::to_string(b.h) + "x" + std::to_string(b.w) + ")");
    if (crop_border < 0) throw ConfigError(std::string(who) + ": crop_border must be >= 0");
    if (a.h - 2 * crop_border < min_size || a.w - 2 * crop_border < min_size)
        throw ConfigError(std::string(who) + ": cropped region smaller than " + std::to_string(min_size) + "x" +
                          std::to_string(min_size));
}

std::array<double, 11> gaussian_window_1d() {
    std::array<double, 11> g{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5.0;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (auto& v : g) v /= sum;
    return g;
}

} // namespace

double psnr(const ImageY& a, const ImageY& b, int crop_border) {
    check_pair(a, b, crop_border, 1, "psnr");
    double acc = 0.0;
    std::int64_t count = 0;
    for (int y = crop_border; y < a.h - crop_border; ++y)
        for (int x = crop_border; x < a.w - crop_border; ++x) {
            const double d = static_cast<double>(a.at(y, x)) - b.at(y, x);
            acc += d * d;
            ++count;
        }
    const double mse = acc / static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageY& a, const ImageY& b, int crop_border) {
    check_pair(a, b, crop_border, 11, "ssim");
    const int h = a.h - 2 * crop_border;
    const int w = a.w - 2 * crop_border;
    const auto g = gaussian_window_1d();
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;

    // Separable passes over the cropped region: weighted x, y, x^2, y^2, x*y.
    auto cropped = [&](const ImageY& img, int y, int x) { return static_cast<double>(img.at(y + crop_border, x + crop_border)); };
    const int rows = h, cols = w;
    const int out_cols = cols - 10;
    std::vector<double> mx(static_cast<std::size_t>(rows) * out_cols), my(mx.size()), mxx(mx.size()), myy(mx.size()),
        mxy(mx.size());
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < out_cols; ++x) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int t = 0; t < 11; ++t) {
                const double va = cropped(a, y, x + t);
                const double vb = cropped(b, y, x + t);
                const double wt = g[static_cast<std::size_t>(t)];
                sx += wt * va;
                sy += wt * vb;
                sxx += wt * va * va;
                syy += wt * vb * vb;
                sxy += wt * va * vb;
            }
            const std::size_t at = static_cast<std::size_t>(y) * out_cols + x;
            mx[at] = sx;
            my[at] = sy;
            mxx[at] = sxx;
            myy[at] = syy;
            mxy[at] = sxy;
        }

    const int out_rows = rows - 10;
    double ssim_sum = 0.0;
    for (int y = 0; y < out_rows; ++y)
        for (int x = 0; x < out_cols; ++x) {
            double mu_x = 0, mu_y = 0, ex2 = 0, ey2 = 0, exy = 0;
            for (int t = 0; t < 11; ++t) {
                const std::size_t at = static_cast<std::size_t>(y + t) * out_cols + x;
                const double wt = g[static_cast<std::size_t>(t)];
                mu_x += wt * mx[at];
                mu_y += wt * my[at];
                ex2 += wt * mxx[at];
                ey2 += wt * myy[at];
                exy += wt * mxy[at];
            }
            const double var_x = ex2 - mu_x * mu_x;
            const double var_y = ey2 - mu_y * mu_y;
            const double cov = exy - mu_x * mu_y;
            const double num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
            const double den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
            ssim_sum += num / den;
        }
    return ssim_sum / (static_cast<double>(out_rows) * out_cols);
}

} // namespace csrcnn
