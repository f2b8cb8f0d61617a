#include "csrcnn/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace csrcnn {

double keys_cubic(double x) {
    x = std::abs(x);
    if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

namespace {

struct AxisTaps {
    int taps = 0;
    std::vector<int> index;    // out * taps source indices, clamped to the axis
    std::vector<double> weight; // matching normalized weights
};

AxisTaps build_axis(int in, int out) {
    AxisTaps ax;
    const double scale = static_cast<double>(out) / in;
    const bool shrink = scale < 1.0;
    const double kscale = shrink ? scale : 1.0;
    const double support = 2.0 / kscale;
    ax.taps = static_cast<int>(std::ceil(support) * 2 + 1);
    ax.index.resize(static_cast<std::size_t>(out) * ax.taps);
    ax.weight.resize(static_cast<std::size_t>(out) * ax.taps);
    for (int o = 0; o < out; ++o) {
        const double u = (o + 0.5) / scale - 0.5;
        const int left = static_cast<int>(std::floor(u - support)) + 1;
        double sum = 0.0;
        for (int t = 0; t < ax.taps; ++t) {
            const int i = left + t;
            const double w = keys_cubic((u - i) * kscale) * kscale;
            ax.index[static_cast<std::size_t>(o) * ax.taps + t] = std::clamp(i, 0, in - 1);
            ax.weight[static_cast<std::size_t>(o) * ax.taps + t] = w;
            sum += w;
        }
        for (int t = 0; t < ax.taps; ++t) ax.weight[static_cast<std::size_t>(o) * ax.taps + t] /= sum;
    }
    return ax;
}

} // namespace

ImageY bicubic_resample(const ImageY& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ConfigError("bicubic_resample: output size must be >= 1");

    const AxisTaps ax_x = build_axis(img.w, out_w);
    std::vector<double> rows(static_cast<std::size_t>(img.h) * out_w);
    for (int y = 0; y < img.h; ++y) {
        const float* src = &img.v[static_cast<std::size_t>(y) * img.w];
        double* dst = &rows[static_cast<std::size_t>(y) * out_w];
        for (int x = 0; x < out_w; ++x) {
            const int* idx = &ax_x.index[static_cast<std::size_t>(x) * ax_x.taps];
            const double* wgt = &ax_x.weight[static_cast<std::size_t>(x) * ax_x.taps];
            double acc = 0.0;
            for (int t = 0; t < ax_x.taps; ++t) acc += wgt[t] * src[idx[t]];
            dst[x] = acc;
        }
    }

    const AxisTaps ax_y = build_axis(img.h, out_h);
    ImageY out(out_h, out_w);
    out.provenance = img.provenance;
    for (int y = 0; y < out_h; ++y) {
        const int* idx = &ax_y.index[static_cast<std::size_t>(y) * ax_y.taps];
        const double* wgt = &ax_y.weight[static_cast<std::size_t>(y) * ax_y.taps];
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int t = 0; t < ax_y.taps; ++t) acc += wgt[t] * rows[static_cast<std::size_t>(idx[t]) * out_w + x];
            out.at(y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return out;
}

} // namespace csrcnn
