#pragma once

#include <string>
#include <vector>

#include "csrcnn/data.hpp"
#include "csrcnn/image.hpp"
#include "csrcnn/model.hpp"

namespace csrcnn {

// Scale-ratio routing: enter at the earliest stage whose remaining upscale
// product does not exceed the requested factor (the largest available product
// <= factor), falling back to the last stage for sub-2 factors. The LR image
// is bicubic-resized to that stage's input geometry first; for factors
// without an exact product match (e.g. 3 on the default cascade) this
// pre-resize is an upscale, never a crop of information. Output has exactly
// the requested HR shape.
int route_entry_stage(const CascadeModel<float>& model, double factor);

ImageY route_and_superresolve(const CascadeModel<float>& model, const ImageY& lr, double factor, int hr_h, int hr_w);

struct EvalDetail {
    std::string image;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct EvalRow {
    std::string dataset;
    double factor = 0.0;
    std::string method;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    bool pre_resize = false; // routing upscaled the LR input before the entry stage
    std::vector<EvalDetail> detail;
};

struct EvalReport {
    int crop_border_is_factor = 1; // config echo: border equals the scale factor
    std::string channel = "y";
    std::vector<EvalRow> rows;
};

struct BenchmarkOptions {
    bool emit_images = false;
    std::string out_dir;
};

// For each (dataset, factor): LR = bicubic downscale of the prepared HR by
// 1/factor, SR per method ("bicubic", "csrcnn", "identity"), both quantized
// to the 8-bit grid, scored with crop border = factor. `model` may be null
// when no method needs it.
EvalReport benchmark(const CascadeModel<float>* model, const std::vector<PreparedDataset>& datasets,
                     const std::vector<double>& factors, const std::vector<std::string>& methods,
                     const BenchmarkOptions& opts = {});

std::string format_report_text(const EvalReport& report);
std::string format_report_tsv(const EvalReport& report);

} // namespace csrcnn
