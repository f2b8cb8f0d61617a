#include "csrcnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "csrcnn/metrics.hpp"
#include "csrcnn/resample.hpp"

namespace csrcnn {

int route_entry_stage(const CascadeModel<float>& model, double factor) {
    if (factor <= 0.0) throw ConfigError("route: scale factor must be positive");
    if (factor <= 1.0) throw ConfigError("route: scale factor must exceed 1");
    const int K = model.stage_count();
    for (int k = 0; k < K; ++k)
        if (static_cast<double>(model.remaining_scale(k)) <= factor) return k;
    return K - 1;
}

ImageY route_and_superresolve(const CascadeModel<float>& model, const ImageY& lr, double factor, int hr_h, int hr_w) {
    if (hr_h < 1 || hr_w < 1) throw ConfigError("route: HR shape must be positive");
    const int entry = route_entry_stage(model, factor);
    const int remaining = model.remaining_scale(entry);
    const int in_h = std::max(1, static_cast<int>(std::lround(static_cast<double>(hr_h) / remaining)));
    const int in_w = std::max(1, static_cast<int>(std::lround(static_cast<double>(hr_w) / remaining)));

    ImageY staged = (lr.h == in_h && lr.w == in_w) ? lr : bicubic_resample(lr, in_h, in_w);
    Tensor<float> cur = image_to_tensor(staged);
    for (int k = entry; k < model.stage_count(); ++k) cur = stage_forward(model.stages[k], cur);
    ImageY out = tensor_to_image(cur);
    // Exact only when hr divides by the remaining product; odd factor-3 sizes
    // need a final snap to the requested geometry.
    if (out.h != hr_h || out.w != hr_w) out = bicubic_resample(out, hr_h, hr_w);
    out.provenance = lr.provenance;
    return out;
}

namespace {

ImageY run_method(const CascadeModel<float>* model, const std::string& method, const ImageY& hr, const ImageY& lr,
                  double factor) {
    if (method == "bicubic") return bicubic_resample(lr, hr.h, hr.w);
    if (method == "identity") return hr;
    if (method == "csrcnn") {
        if (!model) throw ConfigError("benchmark: method 'csrcnn' needs a model checkpoint");
        return route_and_superresolve(*model, lr, factor, hr.h, hr.w);
    }
    throw ConfigError("benchmark: unknown method '" + method + "'");
}

std::string image_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

std::string format_factor(double f) {
    char buf[32];
    if (f == std::floor(f))
        std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(f));
    else
        std::snprintf(buf, sizeof(buf), "%g", f);
    return buf;
}

std::string format_metric(double v, const char* fmt) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

} // namespace

EvalReport benchmark(const CascadeModel<float>* model, const std::vector<PreparedDataset>& datasets,
                     const std::vector<double>& factors, const std::vector<std::string>& methods,
                     const BenchmarkOptions& opts) {
    if (datasets.empty()) throw ConfigError("benchmark: no datasets given");
    EvalReport report;
    for (const PreparedDataset& ds : datasets) {
        if (ds.images.empty()) throw ConfigError("benchmark: dataset '" + ds.name + "' holds no images");
        for (double factor : factors) {
            const int border = static_cast<int>(std::lround(factor));
            for (const std::string& method : methods) {
                EvalRow row;
                row.dataset = ds.name;
                row.factor = factor;
                row.method = method;
                if (method == "csrcnn" && model)
                    row.pre_resize = model->remaining_scale(route_entry_stage(*model, factor)) != factor;
                for (const PreparedImage& pi : ds.images) {
                    const ImageY& hr = pi.image;
                    const int lr_h = std::max(1, static_cast<int>(std::lround(hr.h / factor)));
                    const int lr_w = std::max(1, static_cast<int>(std::lround(hr.w / factor)));
                    const ImageY lr = bicubic_resample(hr, lr_h, lr_w);
                    const ImageY sr = quantize8(run_method(model, method, hr, lr, factor));

                    EvalDetail d;
                    d.image = image_stem(pi.source_path);
                    d.psnr = psnr(sr, hr, border);
                    d.ssim = ssim(sr, hr, border);
                    row.detail.push_back(d);

                    if (opts.emit_images && !opts.out_dir.empty()) {
                        const std::string name = d.image + "_x" + format_factor(factor) + "_" + method + ".png";
                        save_image_y(sr, (std::filesystem::path(opts.out_dir) / name).string());
                    }
                }
                double psnr_sum = 0.0, ssim_sum = 0.0;
                for (const EvalDetail& d : row.detail) {
                    psnr_sum += d.psnr;
                    ssim_sum += d.ssim;
                }
                row.mean_psnr = psnr_sum / static_cast<double>(row.detail.size());
                row.mean_ssim = ssim_sum / static_cast<double>(row.detail.size());
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

std::string format_report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "dataset      factor  method    PSNR(dB)  SSIM    note\n";
    for (const EvalRow& row : report.rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-12s x%-6s %-9s %8s  %6s  %s\n", row.dataset.c_str(),
                      format_factor(row.factor).c_str(), row.method.c_str(),
                      format_metric(row.mean_psnr, "%.2f").c_str(), format_metric(row.mean_ssim, "%.4f").c_str(),
                      row.pre_resize ? "bicubic pre-resize before entry stage" : "");
        out << line;
    }
    out << "(crop border = scale factor; metrics on the 8-bit-quantized Y plane)\n";
    return out.str();
}

std::string format_report_tsv(const EvalReport& report) {
    std::ostringstream out;
    out << "dataset\tfactor\tmethod\timage\tpsnr\tssim\tpre_resize\n";
    for (const EvalRow& row : report.rows) {
        for (const EvalDetail& d : row.detail)
            out << row.dataset << "\t" << format_factor(row.factor) << "\t" << row.method << "\t" << d.image << "\t"
                << format_metric(d.psnr, "%.6f") << "\t" << format_metric(d.ssim, "%.8f") << "\t"
                << (row.pre_resize ? 1 : 0) << "\n";
        out << row.dataset << "\t" << format_factor(row.factor) << "\t" << row.method << "\tMEAN\t"
            << format_metric(row.mean_psnr, "%.6f") << "\t" << format_metric(row.mean_ssim, "%.8f") << "\t"
            << (row.pre_resize ? 1 : 0) << "\n";
    }
    return out.str();
}

} // namespace csrcnn
