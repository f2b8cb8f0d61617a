#pragma once

#include <string>
#include <vector>

#include "csrcnn/errors.hpp"
#include "csrcnn/tensor.hpp"

namespace csrcnn {

// Luminance plane in [0, 1]. Color sources are converted with the BT.601
// studio-swing transform Y = (65.481 R + 128.553 G + 24.966 B)/255 + 16/255
// and snapped to the 8-bit grid; grayscale sources pass through scaled by
// 1/255. All SR training and metrics run on this plane.
struct ImageY {
    int h = 0, w = 0;
    std::vector<float> v;
    std::string provenance;

    ImageY() = default;
    ImageY(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0f) {
        if (h_ < 1 || w_ < 1) throw ShapeError("ImageY: dimensions must be >= 1");
    }

    float& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    float at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Reads BMP (8-bit palette, 24/32-bit) or PNG rasters. Throws IoError with
// the path on unreadable or unsupported files.
ImageY load_image_y(const std::string& path);

// 8-bit grayscale writers; format picked by extension (.png or .bmp).
void save_image_y(const ImageY& img, const std::string& path);

ImageY crop_image(const ImageY& img, int top, int left, int h, int w);
ImageY rotate90(const ImageY& img, int quarter_turns);

// Round to the 1/255 grid and clamp to [0, 1]; metrics quantize SR outputs
// this way before scoring.
ImageY quantize8(const ImageY& img);

Tensor<float> image_to_tensor(const ImageY& img);
ImageY tensor_to_image(const Tensor<float>& t); // (1,1,h,w) only, clamped to [0,1]

} // namespace csrcnn
