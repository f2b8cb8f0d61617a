#pragma once

#include "csrcnn/image.hpp"

namespace csrcnn {

// PSNR in dB on [0,1]-normalized planes: 10*log10(1/MSE), computed after
// excluding a crop_border-pixel frame on all sides. Identical inputs return
// +infinity.
double psnr(const ImageY& a, const ImageY& b, int crop_border);

// Mean local SSIM, 11x11 Gaussian window with sigma 1.5, C1 = 0.01^2,
// C2 = 0.03^2, averaged over valid window centers of the border-cropped
// region (which must be at least 11x11).
double ssim(const ImageY& a, const ImageY& b, int crop_border);

} // namespace csrcnn
