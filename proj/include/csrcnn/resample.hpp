#pragma once

#include "csrcnn/image.hpp"

namespace csrcnn {

// Keys cubic kernel, a = -0.5:
//   1.5|x|^3 - 2.5|x|^2 + 1          for |x| <= 1
//   -0.5|x|^3 + 2.5|x|^2 - 4|x| + 2  for 1 < |x| < 2
//   0                                 otherwise
double keys_cubic(double x);

// Separable bicubic resampling (rows then columns) with align-centers
// coordinate mapping src = (dst + 0.5) * (in/out) - 0.5, replicate-border
// sample clamping and per-pixel weight normalization. When an axis shrinks,
// the kernel is dilated by the scale ratio so the result is a proper
// low-pass resample; this is the convention behind the published bicubic
// PSNR baselines. Output is clamped to [0, 1].
ImageY bicubic_resample(const ImageY& img, int out_h, int out_w);

} // namespace csrcnn
