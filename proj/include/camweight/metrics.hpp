#pragma once

#include <limits>

#include "camweight/image.hpp"

namespace camweight {

/// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over all channels, data range 1. Throws DimensionMismatch.
double psnr(const Image& a, const Image& b);

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
/// C2 = 0.03^2, evaluated on every fully covered window position ("valid" mode),
/// per channel, then averaged over windows and channels.
/// Throws DimensionMismatch, or ImageTooSmall when a side is shorter than 11.
double ssim(const Image& a, const Image& b);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
};

MetricReport evaluate(const Image& rendered, const Image& reference);

}  // namespace camweight
