#include "camweight/metrics.hpp"

#include <array>
#include <cmath>

#include "camweight/errors.hpp"

namespace camweight {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same_size(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionMismatch("images differ in size");
  }
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    taps[i] = std::exp(-(x * x) / (2.0 * kWindowSigma * kWindowSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_size(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  if (sum == 0.0) return kPsnrIdentical;
  const double mse = sum / static_cast<double>(a.data().size());
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  check_same_size(a, b);
  if (a.width() < kWindow || a.height() < kWindow) throw ImageTooSmall("SSIM needs images at least 11x11");
  static const std::array<double, kWindow> taps = gaussian_taps();

  const int out_w = a.width() - kWindow + 1;
  const int out_h = a.height() - kWindow + 1;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
        for (int wy = 0; wy < kWindow; ++wy) {
          for (int wx = 0; wx < kWindow; ++wx) {
            const double w = taps[wy] * taps[wx];
            const double va = a.at(x + wx, y + wy, c);
            const double vb = b.at(x + wx, y + wy, c);
            mu_a += w * va;
            mu_b += w * vb;
            aa += w * va * va;
            bb += w * vb * vb;
            ab += w * va * vb;
          }
        }
        const double var_a = aa - mu_a * mu_a;
        const double var_b = bb - mu_b * mu_b;
        const double cov = ab - mu_a * mu_b;
        total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                 ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      }
    }
  }
  return total / (3.0 * out_w * out_h);
}

MetricReport evaluate(const Image& rendered, const Image& reference) {
  return {psnr(rendered, reference), ssim(rendered, reference)};
}

}  // namespace camweight
