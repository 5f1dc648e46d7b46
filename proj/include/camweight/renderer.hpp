#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "camweight/image.hpp"
#include "camweight/scene.hpp"
#include "camweight/weighting.hpp"

namespace camweight {

inline constexpr int kLatentDim = 4;           // r, g, b, density
inline constexpr int kCellChannels = kLatentDim + 1;  // plus validity
inline constexpr double kVisibilityCutoff = 0.05;
inline constexpr double kDecoderFloor = 1e-6;

struct RenderSettings {
  int width = 64;
  int height = 64;
  int samples = 64;  // stratified samples per ray
  std::uint64_t seed = 0;
};

struct VolumeResolution {
  int nx = 48;
  int ny = 48;
  int nz = 32;
};

/// Frustum-aligned grid of latents for one source view. Cells are indexed by
/// pixel column i, pixel row j (bottom to top) and depth slice k, uniform in depth.
class FeatureVolume {
 public:
  FeatureVolume(Frustum frustum, VolumeResolution res);

  const Frustum& frustum() const { return frustum_; }
  const VolumeResolution& resolution() const { return res_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(res_.nx) * res_.ny * res_.nz; }

  /// r, g, b, density, validity of one cell.
  double* cell(int i, int j, int k) { return &data_[offset(i, j, k)]; }
  const double* cell(int i, int j, int k) const { return &data_[offset(i, j, k)]; }

  /// World-space center of a cell.
  Vec3 cell_center(int i, int j, int k) const;

 private:
  std::size_t offset(int i, int j, int k) const {
    return ((static_cast<std::size_t>(k) * res_.ny + j) * res_.nx + i) * kCellChannels;
  }

  Frustum frustum_;
  VolumeResolution res_;
  std::vector<double> data_;
};

struct VolumeSample {
  Eigen::Vector4d latent = Eigen::Vector4d::Zero();
  double validity = 0.0;
};

/// Samples the field at every cell center. Marching each pixel ray front to back,
/// cells whose incoming transmittance is below kVisibilityCutoff are zeroed and marked invalid.
FeatureVolume encode_source_view(const Scene& scene, const Frustum& frustum, VolumeResolution res = {});

/// Trilinear interpolation of latents and validity; zero outside the frustum.
VolumeSample sample_volume(const FeatureVolume& vol, const Vec3& point);

/// Emission-absorption compositing of one ray with a constant segment length:
/// T accumulates exp(-density * step), result = sum T (1 - exp(-density * step)) color.
/// When `transmittance` is non-null it receives T before each sample.
Vec3 composite_ray(std::span<const double> density, std::span<const Vec3> color, double step,
                   std::vector<double>* transmittance = nullptr);

/// Emission-absorption rendering of the analytic field.
Image render_ground_truth(const Scene& scene, const Frustum& frustum, const RenderSettings& settings);

/// Per-point aggregation sum_i w_i l_i(r) followed by the analytic decoder, then compositing.
Image render_novel_view(std::span<const FeatureVolume> volumes, const Frustum& target, const WeightVector& w,
                        const RenderSettings& settings);

/// Renders one image per weight vector, sharing the volume lookups.
std::vector<Image> render_novel_views(std::span<const FeatureVolume> volumes, const Frustum& target,
                                      std::span<const WeightVector> weights, const RenderSettings& settings);

/// Plain-average baseline: averages latents directly, without a weight vector.
Image render_mean_view(std::span<const FeatureVolume> volumes, const Frustum& target,
                       const RenderSettings& settings);

/// Frozen per-ray volume lookups for one target view: everything the renderer
/// needs that does not depend on the weights. Rendering from the cache is
/// bit-identical to render_novel_view with the same settings.
struct RaySampleCache {
  int width = 0;
  int height = 0;
  int samples = 0;
  int sources = 0;
  std::vector<double> step;     // ray segment length per pixel
  std::vector<double> lookups;  // [pixel][sample][source][channel]

  std::size_t stride_pixel() const { return static_cast<std::size_t>(samples) * sources * kCellChannels; }
};

RaySampleCache gather_ray_samples(std::span<const FeatureVolume> volumes, const Frustum& target,
                                  const RenderSettings& settings);

Image composite_image(const RaySampleCache& cache, const WeightVector& w);

struct WeightSensitivity {
  double loss = 0.0;           // mean squared error over all pixels and channels
  Eigen::VectorXd grad;        // d loss / d w_i
  Image rendered;
};

/// MSE against `reference` and its exact gradient with respect to the weights.
WeightSensitivity mse_weight_gradient(const RaySampleCache& cache, const WeightVector& w, const Image& reference);

/// Mean squared error over all pixels and channels. Throws DimensionMismatch.
double mean_squared_error(const Image& a, const Image& b);

}  // namespace camweight
