#include "camweight/renderer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "camweight/errors.hpp"
#include "camweight/rng.hpp"

namespace camweight {

namespace {

void check_settings(const RenderSettings& s) {
  if (s.width <= 0 || s.height <= 0 || s.samples <= 0) throw InvalidConfig("render settings must be positive");
}

// One stratified ray through pixel (px, py); one jitter per ray drawn from the pixel's own seed.
struct PixelRay {
  Vec3 origin;
  Vec3 dir;
  double first_depth = 0.0;
  double depth_step = 0.0;
  double step = 0.0;  // world-space segment length

  Vec3 point(int k) const { return origin + dir * (first_depth + k * depth_step); }
};

PixelRay pixel_ray(const Frustum& f, const RenderSettings& s, int px, int py) {
  const double ndc_x = (px + 0.5) / s.width * 2.0 - 1.0;
  const double ndc_y = 1.0 - (py + 0.5) / s.height * 2.0;
  const auto pixel = static_cast<std::uint64_t>(py) * static_cast<std::uint64_t>(s.width) + px;
  Rng rng(derive_seed(s.seed, pixel));
  PixelRay r;
  r.origin = camera_center(f.pose);
  r.dir = f.ray_direction(ndc_x, ndc_y);
  r.depth_step = (f.z_far - f.z_near) / s.samples;
  r.first_depth = f.z_near + rng.uniform() * r.depth_step;
  r.step = r.depth_step * r.dir.norm();
  return r;
}

// Aggregates one ray point over sources with weights, then decodes to (color, density).
inline void decode_weighted(const double* lookups, int sources, const double* w, Vec3& color, double& density) {
  double lam[kLatentDim] = {0.0, 0.0, 0.0, 0.0};
  double validity = 0.0;
  for (int i = 0; i < sources; ++i) {
    const double* l = lookups + static_cast<std::size_t>(i) * kCellChannels;
    for (int c = 0; c < kLatentDim; ++c) lam[c] += w[i] * l[c];
    validity += w[i] * l[kLatentDim];
  }
  const double denom = std::max(validity, kDecoderFloor);
  for (int c = 0; c < 3; ++c) color[c] = std::clamp(lam[c] / denom, 0.0, 1.0);
  density = lam[3];
}

void lookup_ray(std::span<const FeatureVolume> volumes, const PixelRay& ray, int samples, double* out) {
  const int sources = static_cast<int>(volumes.size());
  for (int k = 0; k < samples; ++k) {
    const Vec3 p = ray.point(k);
    for (int i = 0; i < sources; ++i) {
      const VolumeSample vs = sample_volume(volumes[static_cast<std::size_t>(i)], p);
      double* dst = out + (static_cast<std::size_t>(k) * sources + i) * kCellChannels;
      for (int c = 0; c < kLatentDim; ++c) dst[c] = vs.latent[c];
      dst[kLatentDim] = vs.validity;
    }
  }
}

Vec3 composite_weighted(const double* lookups, int samples, int sources, const double* w, double step,
                        std::vector<double>& density, std::vector<Vec3>& color) {
  for (int k = 0; k < samples; ++k) {
    decode_weighted(lookups + static_cast<std::size_t>(k) * sources * kCellChannels, sources, w, color[k],
                    density[k]);
  }
  return composite_ray(density, color, step);
}

void store_pixel(Image& img, int px, int py, const Vec3& rgb) {
  for (int c = 0; c < 3; ++c) img.at(px, py, c) = std::clamp(rgb[c], 0.0, 1.0);
}

}  // namespace

FeatureVolume::FeatureVolume(Frustum frustum, VolumeResolution res) : frustum_(std::move(frustum)), res_(res) {
  frustum_.validate();
  if (res.nx <= 0 || res.ny <= 0 || res.nz <= 0) throw InvalidConfig("volume resolution must be positive");
  data_.assign(cell_count() * kCellChannels, 0.0);
}

Vec3 FeatureVolume::cell_center(int i, int j, int k) const {
  const double ndc_x = (i + 0.5) / res_.nx * 2.0 - 1.0;
  const double ndc_y = (j + 0.5) / res_.ny * 2.0 - 1.0;
  const double depth = frustum_.z_near + (k + 0.5) * (frustum_.z_far - frustum_.z_near) / res_.nz;
  return camera_center(frustum_.pose) + frustum_.ray_direction(ndc_x, ndc_y) * depth;
}

FeatureVolume encode_source_view(const Scene& scene, const Frustum& frustum, VolumeResolution res) {
  FeatureVolume vol(frustum, res);
  const double slab = (frustum.z_far - frustum.z_near) / res.nz;
  for (int j = 0; j < res.ny; ++j) {
    for (int i = 0; i < res.nx; ++i) {
      const double ndc_x = (i + 0.5) / res.nx * 2.0 - 1.0;
      const double ndc_y = (j + 0.5) / res.ny * 2.0 - 1.0;
      const double step = slab * frustum.ray_direction(ndc_x, ndc_y).norm();
      double transmittance = 1.0;
      for (int k = 0; k < res.nz; ++k) {
        // Everything behind the first opaque surface stays zero and invalid.
        if (transmittance < kVisibilityCutoff) break;
        const RadianceSample rs = field_query(scene, vol.cell_center(i, j, k));
        double* cell = vol.cell(i, j, k);
        cell[0] = rs.color[0];
        cell[1] = rs.color[1];
        cell[2] = rs.color[2];
        cell[3] = rs.density;
        cell[4] = 1.0;
        transmittance *= std::exp(-rs.density * step);
      }
    }
  }
  return vol;
}

VolumeSample sample_volume(const FeatureVolume& vol, const Vec3& point) {
  VolumeSample out;
  const Frustum& f = vol.frustum();
  const Vec3 local = f.pose.rotation().transpose() * (point - camera_center(f.pose));
  const double depth = -local.z();
  if (!(depth >= f.z_near && depth <= f.z_far)) return out;
  const double t = std::tan(0.5 * f.fov_y);
  const double ndc_x = local.x() / (depth * t * f.aspect);
  const double ndc_y = local.y() / (depth * t);
  if (!(std::abs(ndc_x) <= 1.0 && std::abs(ndc_y) <= 1.0)) return out;

  const VolumeResolution& res = vol.resolution();
  const double gx = std::clamp((ndc_x + 1.0) * 0.5 * res.nx - 0.5, 0.0, res.nx - 1.0);
  const double gy = std::clamp((ndc_y + 1.0) * 0.5 * res.ny - 0.5, 0.0, res.ny - 1.0);
  const double gz = std::clamp((depth - f.z_near) / (f.z_far - f.z_near) * res.nz - 0.5, 0.0, res.nz - 1.0);
  const int i0 = std::min(static_cast<int>(gx), res.nx - 1);
  const int j0 = std::min(static_cast<int>(gy), res.ny - 1);
  const int k0 = std::min(static_cast<int>(gz), res.nz - 1);
  const int i1 = std::min(i0 + 1, res.nx - 1);
  const int j1 = std::min(j0 + 1, res.ny - 1);
  const int k1 = std::min(k0 + 1, res.nz - 1);
  const double fx = gx - i0;
  const double fy = gy - j0;
  const double fz = gz - k0;

  std::array<double, kCellChannels> acc{};
  const std::array<int, 2> is{i0, i1};
  const std::array<int, 2> js{j0, j1};
  const std::array<int, 2> ks{k0, k1};
  for (int c = 0; c < 8; ++c) {
    const int bx = c & 1;
    const int by = (c >> 1) & 1;
    const int bz = (c >> 2) & 1;
    const double wgt = (bx ? fx : 1.0 - fx) * (by ? fy : 1.0 - fy) * (bz ? fz : 1.0 - fz);
    if (wgt == 0.0) continue;
    const double* cell = vol.cell(is[bx], js[by], ks[bz]);
    for (int ch = 0; ch < kCellChannels; ++ch) acc[ch] += wgt * cell[ch];
  }
  out.latent = Eigen::Vector4d(acc[0], acc[1], acc[2], acc[3]);
  out.validity = acc[4];
  return out;
}

Vec3 composite_ray(std::span<const double> density, std::span<const Vec3> color, double step,
                   std::vector<double>* transmittance) {
  if (density.size() != color.size()) throw DimensionMismatch("composite_ray: density and color lengths differ");
  if (transmittance) transmittance->assign(density.size(), 0.0);
  Vec3 rgb = Vec3::Zero();
  double trans = 1.0;
  for (std::size_t k = 0; k < density.size(); ++k) {
    if (transmittance) (*transmittance)[k] = trans;
    const double decay = std::exp(-density[k] * step);
    rgb += trans * (1.0 - decay) * color[k];
    trans *= decay;
  }
  return rgb;
}

Image render_ground_truth(const Scene& scene, const Frustum& frustum, const RenderSettings& settings) {
  check_settings(settings);
  frustum.validate();
  Image img(settings.width, settings.height);
  std::vector<double> density(static_cast<std::size_t>(settings.samples));
  std::vector<Vec3> color(static_cast<std::size_t>(settings.samples));
  for (int py = 0; py < settings.height; ++py) {
    for (int px = 0; px < settings.width; ++px) {
      const PixelRay ray = pixel_ray(frustum, settings, px, py);
      for (int k = 0; k < settings.samples; ++k) {
        const RadianceSample rs = field_query(scene, ray.point(k));
        density[k] = rs.density;
        color[k] = rs.color;
      }
      store_pixel(img, px, py, composite_ray(density, color, ray.step));
    }
  }
  return img;
}

std::vector<Image> render_novel_views(std::span<const FeatureVolume> volumes, const Frustum& target,
                                      std::span<const WeightVector> weights, const RenderSettings& settings) {
  check_settings(settings);
  target.validate();
  const int sources = static_cast<int>(volumes.size());
  for (const WeightVector& w : weights) {
    if (w.size() != volumes.size()) {
      throw DimensionMismatch("render_novel_view: " + std::to_string(volumes.size()) + " volumes but " +
                              std::to_string(w.size()) + " weights");
    }
  }
  std::vector<Image> images(weights.size(), Image(settings.width, settings.height));
  std::vector<double> lookups(static_cast<std::size_t>(settings.samples) * sources * kCellChannels);
  std::vector<double> density(static_cast<std::size_t>(settings.samples));
  std::vector<Vec3> color(static_cast<std::size_t>(settings.samples));
  for (int py = 0; py < settings.height; ++py) {
    for (int px = 0; px < settings.width; ++px) {
      const PixelRay ray = pixel_ray(target, settings, px, py);
      lookup_ray(volumes, ray, settings.samples, lookups.data());
      for (std::size_t n = 0; n < weights.size(); ++n) {
        const Vec3 rgb = composite_weighted(lookups.data(), settings.samples, sources, weights[n].values().data(),
                                            ray.step, density, color);
        store_pixel(images[n], px, py, rgb);
      }
    }
  }
  return images;
}

Image render_novel_view(std::span<const FeatureVolume> volumes, const Frustum& target, const WeightVector& w,
                        const RenderSettings& settings) {
  return render_novel_views(volumes, target, std::span<const WeightVector>(&w, 1), settings).front();
}

Image render_mean_view(std::span<const FeatureVolume> volumes, const Frustum& target,
                       const RenderSettings& settings) {
  check_settings(settings);
  target.validate();
  if (volumes.empty()) throw DimensionMismatch("render_mean_view: no source volumes");
  const int sources = static_cast<int>(volumes.size());
  Image img(settings.width, settings.height);
  std::vector<double> lookups(static_cast<std::size_t>(settings.samples) * sources * kCellChannels);
  std::vector<double> density(static_cast<std::size_t>(settings.samples));
  std::vector<Vec3> color(static_cast<std::size_t>(settings.samples));
  for (int py = 0; py < settings.height; ++py) {
    for (int px = 0; px < settings.width; ++px) {
      const PixelRay ray = pixel_ray(target, settings, px, py);
      lookup_ray(volumes, ray, settings.samples, lookups.data());
      for (int k = 0; k < settings.samples; ++k) {
        // Plain average of the source latents.
        double sum[kCellChannels] = {0.0, 0.0, 0.0, 0.0, 0.0};
        for (int i = 0; i < sources; ++i) {
          const double* l = lookups.data() + (static_cast<std::size_t>(k) * sources + i) * kCellChannels;
          for (int c = 0; c < kCellChannels; ++c) sum[c] += l[c];
        }
        for (double& v : sum) v /= sources;
        const double denom = std::max(sum[kLatentDim], kDecoderFloor);
        for (int c = 0; c < 3; ++c) color[k][c] = std::clamp(sum[c] / denom, 0.0, 1.0);
        density[k] = sum[3];
      }
      store_pixel(img, px, py, composite_ray(density, color, ray.step));
    }
  }
  return img;
}

RaySampleCache gather_ray_samples(std::span<const FeatureVolume> volumes, const Frustum& target,
                                  const RenderSettings& settings) {
  check_settings(settings);
  target.validate();
  if (volumes.empty()) throw DimensionMismatch("gather_ray_samples: no source volumes");
  RaySampleCache cache;
  cache.width = settings.width;
  cache.height = settings.height;
  cache.samples = settings.samples;
  cache.sources = static_cast<int>(volumes.size());
  const std::size_t pixels = static_cast<std::size_t>(settings.width) * settings.height;
  cache.step.resize(pixels);
  cache.lookups.resize(pixels * cache.stride_pixel());
  for (int py = 0; py < settings.height; ++py) {
    for (int px = 0; px < settings.width; ++px) {
      const std::size_t pixel = static_cast<std::size_t>(py) * settings.width + px;
      const PixelRay ray = pixel_ray(target, settings, px, py);
      cache.step[pixel] = ray.step;
      lookup_ray(volumes, ray, settings.samples, cache.lookups.data() + pixel * cache.stride_pixel());
    }
  }
  return cache;
}

Image composite_image(const RaySampleCache& cache, const WeightVector& w) {
  if (static_cast<int>(w.size()) != cache.sources) throw DimensionMismatch("composite_image: weight count");
  Image img(cache.width, cache.height);
  std::vector<double> density(static_cast<std::size_t>(cache.samples));
  std::vector<Vec3> color(static_cast<std::size_t>(cache.samples));
  for (int py = 0; py < cache.height; ++py) {
    for (int px = 0; px < cache.width; ++px) {
      const std::size_t pixel = static_cast<std::size_t>(py) * cache.width + px;
      const Vec3 rgb = composite_weighted(cache.lookups.data() + pixel * cache.stride_pixel(), cache.samples,
                                          cache.sources, w.values().data(), cache.step[pixel], density, color);
      store_pixel(img, px, py, rgb);
    }
  }
  return img;
}

WeightSensitivity mse_weight_gradient(const RaySampleCache& cache, const WeightVector& w, const Image& reference) {
  if (static_cast<int>(w.size()) != cache.sources) throw DimensionMismatch("mse_weight_gradient: weight count");
  if (reference.width() != cache.width || reference.height() != cache.height) {
    throw DimensionMismatch("mse_weight_gradient: reference image size");
  }
  const int n = cache.samples;
  const int s = cache.sources;
  const double* weights = w.values().data();
  const double norm = 1.0 / (3.0 * static_cast<double>(cache.width) * cache.height);

  WeightSensitivity out;
  out.grad = Eigen::VectorXd::Zero(s);
  out.rendered = Image(cache.width, cache.height);

  std::vector<double> density(static_cast<std::size_t>(n));
  std::vector<double> validity(static_cast<std::size_t>(n));
  std::vector<Vec3> raw_color(static_cast<std::size_t>(n));
  std::vector<Vec3> color(static_cast<std::size_t>(n));
  std::vector<double> trans(static_cast<std::size_t>(n) + 1);
  std::vector<double> alpha(static_cast<std::size_t>(n));

  for (int py = 0; py < cache.height; ++py) {
    for (int px = 0; px < cache.width; ++px) {
      const std::size_t pixel = static_cast<std::size_t>(py) * cache.width + px;
      const double* base = cache.lookups.data() + pixel * cache.stride_pixel();
      const double step = cache.step[pixel];

      // Forward, same arithmetic as composite_weighted.
      Vec3 rgb = Vec3::Zero();
      trans[0] = 1.0;
      for (int k = 0; k < n; ++k) {
        const double* lk = base + static_cast<std::size_t>(k) * s * kCellChannels;
        double lam[kLatentDim] = {0.0, 0.0, 0.0, 0.0};
        double v = 0.0;
        for (int i = 0; i < s; ++i) {
          const double* l = lk + static_cast<std::size_t>(i) * kCellChannels;
          for (int c = 0; c < kLatentDim; ++c) lam[c] += weights[i] * l[c];
          v += weights[i] * l[kLatentDim];
        }
        const double denom = std::max(v, kDecoderFloor);
        for (int c = 0; c < 3; ++c) {
          raw_color[k][c] = lam[c] / denom;
          color[k][c] = std::clamp(raw_color[k][c], 0.0, 1.0);
        }
        density[k] = lam[3];
        validity[k] = v;
        const double decay = std::exp(-density[k] * step);
        alpha[k] = 1.0 - decay;
        rgb += trans[k] * alpha[k] * color[k];
        trans[k + 1] = trans[k] * decay;
      }

      Vec3 g = Vec3::Zero();
      for (int c = 0; c < 3; ++c) {
        const double clamped = std::clamp(rgb[c], 0.0, 1.0);
        out.rendered.at(px, py, c) = clamped;
        const double diff = clamped - reference.at(px, py, c);
        out.loss += diff * diff * norm;
        if (rgb[c] >= 0.0 && rgb[c] <= 1.0) g[c] = 2.0 * diff * norm;
      }
      if (g.isZero()) continue;

      // Backward through compositing, decoder and aggregation.
      Vec3 behind = Vec3::Zero();  // sum over j > k of T_j a_j c_j
      for (int k = n - 1; k >= 0; --k) {
        const double d_density = step * (trans[k + 1] * g.dot(color[k]) - g.dot(behind));
        const Vec3 d_color = trans[k] * alpha[k] * g;
        behind += trans[k] * alpha[k] * color[k];

        const double* lk = base + static_cast<std::size_t>(k) * s * kCellChannels;
        const bool floored = !(validity[k] > kDecoderFloor);
        const double denom = floored ? kDecoderFloor : validity[k];
        for (int i = 0; i < s; ++i) {
          const double* l = lk + static_cast<std::size_t>(i) * kCellChannels;
          double gi = d_density * l[3];
          for (int c = 0; c < 3; ++c) {
            const bool inside = raw_color[k][c] >= 0.0 && raw_color[k][c] <= 1.0;
            if (!inside) continue;
            const double dc = floored ? l[c] / denom : (l[c] - raw_color[k][c] * l[kLatentDim]) / denom;
            gi += d_color[c] * dc;
          }
          out.grad[i] += gi;
        }
      }
    }
  }
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw DimensionMismatch("image sizes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  return a.data().empty() ? 0.0 : sum / static_cast<double>(a.data().size());
}

}  // namespace camweight
