#include "camweight/scene.hpp"

#include <cmath>
#include <numbers>

#include "camweight/errors.hpp"
#include "camweight/rng.hpp"

namespace camweight {

bool Scene::operator==(const Scene& other) const {
  if (seed != other.seed || bounding_radius != other.bounding_radius || blobs.size() != other.blobs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const Blob& a = blobs[i];
    const Blob& b = other.blobs[i];
    if (a.center != b.center || a.radius != b.radius || a.color != b.color || a.peak_density != b.peak_density) {
      return false;
    }
  }
  return true;
}

namespace {

Vec3 random_unit(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Vec3 random_color(Rng& rng) {
  // Saturated colors: one strong channel, the others spread out.
  Vec3 c(rng.uniform(0.05, 0.6), rng.uniform(0.05, 0.6), rng.uniform(0.05, 0.6));
  c[rng.uniform_int(0, 2)] = rng.uniform(0.8, 1.0);
  return c;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneOptions& opts) {
  if (opts.min_blobs < 1 || opts.max_blobs < opts.min_blobs) throw InvalidConfig("blob count range is invalid");
  if (!(opts.max_radius < opts.bounding_radius)) throw InvalidConfig("blobs must fit inside the bounding radius");
  Rng rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.bounding_radius = opts.bounding_radius;
  const int count = rng.uniform_int(opts.min_blobs, opts.max_blobs);
  while (static_cast<int>(scene.blobs.size()) < count) {
    Blob b;
    b.radius = rng.uniform(opts.min_radius, opts.max_radius);
    const double reach = opts.bounding_radius - b.radius;
    b.center = random_unit(rng) * reach * std::cbrt(rng.uniform());
    b.color = random_color(rng);
    b.peak_density = rng.uniform(opts.min_density, opts.max_density);
    if (scene.blobs.size() == 1) {
      const Blob& first = scene.blobs.front();
      if ((first.center - b.center).norm() < 0.5 * (first.radius + b.radius) ||
          (first.color - b.color).norm() < 0.3) {
        continue;
      }
    }
    scene.blobs.push_back(b);
  }
  return scene;
}

Scene canonical_two_blob_scene() {
  Scene s;
  s.seed = 0;
  s.bounding_radius = 1.0;
  s.blobs.push_back({Vec3(0.0, 0.0, 0.45), 0.4, Vec3(0.9, 0.15, 0.1), 30.0});
  s.blobs.push_back({Vec3(0.0, 0.0, -0.45), 0.4, Vec3(0.1, 0.2, 0.9), 30.0});
  return s;
}

RadianceSample field_query(const Scene& scene, const Vec3& point) {
  RadianceSample out;
  Vec3 weighted = Vec3::Zero();
  for (const Blob& b : scene.blobs) {
    const double sigma = 0.5 * b.radius;
    const double d = b.peak_density * std::exp(-(point - b.center).squaredNorm() / (2.0 * sigma * sigma));
    out.density += d;
    weighted += d * b.color;
  }
  if (out.density > 0.0) out.color = weighted / out.density;
  return out;
}

void Frustum::validate() const {
  if (!(z_near > 0.0 && z_near < z_far)) throw InvalidConfig("frustum needs 0 < z_near < z_far");
  if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) throw InvalidConfig("frustum needs 0 < fov_y < pi");
  if (!(aspect > 0.0)) throw InvalidConfig("frustum needs a positive aspect ratio");
}

Vec3 Frustum::ray_direction(double ndc_x, double ndc_y) const {
  const double t = std::tan(0.5 * fov_y);
  const Vec3 local(ndc_x * t * aspect, ndc_y * t, -1.0);
  return pose.rotation() * local;
}

Frustum sample_camera(std::uint64_t seed, const CameraOptions& opts) {
  if (!(opts.min_radius > 0.0 && opts.min_radius <= opts.max_radius)) throw InvalidConfig("camera radius range is invalid");
  Rng rng(seed);
  const Vec3 dir = random_unit(rng);
  const double radius = opts.min_radius == opts.max_radius ? opts.min_radius : rng.uniform(opts.min_radius, opts.max_radius);
  const Vec3 up = std::abs(dir.y()) > 0.999 ? Vec3::UnitZ() : Vec3::UnitY();
  Frustum f;
  f.pose = look_at(dir * radius, Vec3::Zero(), up);
  f.fov_y = opts.fov_y;
  f.aspect = opts.aspect;
  f.z_near = opts.z_near;
  f.z_far = opts.z_far;
  f.validate();
  return f;
}

Frustum sample_close_view(const Frustum& target, double max_angle, std::uint64_t seed, const CameraOptions& opts,
                          int max_attempts) {
  if (!(max_angle > 0.0 && max_angle <= std::numbers::pi)) throw InvalidConfig("max_angle must lie in (0, pi]");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Frustum candidate = sample_camera(derive_seed(seed, static_cast<std::uint64_t>(attempt)), opts);
    if (angle_between(candidate.pose, target.pose) < max_angle) return candidate;
  }
  throw ExhaustedSampling("no camera within the requested angle after " + std::to_string(max_attempts) + " attempts");
}

}  // namespace camweight
