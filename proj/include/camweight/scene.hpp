#pragma once

#include <cstdint>
#include <vector>

#include "camweight/pose.hpp"

namespace camweight {

// Isotropic Gaussian density blob with a constant color. The Gaussian's
// standard deviation is radius / 2.
struct Blob {
  Vec3 center = Vec3::Zero();
  double radius = 0.3;
  Vec3 color = Vec3::Ones();
  double peak_density = 20.0;
};

struct Scene {
  std::uint64_t seed = 0;
  std::vector<Blob> blobs;
  double bounding_radius = 1.0;

  bool operator==(const Scene& other) const;
};

struct SceneOptions {
  int min_blobs = 3;
  int max_blobs = 6;
  double bounding_radius = 1.0;
  double min_radius = 0.25;
  double max_radius = 0.45;
  double min_density = 15.0;
  double max_density = 40.0;
};

/// Seeded random scene. With two or more blobs, the first two are guaranteed to
/// differ clearly in color and position, so the scene looks different from different sides.
Scene generate_scene(std::uint64_t seed, const SceneOptions& opts = {});

/// Two blobs on the z axis with distinct colors: a red one at +z, a blue one at -z.
Scene canonical_two_blob_scene();

struct RadianceSample {
  Vec3 color = Vec3::Zero();
  double density = 0.0;
};

/// Analytic ground-truth field: summed densities, density-weighted mean color.
RadianceSample field_query(const Scene& scene, const Vec3& point);

/// Pinhole viewing frustum truncated to [z_near, z_far] along the view axis.
struct Frustum {
  Pose pose;
  double fov_y = 0.6;  // radians, full vertical angle
  double aspect = 1.0;
  double z_near = 2.0;
  double z_far = 6.0;

  /// Throws InvalidConfig when 0 < z_near < z_far or 0 < fov_y < pi fails.
  void validate() const;

  /// World direction through normalized device coordinates (x right, y up, both in
  /// [-1, 1]); scaled so that the point eye + t * dir sits at depth t.
  Vec3 ray_direction(double ndc_x, double ndc_y) const;
};

struct CameraOptions {
  double min_radius = 4.0;
  double max_radius = 4.0;
  double fov_y = 0.6;
  double aspect = 1.0;
  double z_near = 2.0;
  double z_far = 6.0;
};

/// Camera looking at the origin from a direction uniform on the sphere.
Frustum sample_camera(std::uint64_t seed, const CameraOptions& opts = {});

inline constexpr int kCloseViewMaxAttempts = 10000;

/// Rejection-samples sample_camera until the view axis is within max_angle of the
/// target's. Throws ExhaustedSampling after max_attempts candidates.
Frustum sample_close_view(const Frustum& target, double max_angle, std::uint64_t seed,
                          const CameraOptions& opts = {}, int max_attempts = kCloseViewMaxAttempts);

}  // namespace camweight
