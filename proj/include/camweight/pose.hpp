#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace camweight {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid camera-to-world transform.
///
/// Convention: right-handed, y-up, the camera looks down its local -z axis.
/// The upper-left 3x3 block is the camera orientation, the top of the fourth
/// column is the camera center in world units and the bottom row is exactly
/// (0, 0, 0, 1). Every Pose instance satisfies these invariants; construction
/// from an arbitrary matrix goes through from_matrix(), which validates.
class Pose {
 public:
  Pose() : m_(Mat4::Identity()) {}

  /// Throws InvalidPose when the matrix is not a proper rigid transform.
  static Pose from_matrix(const Mat4& m);
  static Pose from_rotation_center(const Mat3& rotation, const Vec3& center);

  const Mat4& matrix() const { return m_; }
  Mat3 rotation() const { return m_.topLeftCorner<3, 3>(); }

  bool operator==(const Pose& other) const { return m_ == other.m_; }

 private:
  explicit Pose(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

/// Checks the Pose invariants; on failure writes a reason when one is requested.
bool is_valid_pose(const Mat4& m, std::string* reason = nullptr);

Vec3 camera_center(const Pose& p);

/// World-space principal view axis, -(third column of R), unit length.
Vec3 view_direction(const Pose& p);

/// Angle in [0, pi] between the view axes of two poses.
double angle_between(const Pose& a, const Pose& b);

enum class NormKind { L1, Frobenius };

/// Entrywise L1 or Frobenius norm of a.matrix() - b.matrix().
double pose_norm_distance(const Pose& a, const Pose& b, NormKind kind);

double center_distance(const Pose& a, const Pose& b);

/// Camera at `eye` looking toward `center`. Throws DegenerateLookAt when eye
/// and center coincide or `up` is parallel to the viewing direction.
Pose look_at(const Vec3& eye, const Vec3& center, const Vec3& up = Vec3::UnitY());

/// A target pose and the ordered list of source poses it is synthesized from.
struct CameraRig {
  Pose target;
  std::vector<Pose> sources;

  std::size_t size() const { return sources.size(); }
};

/// Throws InvalidConfig when the rig has no sources.
void validate_rig(const CameraRig& rig);

}  // namespace camweight
