#include "camweight/pose.hpp"

#include <algorithm>
#include <cmath>

#include "camweight/errors.hpp"

namespace camweight {

namespace {
constexpr double kOrthonormalTol = 1e-6;
}

bool is_valid_pose(const Mat4& m, std::string* reason) {
  auto fail = [&](const char* why) {
    if (reason) *reason = why;
    return false;
  };
  if (!m.allFinite()) return fail("pose has non-finite entries");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    return fail("bottom row must be (0, 0, 0, 1)");
  }
  const Mat3 r = m.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Mat3::Identity()).norm() >= kOrthonormalTol) {
    return fail("rotation block is not orthonormal");
  }
  if (r.determinant() <= 0.0) return fail("rotation block has non-positive determinant");
  return true;
}

Pose Pose::from_matrix(const Mat4& m) {
  std::string why;
  if (!is_valid_pose(m, &why)) throw InvalidPose(why);
  return Pose(m);
}

Pose Pose::from_rotation_center(const Mat3& rotation, const Vec3& center) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = center;
  return from_matrix(m);
}

Vec3 camera_center(const Pose& p) { return p.matrix().topRightCorner<3, 1>(); }

Vec3 view_direction(const Pose& p) {
  const Vec3 axis = -p.matrix().block<3, 1>(0, 2);
  return axis.normalized();
}

double angle_between(const Pose& a, const Pose& b) {
  const double d = view_direction(a).dot(view_direction(b));
  return std::acos(std::clamp(d, -1.0, 1.0));
}

double pose_norm_distance(const Pose& a, const Pose& b, NormKind kind) {
  const Mat4 diff = a.matrix() - b.matrix();
  switch (kind) {
    case NormKind::L1:
      return diff.cwiseAbs().sum();
    case NormKind::Frobenius:
      return diff.norm();
  }
  return 0.0;
}

double center_distance(const Pose& a, const Pose& b) {
  return (camera_center(a) - camera_center(b)).norm();
}

Pose look_at(const Vec3& eye, const Vec3& center, const Vec3& up) {
  const Vec3 to_center = center - eye;
  const double dist = to_center.norm();
  if (!(dist > 1e-12)) throw DegenerateLookAt("look_at: eye coincides with center");
  const Vec3 forward = to_center / dist;
  const Vec3 side = forward.cross(up);
  if (!(side.norm() > 1e-9 * std::max(1.0, up.norm()))) {
    throw DegenerateLookAt("look_at: up vector is parallel to the viewing direction");
  }
  const Vec3 right = side.normalized();
  const Vec3 true_up = right.cross(forward);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = true_up;
  r.col(2) = -forward;
  return Pose::from_rotation_center(r, eye);
}

void validate_rig(const CameraRig& rig) {
  if (rig.sources.empty()) throw InvalidConfig("camera rig needs at least one source pose");
}

}  // namespace camweight
