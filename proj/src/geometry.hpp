#pragma once

#include <Eigen/Dense>

namespace bax::geo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kVecEps = 1e-9;       // minimum usable direction norm
inline constexpr double kOrthoTol = 1e-9;     // rotation orthonormality tolerance

// Rigid transform acting as x_out = rotation * x_in + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
};

// Points x on the plane satisfy normal.dot(x) == offset, with unit normal.
struct Plane {
  Vec3 normal{1.0, 0.0, 0.0};
  double offset = 0.0;
};

struct AlignmentRotation {
  Mat3 rotation;
  bool antipodal_fallback = false;  // set when inputs were opposed and the fixed-axis rule kicked in
};

// Minimal-angle rotation taking direction a to direction b. Antipodal inputs
// fall back to a half-turn about a deterministic perpendicular axis (the unit
// basis vector with the smallest |component| of a-hat, projected orthogonal
// to a-hat). Throws Errc::degenerate_vector for near-zero inputs.
AlignmentRotation rotation_between(const Vec3& a, const Vec3& b);

Pose compose(const Pose& p, const Pose& q);
Pose invert(const Pose& p);
Vec3 apply(const Pose& p, const Vec3& x);

// Householder reflection matrix I - 2 n n^T of the plane's normal.
Mat3 reflection_matrix(const Plane& plane);

Vec3 reflect_point(const Vec3& x, const Plane& plane);

// Mirrors a *frame*: translation is reflected, rotation becomes S*R*S so the
// result stays a proper rotation whose approach axis is the geometric mirror
// of the original (valid for symmetric parallel-jaw grippers).
Pose reflect_pose(const Pose& p, const Plane& plane);

// Mirrors a *task-frame remap* (a map applied on the left of frames): the
// conjugation M o W o M^-1 by the plane's improper isometry M. Distinct from
// reflect_pose, which mirrors the frame itself.
Pose reflect_remap(const Pose& w, const Plane& plane);

// Linear translation, shortest-geodesic rotation; t in [0, 1].
Pose interpolate_pose(const Pose& p, const Pose& q, double t);

// Geodesic distance between two rotations, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

bool is_rotation(const Mat3& r, double tol = kOrthoTol);

// Re-projects a nearly-orthonormal matrix onto SO(3).
Mat3 orthonormalize(const Mat3& r);

}  // namespace bax::geo
