#include "geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace bax::geo {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace

AlignmentRotation rotation_between(const Vec3& a, const Vec3& b) {
  if (a.norm() <= kVecEps || b.norm() <= kVecEps) {
    fail(Errc::degenerate_vector, "rotation_between: input direction below 1e-9");
  }
  const Vec3 ah = a.normalized();
  const Vec3 bh = b.normalized();
  const double c = ah.dot(bh);

  if (c < -1.0 + 1e-12) {
    // Opposed directions: half-turn about a perpendicular axis chosen by the
    // smallest-component rule so the result is platform-deterministic.
    int k = 0;
    for (int i = 1; i < 3; ++i) {
      if (std::abs(ah[i]) <= std::abs(ah[k])) k = i;
    }
    Vec3 axis = Vec3::Unit(k) - ah[k] * ah;
    axis.normalize();
    return {2.0 * axis * axis.transpose() - Mat3::Identity(), true};
  }

  const Vec3 v = ah.cross(bh);
  const Mat3 vx = skew(v);
  // Rodrigues alignment: I + [v]x + [v]x^2 / (1 + c); v = a-hat x b-hat.
  return {Mat3::Identity() + vx + vx * vx / (1.0 + c), false};
}

Pose compose(const Pose& p, const Pose& q) {
  return {p.rotation * q.rotation, p.rotation * q.translation + p.translation};
}

Pose invert(const Pose& p) {
  const Mat3 rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

Vec3 apply(const Pose& p, const Vec3& x) { return p.rotation * x + p.translation; }

Mat3 reflection_matrix(const Plane& plane) {
  const Vec3 n = plane.normal.normalized();
  return Mat3::Identity() - 2.0 * n * n.transpose();
}

Vec3 reflect_point(const Vec3& x, const Plane& plane) {
  const Vec3 n = plane.normal.normalized();
  return x - 2.0 * (n.dot(x) - plane.offset) * n;
}

Pose reflect_pose(const Pose& p, const Plane& plane) {
  const Mat3 s = reflection_matrix(plane);
  return {s * p.rotation * s, reflect_point(p.translation, plane)};
}

Pose reflect_remap(const Pose& w, const Plane& plane) {
  const Mat3 s = reflection_matrix(plane);
  const Vec3 m = 2.0 * plane.offset * plane.normal.normalized();
  // M o W o M^-1 with M(x) = S x + m and M^-1(x) = S(x - m).
  return {s * w.rotation * s, m + s * w.translation - s * w.rotation * s * m};
}

Pose interpolate_pose(const Pose& p, const Pose& q, double t) {
  Eigen::Quaterniond qp(p.rotation);
  Eigen::Quaterniond qq(q.rotation);
  Pose out;
  out.rotation = qp.slerp(t, qq).toRotationMatrix();
  out.translation = (1.0 - t) * p.translation + t * q.translation;
  return out;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 e = a.transpose() * b;
  // Recover the angle from both the trace and the skew part; asin is accurate
  // near identity, acos near a half-turn.
  const Vec3 ax(0.5 * (e(2, 1) - e(1, 2)), 0.5 * (e(0, 2) - e(2, 0)), 0.5 * (e(1, 0) - e(0, 1)));
  const double s = std::clamp(ax.norm(), 0.0, 1.0);
  const double c = std::clamp(0.5 * (e.trace() - 1.0), -1.0, 1.0);
  return std::atan2(s, c);
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    out = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return out;
}

}  // namespace bax::geo
