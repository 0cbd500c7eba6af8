#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "error.hpp"
#include "geometry.hpp"
#include "test_util.hpp"

using namespace bax;
using namespace bax::geo;

TEST_CASE("rotation_between aligned inputs is identity") {
  const auto r = rotation_between(Vec3(1, 0, 0), Vec3(1, 0, 0));
  CHECK((r.rotation - Mat3::Identity()).norm() < 1e-12);
  CHECK_FALSE(r.antipodal_fallback);
}

TEST_CASE("rotation_between maps x to y") {
  const auto r = rotation_between(Vec3(1, 0, 0), Vec3(0, 1, 0));
  const Vec3 mapped = r.rotation * Vec3(1, 0, 0);
  CHECK((mapped - Vec3(0, 1, 0)).norm() < 1e-9);
  CHECK(is_rotation(r.rotation));
}

TEST_CASE("rotation_between antipodal fallback is a half-turn about z") {
  const auto r = rotation_between(Vec3(1, 0, 0), Vec3(-1, 0, 0));
  CHECK(r.antipodal_fallback);
  CHECK(is_rotation(r.rotation));
  const Mat3 expected = Eigen::AngleAxisd(M_PI, Vec3(0, 0, 1)).toRotationMatrix();
  CHECK((r.rotation - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation_between rejects degenerate directions") {
  CHECK_THROWS_AS(rotation_between(Vec3(0, 0, 0), Vec3(1, 0, 0)), Error);
  CHECK_THROWS_AS(rotation_between(Vec3(1, 0, 0), Vec3::Constant(1e-12)), Error);
}

TEST_CASE("rotation_between property: R a-hat = b-hat away from the singularity") {
  Rng rng(41);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 a = testutil::random_unit(rng);
    Vec3 b = testutil::random_unit(rng);
    if (a.dot(b) <= -1.0 + 1e-6) continue;
    const auto r = rotation_between(a, b);
    worst = std::max(worst, (r.rotation * a - b).norm());
    REQUIRE(is_rotation(r.rotation));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("compose identity and inverse laws") {
  Rng rng(7);
  {
    const Pose p = testutil::random_pose(rng);
    const Pose c = compose(Pose::identity(), p);
    CHECK(testutil::pose_translation_gap(c, p) < 1e-15);
    CHECK(testutil::pose_rotation_gap(c, p) < 1e-15);
  }

  const Pose shift{Mat3::Identity(), Vec3(0.1, 0, 0)};
  CHECK((apply(shift, Vec3(0, 0, 0)) - Vec3(0.1, 0, 0)).norm() < 1e-15);

  for (int i = 0; i < 1000; ++i) {
    const Pose p = testutil::random_pose(rng);
    const Pose back = invert(invert(p));
    CHECK(testutil::pose_translation_gap(p, back) < 1e-12);
    CHECK(testutil::pose_rotation_gap(p, back) < 1e-12);

    const Pose round = compose(p, invert(p));
    CHECK(round.translation.norm() < 1e-9);
    CHECK((round.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("apply preserves distances") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Pose p = testutil::random_pose(rng);
    const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec3 y(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    CHECK((apply(p, x) - apply(p, y)).norm() == doctest::Approx((x - y).norm()).epsilon(1e-12));
  }
}

TEST_CASE("reflect_point across the YZ plane") {
  const Plane yz{Vec3(1, 0, 0), 0.0};
  CHECK((reflect_point(Vec3(0.3, 0.1, 0.2), yz) - Vec3(-0.3, 0.1, 0.2)).norm() < 1e-15);
}

TEST_CASE("reflection is an involution and keeps rotations proper") {
  Rng rng(13);
  const Plane plane{testutil::random_unit(rng), 0.07};
  for (int i = 0; i < 500; ++i) {
    const Pose p = testutil::random_pose(rng);
    const Pose m = reflect_pose(p, plane);
    CHECK(is_rotation(m.rotation));
    const Pose back = reflect_pose(m, plane);
    CHECK(testutil::pose_translation_gap(p, back) < 1e-12);
    CHECK(testutil::pose_rotation_gap(p, back) < 1e-12);
  }
}

TEST_CASE("identity pose on the YZ plane is a fixed point") {
  const Plane yz{Vec3(1, 0, 0), 0.0};
  const Pose m = reflect_pose(Pose::identity(), yz);
  CHECK((m.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.translation.norm() < 1e-15);
}

TEST_CASE("reflect_pose preserves pairwise translation distances") {
  Rng rng(17);
  const Plane plane{testutil::random_unit(rng), -0.12};
  for (int i = 0; i < 200; ++i) {
    const Pose a = testutil::random_pose(rng);
    const Pose b = testutil::random_pose(rng);
    const double before = (a.translation - b.translation).norm();
    const double after = (reflect_pose(a, plane).translation - reflect_pose(b, plane).translation).norm();
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("reflect_remap conjugation agrees with applying the mirror on both sides") {
  Rng rng(19);
  const Plane plane{Vec3(0, 1, 0), 0.05};
  for (int i = 0; i < 200; ++i) {
    const Pose w = testutil::random_pose(rng);
    const Pose wm = reflect_remap(w, plane);
    // Check on points: wm(mirror(x)) == mirror(w(x)).
    const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec3 lhs = apply(wm, reflect_point(x, plane));
    const Vec3 rhs = reflect_point(apply(w, x), plane);
    CHECK((lhs - rhs).norm() < 1e-12);
  }
}

TEST_CASE("interpolate_pose endpoints and midpoint") {
  Rng rng(23);
  const Pose p = testutil::random_pose(rng);
  const Pose q = testutil::random_pose(rng);
  CHECK(testutil::pose_translation_gap(interpolate_pose(p, q, 0.0), p) < 1e-15);
  CHECK(testutil::pose_rotation_gap(interpolate_pose(p, q, 0.0), p) < 1e-12);
  CHECK(testutil::pose_translation_gap(interpolate_pose(p, q, 1.0), q) < 1e-15);
  CHECK(testutil::pose_rotation_gap(interpolate_pose(p, q, 1.0), q) < 1e-12);

  Pose a, b;
  b.translation = Vec3(0.2, 0, 0);
  const Pose mid = interpolate_pose(a, b, 0.5);
  CHECK((mid.translation - Vec3(0.1, 0, 0)).norm() < 1e-15);
  CHECK((mid.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interpolate_pose halves a 90 degree turn") {
  Pose p, q;
  q.rotation = Eigen::AngleAxisd(M_PI / 2.0, Vec3(0, 0, 1)).toRotationMatrix();
  const Pose mid = interpolate_pose(p, q, 0.5);
  const Mat3 expected = Eigen::AngleAxisd(M_PI / 4.0, Vec3(0, 0, 1)).toRotationMatrix();
  CHECK((mid.rotation - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interpolate_pose angle grows linearly in t") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    const Pose p = testutil::random_pose(rng);
    const Pose q = testutil::random_pose(rng);
    const double total = rotation_angle_between(p.rotation, q.rotation);
    for (double t : {0.25, 0.5, 0.75}) {
      const Pose it = interpolate_pose(p, q, t);
      CHECK(rotation_angle_between(p.rotation, it.rotation) == doctest::Approx(t * total).epsilon(1e-9));
    }
  }
}

TEST_CASE("orthonormalize projects back onto SO(3)") {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    Mat3 noisy = testutil::random_rotation(rng);
    noisy(0, 1) += 1e-4;
    const Mat3 fixed = orthonormalize(noisy);
    CHECK(is_rotation(fixed, 1e-12));
  }
}
