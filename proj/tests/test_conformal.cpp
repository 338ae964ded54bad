#include <gtest/gtest.h>

#include <random>

#include "conicam/conformal.hpp"
#include "conicam/synth.hpp"
#include "oracles.hpp"

using namespace conicam;
using oracle::kDeg;

namespace {

HomPoint P(double x, double y, double w = 1.0) { return HomPoint(x, y, w); }

// Image of a world direction for a camera (vanishing point).
HomPoint vanishing(const synth::SyntheticCamera& cam, const Vec3& d) {
  return HomPoint(Vec3(cam.k().matrix() * cam.rotation() * d));
}

Vec3 heading_dir(double phi) { return {std::cos(phi), std::sin(phi), 0.0}; }

struct Scene {
  CalibrationMatrix k;
  synth::SyntheticCamera cam;
  HomLine horizon;
};

Scene ground_scene(double f, double px, double py, double pitch, double heading = 0.0) {
  const CalibrationMatrix k = CalibrationMatrix::square(f, px, py);
  const synth::SyntheticCamera cam = synth::ground_camera(k, {0.0, 0.0, heading}, 1.0, pitch);
  return {k, cam, synth::true_horizon(cam).line};
}

}  // namespace

TEST(ConformalPoint, HorizonThroughPrincipalPoint) {
  const CalibrationMatrix k = CalibrationMatrix::square(1, 0, 0);
  const ConformalPair pair = conformal_points_from_k(HomLine(0, 1, 0), k);
  std::vector<double> ys{pair.above.position().y(), pair.below.position().y()};
  std::sort(ys.begin(), ys.end());
  EXPECT_NEAR(ys[0], -1.0, 1e-15);
  EXPECT_NEAR(ys[1], 1.0, 1e-15);
  const Conic c = calibrating_conic_from_k(k).conic;
  EXPECT_NEAR(c.residual(pair.above.point), 0.0, 1e-15);
  EXPECT_NEAR(c.residual(pair.below.point), 0.0, 1e-15);
}

TEST(ConformalPoint, OffsetHorizon) {
  const CalibrationMatrix k = CalibrationMatrix::square(1, 0, 0);
  const ConformalPair pair = conformal_points_from_k(HomLine(0, 1, -0.5), k);
  std::vector<double> ys{pair.above.position().y(), pair.below.position().y()};
  std::sort(ys.begin(), ys.end());
  EXPECT_NEAR(ys[0], 0.5 - std::sqrt(1.25), 1e-15);
  EXPECT_NEAR(ys[1], 0.5 + std::sqrt(1.25), 1e-15);
  EXPECT_NEAR(pair.above.position().x(), 0.0, 1e-15);
}

TEST(ConformalPoint, BranchesMirrorAndExactlyOneInsideConic) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(-500, 500);
  for (int i = 0; i < 300; ++i) {
    const auto r = oracle::random_k(rng, true);
    const CalibrationMatrix k = CalibrationMatrix::square(r.fx, r.px, r.py);
    const HomLine l(u(rng), u(rng), u(rng) * 1000);
    const ConformalPair pair = conformal_points_from_k(l, k);
    const Vec2 a = pair.above.position();
    const Vec2 b = pair.below.position();
    EXPECT_NEAR(signed_distance(a, l), -signed_distance(b, l),
                1e-9 * std::abs(signed_distance(a, l)));
    EXPECT_LT(((a + b) / 2 - euclidean(foot_of_perpendicular(to_hom(a), l))).norm(),
              1e-9 * (a - b).norm());
    const double ra = std::hypot(a.x() - r.px, a.y() - r.py);
    const double rb = std::hypot(b.x() - r.px, b.y() - r.py);
    EXPECT_TRUE((ra < r.fx) != (rb < r.fx));
  }
}

TEST(ConformalPoint, RequiresSquarePixels) {
  EXPECT_THROW(conformal_point_from_k(HomLine(0, 1, -1), CalibrationMatrix(1, 1.1, 0, 0, 0)),
               PreconditionError);
  EXPECT_THROW(conformal_point_from_k(HomLine(0, 1, -1), CalibrationMatrix(1, 1, 0.1, 0, 0)),
               PreconditionError);
}

TEST(ConformalPoint, DefaultBranchIsAcrossTheHorizonFromThePrincipalPoint) {
  const CalibrationMatrix k = CalibrationMatrix::square(1, 0, 0);
  const HomLine l(0, 1, -0.5);  // y = 0.5; principal point on the negative side
  const ConformalPoint cp = conformal_point_from_k(l, k);
  EXPECT_GT(signed_distance(cp.position(), l), 0.0);
  EXPECT_EQ(conformal_point_from_k(l, k, Branch::below).branch, Branch::below);
}

TEST(ConformalPointFromConic, MatchesFormula) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 300; ++i) {
    const auto r = oracle::random_k(rng, true);
    const CalibrationMatrix k = CalibrationMatrix::square(r.fx, r.px, r.py);
    const HomLine l(u(rng), u(rng), -(u(rng) * r.px + u(rng) * r.py + 300 * u(rng)));
    for (Branch b : {Branch::above, Branch::below}) {
      const Vec2 a = conformal_point_from_k(l, k, b).position();
      const Vec2 c = conformal_point_from_conic(l, calibrating_conic_from_k(k), b).position();
      EXPECT_LT((a - c).norm(), 1e-9 * r.fx);
    }
  }
}

TEST(ConformalPointFromConic, UnitCircleExample) {
  const CalibratingConic c = calibrating_conic_from_k(CalibrationMatrix::square(1, 0, 0));
  const Vec2 x = conformal_point_from_conic(HomLine(0, 1, -0.5), c, Branch::below).position();
  EXPECT_NEAR(std::abs(x.y() - 0.5), std::sqrt(1.25), 1e-12);
}

TEST(ConformalPointFromConic, HorizonThroughCentreGivesPointOnConic) {
  const CalibratingConic c = calibrating_conic_from_k(CalibrationMatrix::square(3, 1, 2));
  const ConformalPoint cp = conformal_point_from_conic(HomLine(1, 1, -3), c);
  EXPECT_NEAR(c.conic.residual(cp.point), 0.0, 1e-12);
}

TEST(ConformalPointFromConic, RejectsEllipse) {
  const CalibratingConic c = calibrating_conic_from_k(CalibrationMatrix(1, 2, 0, 0, 0));
  EXPECT_THROW(conformal_point_from_conic(HomLine(0, 1, -1), c), PreconditionError);
}

TEST(PlaneAngle, SquareTileOnTheGround) {
  const Scene s = ground_scene(800, 320, 240, 30 * kDeg, 0.2);
  const Vec3 corners[4] = {{3, -0.5, 0}, {4, -0.5, 0}, {4, 0.5, 0}, {3, 0.5, 0}};
  HomPoint x[4] = {P(0, 0), P(0, 0), P(0, 0), P(0, 0)};
  for (int i = 0; i < 4; ++i) x[i] = s.cam.project(corners[i]);
  // Extend opposite edges to their vanishing points.
  const HomPoint va = meet(join(x[0], x[1]), join(x[3], x[2]));
  const HomPoint vb = meet(join(x[0], x[3]), join(x[1], x[2]));
  const HomPoint vd = meet(join(x[0], x[2]), s.horizon);
  for (Branch b : {Branch::above, Branch::below}) {
    const ConformalPoint cp = conformal_point_from_k(s.horizon, s.k, b);
    EXPECT_NEAR(plane_angle({va, vb}, cp).degrees(), 90.0, 1e-7);
    EXPECT_NEAR(plane_angle({va, vd}, cp).degrees(), 45.0, 1e-7);
  }
}

TEST(PlaneAngle, EqualVanishingPointsGiveZero) {
  const Scene s = ground_scene(800, 320, 240, 30 * kDeg, 0.2);
  const HomPoint v = vanishing(s.cam, heading_dir(0.4));
  EXPECT_NEAR(plane_angle({v, v}, conformal_point_from_k(s.horizon, s.k)).degrees(), 0.0, 1e-12);
}

TEST(PlaneAngle, MatchesRayAngleOnRandomCameras) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> pitch(5 * kDeg, 80 * kDeg);
  std::uniform_real_distribution<double> ang(-1.2, 1.2);
  for (int i = 0; i < 500; ++i) {
    const auto r = oracle::random_k(rng, true);
    const Scene s = ground_scene(r.fx, r.px, r.py, pitch(rng), ang(rng));
    const double h = std::atan2(s.cam.rotation()(2, 1), s.cam.rotation()(2, 0));
    const double a = h + ang(rng);
    const double b = h + ang(rng);
    const HomPoint va = vanishing(s.cam, heading_dir(a));
    const HomPoint vb = vanishing(s.cam, heading_dir(b));
    const ConformalPoint cp = conformal_point_from_k(s.horizon, s.k);
    const double got = plane_angle({va, vb}, cp).theta;
    EXPECT_NEAR(got, std::abs(oracle::wrap(a - b)), 1e-9);
    EXPECT_NEAR(std::cos(got), angle_algebraic(va, vb, s.k).cos_theta, 1e-9);
  }
}

TEST(PlaneAngle, VanishingPointOffHorizonThrows) {
  const Scene s = ground_scene(800, 320, 240, 30 * kDeg);
  const ConformalPoint cp = conformal_point_from_k(s.horizon, s.k);
  EXPECT_THROW(plane_angle({P(0, 500), vanishing(s.cam, heading_dir(0.3))}, cp),
               PreconditionError);
}

TEST(FocalReflectedPolar, WorkedExample) {
  const ReflectedPolarFocal r = focal_reflected_polar_method({2, 0}, {-0.5, 1}, {0, 0});
  EXPECT_NEAR(r.d.x(), -0.5, 1e-15);
  EXPECT_NEAR(r.d.y(), 0.0, 1e-15);
  EXPECT_NEAR(r.x, 0.5, 1e-15);
  EXPECT_NEAR(r.h, 2.0, 1e-15);
  EXPECT_NEAR(r.focal, 1.0, 1e-15);
}

TEST(FocalReflectedPolar, SymmetricPair) {
  const ReflectedPolarFocal r = focal_reflected_polar_method({7, 0}, {-7, 0}, {0, 0});
  EXPECT_NEAR(r.h, 7.0, 1e-12);
  EXPECT_NEAR(r.x, 7.0, 1e-12);
  EXPECT_NEAR(r.focal, 7.0, 1e-12);
}

TEST(FocalReflectedPolar, Errors) {
  EXPECT_THROW(focal_reflected_polar_method({0, 0}, {1, 1}, {0, 0}), DegenerateError);
  EXPECT_THROW(focal_reflected_polar_method({2, 0}, {3, 1}, {0, 0}), DegenerateError);
}

TEST(FocalConformal, WorkedExample) {
  const ConformalFocal c = focal_conformal_method({2, 0}, {-0.5, 1}, {0, 0});
  const double r29 = std::sqrt(29.0);
  EXPECT_NEAR(c.d, 4 / r29, 1e-15);
  EXPECT_NEAR(c.a, 10 * r29 / 29, 1e-14);
  EXPECT_NEAR(c.b, 9 * r29 / 58, 1e-14);
  EXPECT_NEAR(c.focal, 1.0, 1e-14);
}

TEST(FocalConformal, SymmetricPair) {
  const ConformalFocal c = focal_conformal_method({5, 0}, {-5, 0}, {0, 0});
  EXPECT_NEAR(c.d, 0.0, 1e-15);
  EXPECT_NEAR(c.a, 5.0, 1e-15);
  EXPECT_NEAR(c.b, 5.0, 1e-15);
  EXPECT_NEAR(c.focal, 5.0, 1e-15);
}

TEST(FocalConformal, Errors) {
  EXPECT_THROW(focal_conformal_method({2, 0}, {5, 1}, {0, 0}), DegenerateError);
  EXPECT_THROW(focal_conformal_method({1, 0}, {-1, 0}, {0, 5}), DegenerateError);
}

TEST(Focal, MethodsAgreeWithEachOtherAndGroundTruth) {
  std::mt19937_64 rng(33);
  int checked = 0;
  while (checked < 1000) {
    const auto r = oracle::random_k(rng, true);
    const Vec3 d1 = oracle::random_unit(rng);
    Vec3 d2 = d1.cross(oracle::random_unit(rng)).normalized();
    if (std::abs(d1.z()) < 0.1 || std::abs(d2.z()) < 0.1) continue;
    const Vec2 a = oracle::project(r.matrix(), d1);
    const Vec2 b = oracle::project(r.matrix(), d2);
    const Vec2 p(r.px, r.py);
    const ReflectedPolarFocal m1 = focal_reflected_polar_method(a, b, p);
    const ConformalFocal m2 = focal_conformal_method(a, b, p);
    EXPECT_LT(oracle::rel(m1.focal, r.fx), 1e-9);
    EXPECT_LT(oracle::rel(m2.focal, r.fx), 1e-9);
    EXPECT_LT(std::abs(m1.x * m1.h - (m2.a * m2.b - m2.d * m2.d)), 1e-9 * r.fx * r.fx);
    ++checked;
  }
}

TEST(KnownAngle, RightAngleReproducesConformalMethod) {
  const KnownAngleFocal k = conformal_point_from_known_angle({2, 0}, {-0.5, 1}, {0, 0},
                                                             oracle::kPi / 2);
  const ConformalFocal c = focal_conformal_method({2, 0}, {-0.5, 1}, {0, 0});
  ASSERT_EQ(k.candidates.size(), 1u);
  EXPECT_NEAR(k.candidates[0].focal, c.focal, 1e-12);
  EXPECT_LT((k.candidates[0].conformal_point.position() - c.conformal_point.position()).norm(),
            1e-12);
}

TEST(KnownAngle, FortyFiveDegreeTileDiagonal) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> pitch(10 * kDeg, 60 * kDeg);
  std::uniform_real_distribution<double> head(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const auto r = oracle::random_k(rng, true);
    const Scene s = ground_scene(r.fx, r.px, r.py, pitch(rng), head(rng));
    const double h = std::atan2(s.cam.rotation()(2, 1), s.cam.rotation()(2, 0));
    const double base = h + head(rng);
    const Vec2 a = euclidean(vanishing(s.cam, heading_dir(base)));
    const Vec2 b = euclidean(vanishing(s.cam, heading_dir(base + 45 * kDeg)));
    const KnownAngleFocal kf =
        conformal_point_from_known_angle(a, b, {r.px, r.py}, 45 * kDeg);
    bool found = false;
    for (const auto& c : kf.candidates) found |= oracle::rel(c.focal, r.fx) < 1e-9;
    EXPECT_TRUE(found);
  }
}

TEST(KnownAngle, InconsistentAngleThrows) {
  // A tiny angle puts the arc far away and a principal point far off to the
  // side misses it.
  EXPECT_THROW(conformal_point_from_known_angle({0, 0}, {1, 0}, {1e6, 5}, 60 * kDeg),
               DegenerateError);
  EXPECT_THROW(conformal_point_from_known_angle({0, 0}, {1, 0}, {0, 5}, 0.0),
               PreconditionError);
}

TEST(PrincipalLine, CheckerboardPassesThroughPrincipalPoint) {
  const Scene s = ground_scene(900, 350, 260, 35 * kDeg, 0.0);
  const Vec2 a1 = euclidean(vanishing(s.cam, heading_dir(-40 * kDeg)));
  const Vec2 b1 = euclidean(vanishing(s.cam, heading_dir(5 * kDeg)));
  const Vec2 a2 = b1;
  const Vec2 b2 = euclidean(vanishing(s.cam, heading_dir(50 * kDeg)));
  const PrincipalLocus locus =
      principal_line_constraint(a1, b1, 45 * kDeg, a2, b2, 45 * kDeg);
  double best = std::abs(signed_distance({350, 260}, locus.line));
  for (const auto& alt : locus.alternates) {
    best = std::min(best, std::abs(signed_distance({350, 260}, alt)));
  }
  EXPECT_LT(best, 1e-7);
}

TEST(PrincipalLine, IdenticalPairsThrow) {
  EXPECT_THROW(principal_line_constraint({0, 0}, {100, 0}, 45 * kDeg, {0, 0}, {100, 0},
                                         45 * kDeg),
               DegenerateError);
}

TEST(PrincipalLine, PerturbationMovesLineContinuously) {
  const Scene s = ground_scene(900, 350, 260, 35 * kDeg, 0.0);
  const Vec2 a1 = euclidean(vanishing(s.cam, heading_dir(-40 * kDeg)));
  const Vec2 b1 = euclidean(vanishing(s.cam, heading_dir(5 * kDeg)));
  const Vec2 b2 = euclidean(vanishing(s.cam, heading_dir(50 * kDeg)));
  double previous = 0.0;
  for (double eps : {0.1, 0.2, 0.4, 0.8}) {
    const PrincipalLocus locus = principal_line_constraint(
        a1, b1, (45 + eps) * kDeg, b1, b2, 45 * kDeg);
    const double dist = std::abs(signed_distance({350, 260}, locus.line));
    EXPECT_GT(dist, previous);
    EXPECT_LT(dist, 200 * eps);
    previous = dist;
  }
}

TEST(Tilt, HorizonThroughPrincipalPointIsLevel) {
  const CalibratingConic c = calibrating_conic_from_k(CalibrationMatrix::square(500, 320, 240));
  EXPECT_NEAR(camera_tilt(HomLine(0, -1, 240), c), 0.0, 1e-15);
}

TEST(Tilt, UnitFocalUnitDistance) {
  const CalibratingConic c = calibrating_conic_from_k(CalibrationMatrix::square(1, 0, 0));
  // Horizon above the principal point (y = -1), plane side toward +y.
  EXPECT_NEAR(camera_tilt(HomLine(0, -1, -1), c) / kDeg, 45.0, 1e-12);
}

TEST(Tilt, SyntheticPitch) {
  for (double pitch : {13.7, -8.0, 40.0}) {
    const Scene s = ground_scene(700, 310, 250, pitch * kDeg, 0.3);
    const double got = camera_tilt(s.horizon, calibrating_conic_from_k(s.k));
    EXPECT_NEAR(got / kDeg, pitch, 1e-7);
  }
}

TEST(FieldOfView, Examples) {
  const CalibratingConic c1 = calibrating_conic_from_k(CalibrationMatrix::square(100, 100, 50));
  EXPECT_NEAR(field_of_view(c1, 200, 100).horizontal / kDeg, 90.0, 1e-12);
  const double w = 2 * std::sqrt(3.0);
  const CalibratingConic c2 = calibrating_conic_from_k(CalibrationMatrix::square(1, w / 2, w / 2));
  const FieldOfView f = field_of_view(c2, w, w);
  EXPECT_NEAR(f.horizontal / kDeg, 120.0, 1e-12);
  EXPECT_GT(f.diagonal, f.horizontal);
}

TEST(FieldOfView, MatchesRayAngles) {
  std::mt19937_64 rng(35);
  for (int i = 0; i < 200; ++i) {
    const auto r = oracle::random_k(rng, true);
    const double w = 2 * r.px;
    const double h = 2 * r.py;
    const FieldOfView f = field_of_view(
        calibrating_conic_from_k(CalibrationMatrix::square(r.fx, r.px, r.py)), w, h);
    const Mat3 k = r.matrix();
    EXPECT_NEAR(f.horizontal, oracle::pixel_ray_angle(k, {0, r.py}, {w, r.py}), 1e-9);
    EXPECT_NEAR(f.vertical, oracle::pixel_ray_angle(k, {r.px, 0}, {r.px, h}), 1e-9);
    EXPECT_NEAR(f.diagonal, oracle::pixel_ray_angle(k, {0, 0}, {w, h}), 1e-9);
    EXPECT_NEAR(f.horizontal, 2 * std::atan(w / (2 * r.fx)), 1e-12);
  }
}

TEST(Conformality, AtConformalPointAndAway) {
  const Scene s = ground_scene(800, 320, 240, 25 * kDeg, 0.1);
  const Mat3 g = synth::ground_plane_to_image(s.cam);
  const ConformalPair pair = conformal_points_from_k(s.horizon, s.k);
  const Vec2 c = pair.below.position();
  const double radius = std::abs(signed_distance(c, s.horizon));
  EXPECT_LT(conformality_check(s.k, s.horizon, g, c).anisotropy, 1e-5);
  for (double ang = 0; ang < 2 * oracle::kPi; ang += oracle::kPi / 4) {
    const Vec2 x = c + 0.1 * radius * Vec2(std::cos(ang), std::sin(ang));
    EXPECT_GT(conformality_check(s.k, s.horizon, g, x).anisotropy, 1e-3);
  }
}

TEST(Conformality, ProbeOnHorizonThrows) {
  const Scene s = ground_scene(800, 320, 240, 25 * kDeg, 0.1);
  const Mat3 g = synth::ground_plane_to_image(s.cam);
  const Vec2 on = euclidean(foot_of_perpendicular(P(320, 240), s.horizon));
  EXPECT_THROW(conformality_check(s.k, s.horizon, g, on), DegenerateError);
}

TEST(Conformality, GridMinimumIsTheConformalPoint) {
  const Scene s = ground_scene(800, 320, 240, 25 * kDeg, 0.1);
  const Mat3 g = synth::ground_plane_to_image(s.cam);
  const Vec2 c = conformal_points_from_k(s.horizon, s.k).below.position();
  const double radius = std::abs(signed_distance(c, s.horizon));
  const Vec2 found = conformality_minimum(s.k, s.horizon, g, c + Vec2(0.2, -0.15) * radius,
                                          0.5 * radius);
  EXPECT_LT((found - c).norm(), 1e-3 * radius);
}
