#include <gtest/gtest.h>

#include <random>

#include "conicam/calibration.hpp"
#include "oracles.hpp"

using namespace conicam;

namespace {

HomPoint P(double x, double y, double w = 1.0) { return HomPoint(x, y, w); }

CalibrationMatrix to_k(const oracle::RandomK& r) {
  return {r.fx, r.fy, r.skew, r.px, r.py};
}

double deg(const AngleMeasurement& m) { return m.degrees(); }

}  // namespace

TEST(CalibrationMatrix, RejectsNonPositiveFocal) {
  EXPECT_THROW(CalibrationMatrix(0.0, 1.0, 0.0, 0.0, 0.0), PreconditionError);
  EXPECT_THROW(CalibrationMatrix(1.0, -1.0, 0.0, 0.0, 0.0), PreconditionError);
}

TEST(CalibrationMatrix, ClosedFormInverse) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const auto r = oracle::random_k(rng);
    const Mat3 expected = r.matrix().inverse();
    EXPECT_LT((to_k(r).inverse() - expected).norm(), 1e-12 * expected.norm());
  }
}

TEST(Iac, IdentityAndDiagonal) {
  EXPECT_TRUE(iac_from_k(CalibrationMatrix::square(1, 0, 0)).conic.matrix().isIdentity(1e-15));
  const Mat3 w = iac_from_k(CalibrationMatrix::square(2, 0, 0)).conic.matrix();
  EXPECT_TRUE(w.isApprox(Vec3(0.25, 0.25, 1.0).asDiagonal().toDenseMatrix(), 1e-15));
}

TEST(Iac, PositiveDefiniteAndRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto r = oracle::random_k(rng);
    const IacConic w = iac_from_k(to_k(r));
    EXPECT_TRUE(w.conic.is_definite());
    const CalibrationMatrix back = k_from_iac(w);
    EXPECT_LT(oracle::rel(back.fx(), r.fx), 1e-9);
    EXPECT_LT(oracle::rel(back.fy(), r.fy), 1e-9);
    EXPECT_NEAR(back.skew(), r.skew, 1e-9 * r.fx);
    EXPECT_LT(oracle::rel(back.px(), r.px), 1e-9);
    EXPECT_LT(oracle::rel(back.py(), r.py), 1e-9);
  }
}

TEST(CalibratingConic, DiagonalKIsCircleAtOrigin) {
  const CalibratingConic c = calibrating_conic_from_k(CalibrationMatrix::square(100, 0, 0));
  EXPECT_TRUE(c.conic.is_circle());
  EXPECT_TRUE(equal_up_to_scale(c.conic.centre(), P(0, 0)));
  EXPECT_NEAR(c.conic.residual(P(100, 0)), 0.0, 1e-15);
  EXPECT_NEAR(c.conic.residual(P(0, -100)), 0.0, 1e-15);
}

TEST(CalibratingConic, MatchesDirectProduct) {
  const CalibrationMatrix k(50, 50, 0, 10, 20);
  const Mat3 kinv = oracle::k_matrix(50, 50, 0, 10, 20).inverse();
  const Mat3 expected = kinv.transpose() * Vec3(1, 1, -1).asDiagonal() * kinv;
  const Mat3 got = calibrating_conic_from_k(k).conic.matrix();
  EXPECT_LT((got - expected).norm(), 1e-15);
  EXPECT_TRUE(equal_up_to_scale(calibrating_conic_from_k(k).conic.centre(), P(10, 20)));
  EXPECT_NEAR(calibrating_conic_from_k(k).conic.residual(P(60, 20)), 0.0, 1e-15);
}

TEST(CalibratingConic, IdentityIsUnitCircle) {
  const Conic c = calibrating_conic_from_k(CalibrationMatrix::square(1, 0, 0)).conic;
  EXPECT_TRUE(c.matrix().isApprox(Vec3(1, 1, -1).asDiagonal().toDenseMatrix()));
}

TEST(CalibratingConic, ReadsAxisAlignedEllipse) {
  // (x - px)²/a² + (y - py)²/b² = 1
  const double a = 120;
  const double b = 80;
  const double px = 30;
  const double py = -40;
  const Conic c(1 / (a * a), 0, 1 / (b * b), -px / (a * a), -py / (b * b),
                px * px / (a * a) + py * py / (b * b) - 1);
  const CalibrationMatrix k = k_from_calibrating_conic(c);
  EXPECT_NEAR(k.fx(), a, 1e-9);
  EXPECT_NEAR(k.fy(), b, 1e-9);
  EXPECT_NEAR(k.skew(), 0.0, 1e-9);
  EXPECT_NEAR(k.px(), px, 1e-9);
  EXPECT_NEAR(k.py(), py, 1e-9);
}

TEST(CalibratingConic, UnitCircleGivesIdentity) {
  const CalibrationMatrix k = k_from_calibrating_conic(Conic::circle(Vec2::Zero(), 1.0));
  EXPECT_TRUE(k.matrix().isIdentity(1e-15));
}

TEST(CalibratingConic, RoundTripAnySignAndScale) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> s(-1e3, 1e3);
  for (int i = 0; i < 500; ++i) {
    const auto r = oracle::random_k(rng);
    double scale = s(rng);
    if (std::abs(scale) < 1e-3) scale = 1.0;
    const Conic c = calibrating_conic_from_k(to_k(r)).conic.scaled(scale);
    const CalibrationMatrix back = k_from_calibrating_conic(c);
    EXPECT_LT((back.matrix() - r.matrix()).norm() / r.matrix().norm(), 1e-9);
  }
}

TEST(CalibratingConic, WrongSignatureThrows) {
  EXPECT_THROW(k_from_calibrating_conic(Conic(1, 0, 1, 0, 0, 1)), PreconditionError);
  EXPECT_THROW(k_from_calibrating_conic(Conic(1, 0, 1, 0, 0, 0)), PreconditionError);
}

TEST(CalibratingConic, FortyFiveDegreeRaysLieOnIt) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 2.0 * oracle::kPi);
  for (int i = 0; i < 1000; ++i) {
    const auto r = oracle::random_k(rng);
    const double phi = u(rng);
    const Vec3 ray(std::cos(phi), std::sin(phi), 1.0);  // 45° off the axis
    const HomPoint x(Vec3(r.matrix() * ray));
    EXPECT_NEAR(calibrating_conic_from_k(to_k(r)).conic.residual(x), 0.0, 1e-9);
  }
}

TEST(Reflection, IdentityK) {
  const CalibrationMatrix k = CalibrationMatrix::square(1, 0, 0);
  EXPECT_TRUE(equal_up_to_scale(reflect_through_centre(P(1, 0), k), P(-1, 0)));
  EXPECT_TRUE(equal_up_to_scale(reflect_through_centre(P(0, 0), k), P(0, 0)));
}

TEST(Reflection, PointReflectionThroughPrincipalPointAndInvolution) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0.0, 500.0);
  for (int i = 0; i < 500; ++i) {
    const auto r = oracle::random_k(rng);
    const CalibrationMatrix k = to_k(r);
    const Vec2 x(n(rng), n(rng));
    const Vec2 expected = 2.0 * Vec2(r.px, r.py) - x;
    EXPECT_LT((euclidean(reflect_through_centre(to_hom(x), k)) - expected).norm(),
              1e-9 * (1.0 + x.norm()));
    const HomPoint twice = reflect_through_centre(reflect_through_centre(to_hom(x), k), k);
    EXPECT_LT(oracle::projective_distance(twice.vec(), to_hom(x).vec()), 1e-12);
  }
}

TEST(ReflectedPolar, IdentityK) {
  const CalibrationMatrix k = CalibrationMatrix::square(1, 0, 0);
  EXPECT_TRUE(equal_up_to_scale(reflected_polar(P(1, 0), k), HomLine(1, 0, 1)));
  EXPECT_TRUE(is_line_at_infinity(reflected_polar(P(0, 0), k)));
}

TEST(ReflectedPolar, EqualsIacTimesPointAndPointsAreOrthogonal) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto r = oracle::random_k(rng);
    const CalibrationMatrix k = to_k(r);
    const Vec3 ray = oracle::random_ray(rng, 1.2);
    const HomPoint x(Vec3(r.matrix() * ray));
    const HomLine l = reflected_polar(x, k);
    const Mat3 w = (r.matrix() * r.matrix().transpose()).inverse();
    EXPECT_LT(oracle::projective_distance(l.vec(), w * x.vec()), 1e-9);
    // Points on l image rays orthogonal to `ray`.
    const Vec3 d = l.vec().cross(Vec3(n(rng), n(rng), n(rng)));
    const Vec3 back = r.matrix().inverse() * d;
    EXPECT_NEAR(std::abs(oracle::ray_angle(ray, back) - oracle::kPi / 2) / oracle::kDeg,
                0.0, 1e-7);
  }
}

TEST(ReflectedPolar, IacFactorsAsConicTimesReflection) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 200; ++i) {
    const CalibrationMatrix k = to_k(oracle::random_k(rng));
    const Mat3 w = iac_from_k(k).conic.matrix();
    const Mat3 cs = calibrating_conic_from_k(k).conic.matrix() * centre_reflection(k);
    EXPECT_LT((w - cs).norm(), 1e-12 * w.norm());
  }
}

TEST(AngleAlgebraic, ExamplesWithIdentityAndDiagonalK) {
  const CalibrationMatrix id = CalibrationMatrix::square(1, 0, 0);
  EXPECT_NEAR(deg(angle_algebraic(P(1, 0), P(0, 0), id)), 45.0, 1e-12);
  EXPECT_NEAR(deg(angle_algebraic(P(1, 0), P(-1, 0), id)), 90.0, 1e-12);
  EXPECT_NEAR(deg(angle_algebraic(P(2, 0), P(0, 2), CalibrationMatrix::square(2, 0, 0))),
              60.0, 1e-12);
}

TEST(AngleAlgebraic, MatchesBackProjection) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto r = oracle::random_k(rng);
    const Vec3 a = oracle::random_ray(rng, 1.4);
    const Vec3 b = oracle::random_ray(rng, 1.4);
    const HomPoint x1(Vec3(r.matrix() * a));
    const HomPoint x2(Vec3(r.matrix() * b));
    const AngleMeasurement m = angle_algebraic(x1, x2, to_k(r));
    EXPECT_NEAR(m.cos_theta, a.normalized().dot(b.normalized()), 1e-12);
    EXPECT_NEAR(std::cos(m.theta), m.cos_theta, 1e-12);
  }
}

TEST(AngleAlgebraic, InvariantUnderCameraRotation) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  for (int i = 0; i < 300; ++i) {
    const auto r = oracle::random_k(rng);
    const CalibrationMatrix k = to_k(r);
    // Small rotations of narrow rays keep every image in front of the camera.
    const Mat3 rot = Eigen::AngleAxisd(small(rng), oracle::random_unit(rng)).toRotationMatrix();
    const Mat3 h = r.matrix() * rot * r.matrix().inverse();
    const HomPoint x1(Vec3(r.matrix() * oracle::random_ray(rng, 0.5)));
    const HomPoint x2(Vec3(r.matrix() * oracle::random_ray(rng, 0.5)));
    const double before = angle_algebraic(x1, x2, k).cos_theta;
    const double after =
        angle_algebraic(HomPoint(Vec3(h * x1.vec())), HomPoint(Vec3(h * x2.vec())), k).cos_theta;
    EXPECT_NEAR(after, before, 1e-9);
  }
}

TEST(AngleCrossRatio, RightAngleWithIdentityK) {
  const AngleMeasurement m = angle_cross_ratio(P(1, 0), P(-1, 0), CalibrationMatrix::square(1, 0, 0));
  EXPECT_NEAR(m.cos_theta, 0.0, 1e-15);
  EXPECT_NEAR(m.degrees(), 90.0, 1e-12);
}

TEST(AngleCrossRatio, FortyFiveDegreesSameSide) {
  const AngleMeasurement m = angle_cross_ratio(P(1, 0), P(0, 0), CalibrationMatrix::square(1, 0, 0));
  EXPECT_GT(m.cos_theta, 0.0);
  EXPECT_NEAR(m.degrees(), 45.0, 1e-12);
}

TEST(AngleCrossRatio, ObtuseAngleIsNegative) {
  const CalibrationMatrix k = CalibrationMatrix::square(1, 0, 0);
  const AngleMeasurement m = angle_cross_ratio(P(1, 0), P(-2, 0), k);
  EXPECT_LT(m.cos_theta, 0.0);
  EXPECT_NEAR(m.cos_theta, angle_algebraic(P(1, 0), P(-2, 0), k).cos_theta, 1e-12);
}

TEST(AngleCrossRatio, AgreesWithAlgebraicOnRandomInputs) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const auto r = oracle::random_k(rng, i % 2 == 0);
    const CalibrationMatrix k = to_k(r);
    const HomPoint x1(Vec3(r.matrix() * oracle::random_ray(rng, 1.4)));
    const HomPoint x2(Vec3(r.matrix() * oracle::random_ray(rng, 1.4)));
    const double a = angle_algebraic(x1, x2, k).cos_theta;
    const double c = angle_cross_ratio(x1, x2, k).cos_theta;
    EXPECT_NEAR(c, a, 1e-9);
  }
}

TEST(AngleCrossRatio, AcceptsVanishingPointsAtInfinity) {
  const CalibrationMatrix k = CalibrationMatrix::square(500, 320, 240);
  const HomPoint inf(1, 1, 0);
  const HomPoint x(100, 50, 1);
  EXPECT_NEAR(angle_cross_ratio(inf, x, k).cos_theta, angle_algebraic(inf, x, k).cos_theta,
              1e-9);
}

TEST(AngleCrossRatio, CoincidentPointsThrow) {
  EXPECT_THROW(angle_cross_ratio(P(1, 0), P(2, 0, 2), CalibrationMatrix::square(1, 0, 0)),
               DegenerateError);
}

TEST(ThreeVp, WorkedExample) {
  const ThreeVpCalibration t =
      conic_from_three_orthogonal_vps(P(2, 0), P(-0.5, 0.5), P(-0.5, -2.5));
  EXPECT_NEAR(t.focal, 1.0, 1e-12);
  EXPECT_LT(t.principal_point.norm(), 1e-12);
  EXPECT_FALSE(t.ill_conditioned);
}

TEST(ThreeVp, RandomRotationsThroughRandomSquareK) {
  std::mt19937_64 rng(20);
  int checked = 0;
  while (checked < 500) {
    const auto r = oracle::random_k(rng, true);
    const Mat3 rot = oracle::random_rotation(rng);
    HomPoint v[3] = {P(0, 0), P(0, 0), P(0, 0)};
    bool ok = true;
    for (int c = 0; c < 3; ++c) {
      const Vec3 d = rot.col(c);
      if (std::abs(d.z()) < 0.2) ok = false;
      v[c] = HomPoint(Vec3(r.matrix() * d));
    }
    if (!ok) continue;
    const ThreeVpCalibration t = conic_from_three_orthogonal_vps(v[0], v[1], v[2]);
    EXPECT_LT(oracle::rel(t.focal, r.fx), 1e-9);
    EXPECT_LT((t.principal_point - Vec2(r.px, r.py)).norm(), 1e-9 * r.fx);
    // Each reflected polar passes through the other two.
    const CalibrationMatrix k = CalibrationMatrix::square(t.focal, t.principal_point.x(),
                                                          t.principal_point.y());
    for (int a = 0; a < 3; ++a) {
      const HomLine l = reflected_polar(v[a], k);
      for (int b = 0; b < 3; ++b) {
        if (a == b) continue;
        EXPECT_NEAR(v[b].vec().normalized().dot(l.vec().normalized()), 0.0, 1e-9);
      }
    }
    ++checked;
  }
}

TEST(ThreeVp, DegenerateInputs) {
  EXPECT_THROW(conic_from_three_orthogonal_vps(P(1, 0, 0), P(0, 1), P(1, 1)), DegenerateError);
  EXPECT_THROW(conic_from_three_orthogonal_vps(P(0, 0), P(1, 0), P(2, 0)), DegenerateError);
  // Obtuse triangle: not an orthogonal triple.
  EXPECT_THROW(conic_from_three_orthogonal_vps(P(0, 0), P(10, 0), P(5, 1)), DegenerateError);
}
