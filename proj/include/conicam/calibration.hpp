#ifndef CONICAM_CALIBRATION_HPP
#define CONICAM_CALIBRATION_HPP

// Calibration matrix, image of the absolute conic, calibrating conic, the
// reflected polar, and the two ways of measuring the angle between rays.

#include <cmath>
#include <numbers>
#include <optional>

#include "conicam/projective.hpp"

namespace conicam {

/// Upper-triangular camera calibration
///
///     | fx  s  px |
///     |  0 fy  py |
///     |  0  0   1 |
class CalibrationMatrix {
 public:
  CalibrationMatrix(double fx, double fy, double skew, double px, double py)
      : fx_(fx), fy_(fy), skew_(skew), px_(px), py_(py) {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw PreconditionError("calibration matrix: focal lengths must be > 0");
    }
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(skew) ||
        !std::isfinite(px) || !std::isfinite(py)) {
      throw PreconditionError("calibration matrix: non-finite entry");
    }
  }

  /// Square pixels, zero skew.
  static CalibrationMatrix square(double f, double px, double py) {
    return CalibrationMatrix(f, f, 0.0, px, py);
  }

  static CalibrationMatrix from_matrix(const Mat3& k) {
    const Mat3 n = k / k(2, 2);
    if (std::abs(n(1, 0)) > kTolerance * n.norm() ||
        std::abs(n(2, 0)) > kTolerance * n.norm() ||
        std::abs(n(2, 1)) > kTolerance * n.norm()) {
      throw PreconditionError("calibration matrix must be upper triangular");
    }
    return CalibrationMatrix(n(0, 0), n(1, 1), n(0, 1), n(0, 2), n(1, 2));
  }

  double fx() const noexcept { return fx_; }
  double fy() const noexcept { return fy_; }
  double skew() const noexcept { return skew_; }
  double px() const noexcept { return px_; }
  double py() const noexcept { return py_; }
  Vec2 principal_point() const { return {px_, py_}; }

  bool has_square_pixels(double tol = 1e-6) const {
    return std::abs(fx_ - fy_) <= tol * fx_ && std::abs(skew_) <= tol * fx_;
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx_, skew_, px_,
         0.0, fy_, py_,
         0.0, 0.0, 1.0;
    return k;
  }

  Mat3 inverse() const {
    Mat3 u;
    u << 1.0 / fx_, -skew_ / (fx_ * fy_), (skew_ * py_ - fy_ * px_) / (fx_ * fy_),
         0.0, 1.0 / fy_, -py_ / fy_,
         0.0, 0.0, 1.0;
    return u;
  }

  /// Direction K⁻¹x of the ray through an image point.
  Vec3 back_project(const HomPoint& x) const { return inverse() * x.vec(); }

 private:
  double fx_, fy_, skew_, px_, py_;
};

/// Image of the absolute conic, ω = (K Kᵀ)⁻¹. Positive definite.
struct IacConic {
  Conic conic;
};

/// Calibrating conic C = K⁻ᵀ diag(1, 1, -1) K⁻¹: the image of the cone of
/// rays at 45° to the optical axis.
struct CalibratingConic {
  Conic conic;
  HomPoint centre;
};

enum class AngleMethod { algebraic, cross_ratio };

struct AngleMeasurement {
  double theta;      ///< radians in [0, π]
  double cos_theta;  ///< in [-1, 1]
  AngleMethod method;

  double degrees() const { return theta * 180.0 / std::numbers::pi; }
};

namespace detail {

inline const Mat3& reflection_diag() {
  static const Mat3 d = Vec3(1.0, 1.0, -1.0).asDiagonal();
  return d;
}

inline AngleMeasurement make_angle(double cos_theta, AngleMethod method) {
  const double c = std::clamp(cos_theta, -1.0, 1.0);
  return {std::acos(c), c, method};
}

// Factors a symmetric matrix as Uᵀ diag(1, 1, sign33) U with U upper
// triangular and U(2,2) = 1, working down from the top-left corner like a
// Cholesky decomposition. Returns nothing when the signature does not fit.
inline std::optional<Mat3> upper_factor(Mat3 m, double sign33) {
  if (m(0, 0) < 0.0) m = -m;
  const double u11sq = m(0, 0);
  if (!(u11sq > 0.0)) return std::nullopt;
  const double u11 = std::sqrt(u11sq);
  const double u12 = m(0, 1) / u11;
  const double u13 = m(0, 2) / u11;
  const double u22sq = m(1, 1) - u12 * u12;
  if (!(u22sq > kTolerance * std::abs(m(1, 1)))) return std::nullopt;
  const double u22 = std::sqrt(u22sq);
  const double u23 = (m(1, 2) - u12 * u13) / u22;
  // m(2,2) = u13² + u23² + sign33·u33²
  const double u33sq = sign33 * (m(2, 2) - u13 * u13 - u23 * u23);
  if (!(u33sq > 0.0)) return std::nullopt;
  const double u33 = std::sqrt(u33sq);

  Mat3 u;
  u << u11, u12, u13,
       0.0, u22, u23,
       0.0, 0.0, u33;
  return u / u33;
}

inline CalibrationMatrix k_from_inverse(const Mat3& kinv) {
  return CalibrationMatrix::from_matrix(kinv.inverse());
}

}  // namespace detail

inline IacConic iac_from_k(const CalibrationMatrix& k) {
  const Mat3 kinv = k.inverse();
  return {Conic::from_matrix(kinv.transpose() * kinv)};
}

/// Recovers K from ω by an upper-triangular factorization ω = K⁻ᵀK⁻¹.
inline CalibrationMatrix k_from_iac(const IacConic& w) {
  const auto u = detail::upper_factor(w.conic.matrix(), 1.0);
  if (!u) throw PreconditionError("k_from_iac: conic is not positive definite");
  return detail::k_from_inverse(*u);
}

inline CalibratingConic calibrating_conic_from_k(const CalibrationMatrix& k) {
  const Mat3 kinv = k.inverse();
  return {Conic::from_matrix(kinv.transpose() * detail::reflection_diag() * kinv),
          to_hom(k.principal_point())};
}

/// Reads K back from a calibrating conic given up to scale and sign.
inline CalibrationMatrix k_from_calibrating_conic(const Conic& c) {
  const Signature s = c.signature();
  const bool ok = (s.positive == 2 && s.negative == 1) ||
                  (s.positive == 1 && s.negative == 2);
  if (!ok) {
    throw PreconditionError(
        "k_from_calibrating_conic: conic must have signature (+, +, -)");
  }
  const auto u = detail::upper_factor(c.matrix(), -1.0);
  if (!u) {
    throw PreconditionError(
        "k_from_calibrating_conic: conic does not factor as K^-T D K^-1");
  }
  return detail::k_from_inverse(*u);
}

inline CalibrationMatrix k_from_calibrating_conic(const CalibratingConic& c) {
  return k_from_calibrating_conic(c.conic);
}

/// S = K D K⁻¹, the point reflection through the centre of the calibrating
/// conic.
inline Mat3 centre_reflection(const CalibrationMatrix& k) {
  return k.matrix() * detail::reflection_diag() * k.inverse();
}

inline HomPoint reflect_through_centre(const HomPoint& x,
                                       const CalibrationMatrix& k) {
  return HomPoint(Vec3(centre_reflection(k) * x.vec()));
}

/// Polar of the centre-reflected point, C·(S·x). Every point on this line
/// images a direction orthogonal to the ray through x. Algebraically equal
/// to ω·x.
inline HomLine reflected_polar(const HomPoint& x, const CalibrationMatrix& k) {
  const CalibratingConic c = calibrating_conic_from_k(k);
  return polar(reflect_through_centre(x, k), c.conic);
}

namespace detail {

// Finite points are taken with positive last coordinate, i.e. as rays in
// front of the camera. Points at infinity are used as given.
inline Vec3 ray_representative(const HomPoint& x) {
  return is_finite(x) ? Vec3(x.vec() / x[2]) : x.vec();
}

}  // namespace detail

/// Angle between the rays through two image points from the IAC:
/// cos θ = x1ᵀωx2 / sqrt(x1ᵀωx1 · x2ᵀωx2).
inline AngleMeasurement angle_algebraic(const HomPoint& x1, const HomPoint& x2,
                                        const CalibrationMatrix& k) {
  const Mat3 w = iac_from_k(k).conic.matrix();
  const Vec3 a = detail::ray_representative(x1);
  const Vec3 b = detail::ray_representative(x2);
  const double c = a.dot(w * b) / std::sqrt(a.dot(w * a) * b.dot(w * b));
  return detail::make_angle(c, AngleMethod::algebraic);
}

/// Angle between rays by the calibrating-conic construction: intersect the
/// line x1x2 with the reflected polars l1, l2 at x1', x2'; cos²θ is the
/// cross-ratio of (x1, x2, x1', x2'), and cos θ is negative exactly when x1
/// and x2 lie on opposite sides of l1.
inline AngleMeasurement angle_cross_ratio(const HomPoint& x1,
                                          const HomPoint& x2,
                                          const CalibrationMatrix& k) {
  const HomPoint a(detail::ray_representative(x1));
  const HomPoint b(detail::ray_representative(x2));
  const HomLine through = join(a, b);
  const HomLine l1 = reflected_polar(a, k);
  const HomLine l2 = reflected_polar(b, k);

  if (std::abs(incidence(a, l1)) <= kDegenerateTolerance ||
      std::abs(incidence(b, l2)) <= kDegenerateTolerance) {
    throw DegenerateError(
        "angle_cross_ratio: point lies on its own reflected polar");
  }
  const HomPoint a1 = meet(through, l1);
  const HomPoint b2 = meet(through, l2);

  const double cos2 = cross_ratio(a, b, a1, b2, 1e-6);

  const double side_a = a.vec().dot(l1.vec());
  const double side_b = b.vec().dot(l1.vec());
  const double sign = (side_a > 0.0) == (side_b > 0.0) ? 1.0 : -1.0;
  return detail::make_angle(sign * std::sqrt(std::max(cos2, 0.0)),
                            AngleMethod::cross_ratio);
}

/// Calibrating conic recovered from three mutually orthogonal vanishing
/// points (square pixels, zero skew): a circle centred on the orthocentre.
struct ThreeVpCalibration {
  CalibratingConic conic;
  Vec2 principal_point;
  double focal;
  /// Set when the triangle is nearly right-angled and the radius is poorly
  /// determined.
  bool ill_conditioned;
};

inline ThreeVpCalibration conic_from_three_orthogonal_vps(
    const HomPoint& v1, const HomPoint& v2, const HomPoint& v3) {
  for (const HomPoint* v : {&v1, &v2, &v3}) {
    if (!is_finite(*v, 1e-9)) {
      throw DegenerateError(
          "three-vp calibration: vanishing point at infinity");
    }
  }
  const Vec2 p1 = euclidean(v1);
  const Vec2 p2 = euclidean(v2);
  const Vec2 p3 = euclidean(v3);
  const Vec2 e12 = p2 - p1;
  const Vec2 e13 = p3 - p1;
  const double scale = std::max({e12.norm(), e13.norm(), (p3 - p2).norm()});
  const double area2 = e12.x() * e13.y() - e12.y() * e13.x();
  if (std::abs(area2) <= kTolerance * scale * scale) {
    throw DegenerateError("three-vp calibration: vanishing points are collinear");
  }

  // Orthocentre as the meet of two altitudes.
  const HomLine alt1 = perpendicular_through(v1, join(v2, v3));
  const HomLine alt2 = perpendicular_through(v2, join(v1, v3));
  const Vec2 p = euclidean(meet(alt1, alt2));

  const double r2 = -(p2 - p).dot(p1 - p);
  if (!(r2 > 0.0)) {
    throw DegenerateError(
        "three-vp calibration: triangle is not acute; vanishing points are "
        "not an orthogonal triple");
  }
  const double f = std::sqrt(r2);
  return {{Conic::circle(p, f), to_hom(p)},
          p,
          f,
          r2 < kTolerance * scale * scale};
}

}  // namespace conicam

#endif  // CONICAM_CALIBRATION_HPP
