#ifndef CONICAM_PROJECTIVE_HPP
#define CONICAM_PROJECTIVE_HPP

// Homogeneous 2D points and lines, symmetric conics, cross-ratio and the
// pole/polar machinery used throughout the library.
//
// Everything here is a pure function over immutable values.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "conicam/errors.hpp"

namespace conicam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Relative tolerance for algebraic identities on double-precision data.
inline constexpr double kTolerance = 1e-9;

/// Relative threshold below which two homogeneous vectors are treated as the
/// same element (coincident points, identical lines).
inline constexpr double kDegenerateTolerance = 1e-12;

namespace detail {

inline Vec3 unit(const Vec3& v) { return v / v.norm(); }

// Normalizes to unit length and flips so the first coordinate that is
// nonzero (relative to the vector's norm) is positive.
inline Vec3 canonical(const Vec3& v) {
  Vec3 u = unit(v);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(u[i]) > kDegenerateTolerance) {
      if (u[i] < 0.0) u = -u;
      break;
    }
  }
  return u;
}

}  // namespace detail

/// A 3-vector defined up to a nonzero scale. `Tag` separates points from
/// lines at the type level.
template <class Tag>
class Homogeneous {
 public:
  explicit Homogeneous(const Vec3& v) : v_(v) {
    if (!v_.allFinite()) {
      throw PreconditionError("homogeneous vector has non-finite entries");
    }
    if (v_.isZero(0.0)) {
      throw DegenerateError("homogeneous vector is the zero vector");
    }
  }
  Homogeneous(double x, double y, double w) : Homogeneous(Vec3(x, y, w)) {}

  const Vec3& vec() const noexcept { return v_; }
  double operator[](int i) const { return v_[i]; }

  /// Unit Euclidean norm with canonical sign.
  Homogeneous normalized() const { return Homogeneous(detail::canonical(v_)); }

  Homogeneous operator-() const { return Homogeneous(Vec3(-v_)); }

 private:
  Vec3 v_;
};

struct PointTag {};
struct LineTag {};

using HomPoint = Homogeneous<PointTag>;
using HomLine = Homogeneous<LineTag>;

template <class Tag>
bool equal_up_to_scale(const Homogeneous<Tag>& a, const Homogeneous<Tag>& b,
                       double tol = kTolerance) {
  const Vec3 ua = detail::canonical(a.vec());
  const Vec3 ub = detail::canonical(b.vec());
  return std::min((ua - ub).norm(), (ua + ub).norm()) <= tol;
}

inline HomPoint to_hom(const Vec2& p) { return HomPoint(p.x(), p.y(), 1.0); }

inline bool is_finite(const HomPoint& p, double tol = kDegenerateTolerance) {
  return std::abs(p[2]) > tol * p.vec().norm();
}

/// Euclidean coordinates of a finite point.
inline Vec2 euclidean(const HomPoint& p) {
  if (!is_finite(p)) {
    throw DegenerateError("point at infinity has no Euclidean coordinates");
  }
  return p.vec().head<2>() / p[2];
}

/// Same point rescaled so the third coordinate is +1 (finite points only).
inline HomPoint affine(const HomPoint& p) { return to_hom(euclidean(p)); }

inline bool is_line_at_infinity(const HomLine& l,
                                double tol = kDegenerateTolerance) {
  return l.vec().head<2>().norm() <= tol * l.vec().norm();
}

/// Incidence residual of a point and a line, scale-free.
inline double incidence(const HomPoint& p, const HomLine& l) {
  return p.vec().dot(l.vec()) / (p.vec().norm() * l.vec().norm());
}

/// Signed pixel distance from a finite point to a finite line. The sign is
/// that of dot(l, (x, y, 1)).
inline double signed_distance(const Vec2& p, const HomLine& l) {
  if (is_line_at_infinity(l)) {
    throw DegenerateError("distance to the line at infinity is undefined");
  }
  const Vec3& v = l.vec();
  return (v.x() * p.x() + v.y() * p.y() + v.z()) / v.head<2>().norm();
}

inline HomLine join(const HomPoint& p, const HomPoint& q,
                    double tol = kDegenerateTolerance) {
  const Vec3 l = detail::unit(p.vec()).cross(detail::unit(q.vec()));
  if (l.norm() <= tol) {
    throw DegenerateError("join: points coincide");
  }
  return HomLine(l);
}

inline HomPoint meet(const HomLine& l, const HomLine& m,
                     double tol = kDegenerateTolerance) {
  const Vec3 p = detail::unit(l.vec()).cross(detail::unit(m.vec()));
  if (p.norm() <= tol) {
    throw DegenerateError("meet: lines coincide");
  }
  return HomPoint(p);
}

inline HomLine line_through(const Vec2& a, const Vec2& b) {
  return join(to_hom(a), to_hom(b));
}

/// Foot of the perpendicular from a finite point onto a finite line.
inline HomPoint foot_of_perpendicular(const HomPoint& p, const HomLine& l) {
  if (!is_finite(p)) {
    throw DegenerateError("foot_of_perpendicular: point at infinity");
  }
  if (is_line_at_infinity(l)) {
    throw DegenerateError("foot_of_perpendicular: line at infinity");
  }
  const Vec2 x = euclidean(p);
  const Vec2 n = l.vec().head<2>();
  const double r = (n.dot(x) + l[2]) / n.squaredNorm();
  return to_hom(x - r * n);
}

/// Line through `p` orthogonal to `l` in the pixel metric.
inline HomLine perpendicular_through(const HomPoint& p, const HomLine& l) {
  if (!is_finite(p)) {
    throw DegenerateError("perpendicular_through: point at infinity");
  }
  if (is_line_at_infinity(l)) {
    throw DegenerateError("perpendicular_through: line at infinity");
  }
  const Vec2 x = euclidean(p);
  const double a = l[0];
  const double b = l[1];
  return HomLine(b, -a, -(b * x.x() - a * x.y()));
}

// ---------------------------------------------------------------------------
// Cross-ratio

namespace detail {

// Line through the two most separated of the given points.
inline Vec3 common_line(std::span<const HomPoint> pts) {
  Vec3 best = Vec3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Vec3 c = unit(pts[i].vec()).cross(unit(pts[j].vec()));
      if (c.norm() > best.norm()) best = c;
    }
  }
  if (best.norm() <= kDegenerateTolerance) {
    throw DegenerateError("cross_ratio: all points coincide");
  }
  return unit(best);
}

inline void require_collinear(std::span<const HomPoint> pts, const Vec3& line,
                              double tol) {
  for (const auto& p : pts) {
    if (std::abs(line.dot(unit(p.vec()))) > tol) {
      throw PreconditionError("cross_ratio: points are not collinear");
    }
  }
}

}  // namespace detail

/// Unsigned cross-ratio (|bc|·|ad|) / (|ac|·|bd|) of four collinear points,
/// where |ij| is the Euclidean distance. With (a, b, c, d) = (x1, x2, x1', x2')
/// this is the squared-cosine ratio of the calibrating-conic angle
/// construction. Points at infinity are allowed; their distance factors
/// cancel between numerator and denominator.
inline double cross_ratio(const HomPoint& a, const HomPoint& b,
                          const HomPoint& c, const HomPoint& d,
                          double tol = kTolerance) {
  const std::array<HomPoint, 4> pts{a, b, c, d};
  const Vec3 line = detail::common_line(pts);
  detail::require_collinear(pts, line, tol);

  auto span = [](const HomPoint& p, const HomPoint& q) {
    return detail::unit(p.vec()).cross(detail::unit(q.vec())).norm();
  };
  const double ac = span(a, c);
  const double bd = span(b, d);
  if (ac <= kDegenerateTolerance || bd <= kDegenerateTolerance) {
    throw DegenerateError("cross_ratio: zero denominator (a = c or b = d)");
  }
  return span(b, c) * span(a, d) / (ac * bd);
}

/// Signed variant of `cross_ratio`, using lengths oriented along the common
/// line. Projectively invariant including sign.
inline double signed_cross_ratio(const HomPoint& a, const HomPoint& b,
                                 const HomPoint& c, const HomPoint& d,
                                 double tol = kTolerance) {
  const std::array<HomPoint, 4> pts{a, b, c, d};
  const Vec3 line = detail::common_line(pts);
  detail::require_collinear(pts, line, tol);

  auto bracket = [&line](const HomPoint& p, const HomPoint& q) {
    return detail::unit(p.vec()).cross(detail::unit(q.vec())).dot(line);
  };
  // Each point appears once above and once below, so per-point scale and
  // sign cancel.
  const double ac = bracket(a, c);
  const double bd = bracket(b, d);
  if (std::abs(ac) <= kDegenerateTolerance ||
      std::abs(bd) <= kDegenerateTolerance) {
    throw DegenerateError("signed_cross_ratio: zero denominator");
  }
  return bracket(b, c) * bracket(a, d) / (ac * bd);
}

/// Signed positions of finite points along a finite line, measured from the
/// foot of the perpendicular through the origin, in the direction (-b, a).
inline std::vector<double> signed_positions(std::span<const HomPoint> pts,
                                            const HomLine& l) {
  if (is_line_at_infinity(l)) {
    throw DegenerateError("signed_positions: line at infinity");
  }
  const Vec2 n = l.vec().head<2>();
  const Vec2 dir = Vec2(-n.y(), n.x()) / n.norm();
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(dir.dot(euclidean(p)));
  return out;
}

// ---------------------------------------------------------------------------
// Conics

struct Signature {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

/// Symmetric 3x3 matrix up to scale, stored as its upper triangle so the
/// symmetry cannot be violated.
class Conic {
 public:
  /// Coefficients of a x² + 2b xy + c y² + 2d xw + 2e yw + f w².
  Conic(double a, double b, double c, double d, double e, double f)
      : k_{a, b, c, d, e, f} {
    for (double v : k_) {
      if (!std::isfinite(v)) throw PreconditionError("conic: non-finite entry");
    }
    if (std::all_of(k_.begin(), k_.end(), [](double v) { return v == 0.0; })) {
      throw DegenerateError("conic: zero matrix");
    }
  }

  /// Builds from the symmetric part of `m`.
  static Conic from_matrix(const Mat3& m) {
    const Mat3 s = 0.5 * (m + m.transpose());
    return Conic(s(0, 0), s(0, 1), s(1, 1), s(0, 2), s(1, 2), s(2, 2));
  }

  /// Circle with the given centre and radius.
  static Conic circle(const Vec2& centre, double radius) {
    return Conic(1.0, 0.0, 1.0, -centre.x(), -centre.y(),
                 centre.squaredNorm() - radius * radius);
  }

  Mat3 matrix() const {
    Mat3 m;
    m << k_[0], k_[1], k_[3],
         k_[1], k_[2], k_[4],
         k_[3], k_[4], k_[5];
    return m;
  }

  const std::array<double, 6>& coefficients() const noexcept { return k_; }

  /// Quadratic form xᵀ C x.
  double operator()(const Vec3& x) const { return x.dot(matrix() * x); }
  double operator()(const HomPoint& x) const { return (*this)(x.vec()); }

  /// Quadratic form on unit-normalized arguments.
  double residual(const HomPoint& x) const {
    const Mat3 m = matrix();
    const Vec3 u = detail::unit(x.vec());
    return u.dot(m * u) / m.norm();
  }

  Conic scaled(double s) const {
    return Conic(s * k_[0], s * k_[1], s * k_[2], s * k_[3], s * k_[4],
                 s * k_[5]);
  }

  Conic normalized() const { return scaled(1.0 / matrix().norm()); }

  double determinant() const { return matrix().determinant(); }

  /// Eigenvalues in ascending order.
  Vec3 eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Mat3> es(matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  Signature signature(double tol = kTolerance) const {
    const Vec3 ev = eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    Signature s;
    for (int i = 0; i < 3; ++i) {
      if (ev[i] > tol * scale) {
        ++s.positive;
      } else if (ev[i] < -tol * scale) {
        ++s.negative;
      } else {
        ++s.zero;
      }
    }
    return s;
  }

  int rank(double tol = kTolerance) const { return 3 - signature(tol).zero; }

  bool is_definite(double tol = kTolerance) const {
    const Signature s = signature(tol);
    return s.positive == 3 || s.negative == 3;
  }

  /// True when the conic is a circle (axis-aligned with equal x and y
  /// coefficients and no cross term).
  bool is_circle(double tol = 1e-6) const {
    const double scale = std::max(std::abs(k_[0]), std::abs(k_[2]));
    return scale > 0.0 && std::abs(k_[0] - k_[2]) <= tol * scale &&
           std::abs(k_[1]) <= tol * scale;
  }

  /// Centre of a central conic: the pole of the line at infinity.
  HomPoint centre() const {
    return HomPoint(Vec3(matrix().inverse() * Vec3(0.0, 0.0, 1.0)));
  }

 private:
  std::array<double, 6> k_;
};

namespace detail {

inline void require_nondegenerate(const Conic& c, const char* op) {
  if (c.rank() < 3) {
    throw DegenerateError(std::string(op) + ": conic is rank-deficient");
  }
}

}  // namespace detail

/// Polar line C·x of a point with respect to a non-degenerate conic.
inline HomLine polar(const HomPoint& x, const Conic& c) {
  detail::require_nondegenerate(c, "polar");
  return HomLine(Vec3(c.matrix() * x.vec()));
}

/// Pole C⁻¹·l of a line with respect to a non-degenerate conic.
inline HomPoint pole(const HomLine& l, const Conic& c) {
  detail::require_nondegenerate(c, "pole");
  return HomPoint(Vec3(c.matrix().inverse() * l.vec()));
}

/// Real intersections of a line with a non-degenerate conic: zero, one
/// (tangency) or two points.
inline std::vector<HomPoint> conic_line_intersections(const Conic& c,
                                                      const HomLine& l,
                                                      double tol = kTolerance) {
  detail::require_nondegenerate(c, "conic_line_intersections");
  const Mat3 m = c.normalized().matrix();

  // Orthonormal basis {u, v} of the plane orthogonal to l; every point on l
  // is s·u + t·v.
  const Vec3 ln = detail::unit(l.vec());
  int axis = 0;
  ln.cwiseAbs().minCoeff(&axis);
  const Vec3 u = detail::unit(ln.cross(Vec3::Unit(axis)));
  const Vec3 v = ln.cross(u);

  const double m00 = u.dot(m * u);
  const double m01 = u.dot(m * v);
  const double m11 = v.dot(m * v);
  const double disc = m01 * m01 - m00 * m11;
  const double scale = m00 * m00 + m01 * m01 + m11 * m11;

  std::vector<HomPoint> out;
  if (scale == 0.0) return out;  // line lies on a degenerate component
  if (disc < -tol * scale) return out;

  const double root = disc > tol * scale ? std::sqrt(disc) : 0.0;
  auto make = [&](double s, double t) { return HomPoint(Vec3(s * u + t * v)); };

  // Solve m00 s² + 2 m01 s t + m11 t² = 0 in whichever chart is better
  // conditioned.
  if (m00 == 0.0 && m11 == 0.0) {
    out.push_back(make(1.0, 0.0));
    out.push_back(make(0.0, 1.0));
  } else if (std::abs(m00) >= std::abs(m11)) {
    out.push_back(make((-m01 + root) / m00, 1.0));
    if (root > 0.0) out.push_back(make((-m01 - root) / m00, 1.0));
  } else {
    out.push_back(make(1.0, (-m01 + root) / m11));
    if (root > 0.0) out.push_back(make(1.0, (-m01 - root) / m11));
  }
  return out;
}

}  // namespace conicam

#endif  // CONICAM_PROJECTIVE_HPP
