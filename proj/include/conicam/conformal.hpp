#ifndef CONICAM_CONFORMAL_HPP
#define CONICAM_CONFORMAL_HPP

// The conformal point of an image line, and the measurements made through
// it: plane angles, focal length from vanishing points, camera tilt, field
// of view, and a numerical check of the conformality property itself.
//
// Conventions
// -----------
// Pixels are square throughout (fx == fy, zero skew). Image coordinates are
// raster: x right, y down.
//
// A horizon's homogeneous sign is meaningful here. Its positive side
// (dot(l, (x, y, 1)) > 0) is "above" the plane, its negative side is where
// the plane itself is imaged. `orient_horizon` fixes the sign from a point
// known to image the plane.

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "conicam/calibration.hpp"
#include "conicam/projective.hpp"

namespace conicam {

enum class Branch { above, below };

/// One of the two mirror-image conformal points of a line.
struct ConformalPoint {
  HomPoint point;
  HomLine horizon;
  Branch branch;

  Vec2 position() const { return euclidean(point); }
};

/// Two vanishing points on a plane's horizon.
struct PlaneAngleQuery {
  HomPoint vp_a;
  HomPoint vp_b;
};

/// Flips `l` if needed so that `plane_point` is on its negative side.
inline HomLine orient_horizon(const HomLine& l, const Vec2& plane_point) {
  return signed_distance(plane_point, l) > 0.0 ? -l : l;
}

/// Orientation for an upright camera: the plane is imaged toward +y.
inline HomLine orient_horizon_upright(const HomLine& l) {
  const Vec3& v = l.vec();
  const bool flip = v.y() != 0.0 ? v.y() > 0.0 : v.x() > 0.0;
  return flip ? -l : l;
}

namespace detail {

inline void require_square_pixels(const CalibrationMatrix& k, const char* op) {
  if (!k.has_square_pixels()) {
    throw PreconditionError(std::string(op) + ": requires square pixels");
  }
}

// Unit normal of a finite line pointing to its positive side.
inline Vec2 up_normal(const HomLine& l) {
  if (is_line_at_infinity(l)) {
    throw DegenerateError("horizon is the line at infinity");
  }
  return l.vec().head<2>().normalized();
}

inline Branch side_branch(double signed_dist) {
  return signed_dist > 0.0 ? Branch::above : Branch::below;
}

// The branch on the opposite side of the line from `p`. Below when `p` is
// on the line.
inline Branch default_branch(const HomLine& l, const Vec2& p) {
  const double s = signed_distance(p, l);
  return s < 0.0 ? Branch::above : Branch::below;
}

inline ConformalPoint make_conformal(const HomLine& horizon, const Vec2& foot,
                                     double dist, Branch branch) {
  const Vec2 n = up_normal(horizon);
  const Vec2 c = branch == Branch::above ? Vec2(foot + dist * n)
                                         : Vec2(foot - dist * n);
  return {to_hom(c), horizon, branch};
}

inline double circle_radius(const CalibratingConic& c, const char* op) {
  if (!c.conic.is_circle()) {
    throw PreconditionError(std::string(op) +
                            ": calibrating conic must be a circle");
  }
  return k_from_calibrating_conic(c.conic).fx();
}

// Direction from `from` toward a homogeneous point; points at infinity give
// their own direction.
inline Vec2 direction_to(const Vec2& from, const HomPoint& to) {
  if (is_finite(to)) return euclidean(to) - from;
  return to.vec().head<2>();
}

inline double unsigned_angle(const Vec2& u, const Vec2& v) {
  return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
}

}  // namespace detail

struct ConformalPair {
  ConformalPoint above;
  ConformalPoint below;
};

/// Both conformal points of `horizon`: on the perpendicular through the
/// principal point, at distance sqrt(f² + d²) either side of the horizon.
inline ConformalPair conformal_points_from_k(const HomLine& horizon,
                                             const CalibrationMatrix& k) {
  detail::require_square_pixels(k, "conformal_point_from_k");
  const HomPoint p = to_hom(k.principal_point());
  const Vec2 o = euclidean(foot_of_perpendicular(p, horizon));
  const double d = (o - k.principal_point()).norm();
  const double s = std::hypot(k.fx(), d);
  return {detail::make_conformal(horizon, o, s, Branch::above),
          detail::make_conformal(horizon, o, s, Branch::below)};
}

/// Conformal point on the requested branch. By default the branch on the
/// opposite side of the horizon from the principal point.
inline ConformalPoint conformal_point_from_k(
    const HomLine& horizon, const CalibrationMatrix& k,
    std::optional<Branch> branch = std::nullopt) {
  const ConformalPair pair = conformal_points_from_k(horizon, k);
  const Branch b =
      branch.value_or(detail::default_branch(horizon, k.principal_point()));
  return b == Branch::above ? pair.above : pair.below;
}

/// Ruler-and-compass version: E is where the line through the principal
/// point parallel to the horizon meets the calibrating conic, and the
/// conformal point is where the circle about O through E meets the
/// perpendicular from the principal point.
inline ConformalPoint conformal_point_from_conic(
    const HomLine& horizon, const CalibratingConic& c,
    std::optional<Branch> branch = std::nullopt) {
  detail::circle_radius(c, "conformal_point_from_conic");
  const Vec2 p = euclidean(c.centre);
  const HomPoint ph = to_hom(p);
  const Vec2 o = euclidean(foot_of_perpendicular(ph, horizon));

  const HomLine parallel(horizon[0], horizon[1],
                         -(horizon[0] * p.x() + horizon[1] * p.y()));
  const auto es = conic_line_intersections(c.conic, parallel);
  if (es.empty()) {
    throw DegenerateError("conformal_point_from_conic: no point E");
  }
  const double radius = (euclidean(es.front()) - o).norm();

  const auto cs = conic_line_intersections(Conic::circle(o, radius),
                                           perpendicular_through(ph, horizon));
  if (cs.size() != 2) {
    throw DegenerateError("conformal_point_from_conic: construction failed");
  }
  const Branch want = branch.value_or(detail::default_branch(horizon, p));
  for (const auto& x : cs) {
    const Vec2 e = euclidean(x);
    if (detail::side_branch(signed_distance(e, horizon)) == want) {
      return {to_hom(e), horizon, want};
    }
  }
  throw DegenerateError("conformal_point_from_conic: branch not found");
}

/// World-plane angle between lines vanishing at `q.vp_a` and `q.vp_b`: the
/// angle the two vanishing points subtend at the conformal point.
inline AngleMeasurement plane_angle(const PlaneAngleQuery& q,
                                    const ConformalPoint& cp,
                                    double tol = 1e-6) {
  const Vec2 c = cp.position();
  for (const HomPoint* v : {&q.vp_a, &q.vp_b}) {
    const double off =
        is_finite(*v)
            ? std::abs(signed_distance(euclidean(*v), cp.horizon)) /
                  ((euclidean(*v) - c).norm() + 1.0)
            : std::abs(incidence(*v, cp.horizon));
    if (off > tol) {
      throw PreconditionError("plane_angle: vanishing point is off the horizon");
    }
  }
  const double theta = detail::unsigned_angle(detail::direction_to(c, q.vp_a),
                                              detail::direction_to(c, q.vp_b));
  return {theta, std::cos(theta), AngleMethod::algebraic};
}

// ---------------------------------------------------------------------------
// Focal length from two orthogonal vanishing points and the principal point

struct ReflectedPolarFocal {
  double focal;
  double x;  ///< |PD|
  double h;  ///< |PA|
  Vec2 a_reflected;
  Vec2 d;
};

/// A' is A reflected through P; D is where AA' meets the perpendicular
/// through B. Then f² = |PD|·|PA|.
inline ReflectedPolarFocal focal_reflected_polar_method(const Vec2& a,
                                                        const Vec2& b,
                                                        const Vec2& p) {
  const double h = (a - p).norm();
  const double scale = std::max({(a - p).norm(), (b - p).norm(), 1.0});
  if (h <= kTolerance * scale) {
    throw DegenerateError("focal_reflected_polar_method: A is the principal point");
  }
  const Vec2 ar = 2.0 * p - a;
  const HomLine axis = line_through(a, ar);
  const Vec2 d = euclidean(meet(axis, perpendicular_through(to_hom(b), axis)));
  const double x = (d - p).dot(ar - p) / h;
  const double f2 = x * h;
  if (!(f2 > 0.0)) {
    throw DegenerateError(
        "focal_reflected_polar_method: D falls on the wrong side of P; "
        "vanishing points are not orthogonal");
  }
  return {std::sqrt(f2), x, h, ar, d};
}

struct ConformalFocal {
  double focal;
  double a;  ///< |AO|
  double b;  ///< |OB|
  double d;  ///< |OP|
  double s;  ///< |OC|
  Vec2 o;
  ConformalPoint conformal_point;
};

/// The semicircle on AB meets the perpendicular from P at the conformal
/// point C of line AB, with |OC|² = ab. Then f² = ab - d².
inline ConformalFocal focal_conformal_method(
    const Vec2& a, const Vec2& b, const Vec2& p,
    std::optional<Branch> branch = std::nullopt) {
  const double len = (b - a).norm();
  if (len <= kTolerance * std::max({a.norm(), b.norm(), 1.0})) {
    throw DegenerateError("focal_conformal_method: A and B coincide");
  }
  const HomLine ab = line_through(a, b);
  const Vec2 o = euclidean(foot_of_perpendicular(to_hom(p), ab));
  const Vec2 u = (b - a) / len;
  const double da = (o - a).dot(u);
  const double db = (b - o).dot(u);
  if (!(da > 0.0) || !(db > 0.0)) {
    throw DegenerateError(
        "focal_conformal_method: foot of the perpendicular lies outside AB");
  }
  const double d = (o - p).norm();
  const double f2 = da * db - d * d;
  if (!(f2 > 0.0)) {
    throw DegenerateError("focal_conformal_method: ab <= d^2");
  }
  const double s = std::sqrt(da * db);
  const Branch br = branch.value_or(detail::default_branch(ab, p));
  return {std::sqrt(f2), da, db, d, s, o,
          detail::make_conformal(ab, o, s, br)};
}

struct KnownAngleCandidate {
  ConformalPoint conformal_point;
  double focal;
  double s;  ///< distance of the conformal point from line AB
};

struct KnownAngleFocal {
  std::vector<KnownAngleCandidate> candidates;
  double d;
  Vec2 o;
};

/// Generalizes the semicircle construction to vanishing points of lines
/// meeting at a known angle θ: the conformal point lies on the arc over AB
/// from which AB subtends θ. When the perpendicular from P crosses that arc
/// twice, both candidates are returned.
inline KnownAngleFocal conformal_point_from_known_angle(
    const Vec2& a, const Vec2& b, const Vec2& p, double theta,
    std::optional<Branch> branch = std::nullopt) {
  if (!(theta > 0.0 && theta < std::numbers::pi)) {
    throw PreconditionError("known-angle construction: theta must be in (0, pi)");
  }
  const double len = (b - a).norm();
  if (len <= kTolerance * std::max({a.norm(), b.norm(), 1.0})) {
    throw DegenerateError("known-angle construction: A and B coincide");
  }
  const HomLine ab = line_through(a, b);
  const Vec2 u = (b - a) / len;
  const Vec2 m = 0.5 * (a + b);
  const Vec2 o = euclidean(foot_of_perpendicular(to_hom(p), ab));
  const double d = (o - p).norm();

  // Arc centre sits at height c above the chord midpoint, radius r.
  const double half = 0.5 * len;
  const double c = half * std::cos(theta) / std::sin(theta);
  const double r = half / std::sin(theta);
  const double e = (o - m).dot(u);
  const double disc = r * r - e * e;

  KnownAngleFocal out{{}, d, o};
  if (disc < 0.0) {
    throw DegenerateError(
        "known-angle construction: perpendicular from P misses the arc");
  }
  const double root = std::sqrt(disc);
  const Branch br = branch.value_or(detail::default_branch(ab, p));
  for (double t : {c + root, c - root}) {
    if (!(t > kTolerance * len)) continue;
    if (!out.candidates.empty() &&
        std::abs(out.candidates.front().s - t) <= kTolerance * len) {
      continue;
    }
    const double f2 = t * t - d * d;
    if (!(f2 > 0.0)) continue;
    out.candidates.push_back(
        {detail::make_conformal(ab, o, t, br), std::sqrt(f2), t});
  }
  if (out.candidates.empty()) {
    throw DegenerateError(
        "known-angle construction: no consistent conformal point");
  }
  return out;
}

struct PrincipalLocus {
  HomLine line;           ///< locus of the principal point
  Vec2 conformal_point;   ///< on the positive side of the horizon
  std::vector<HomLine> alternates;
};

/// Two known angles between vanishing points on one horizon pin the
/// conformal point to the intersection of two θ-arcs; the principal point
/// then lies on the perpendicular from it to the horizon.
inline PrincipalLocus principal_line_constraint(const Vec2& a1, const Vec2& b1,
                                                double theta1, const Vec2& a2,
                                                const Vec2& b2, double theta2,
                                                double tol = 1e-6) {
  const HomLine horizon = line_through(a1, b1);
  const double scale = std::max({(b1 - a1).norm(), (b2 - a2).norm(), 1.0});
  for (const Vec2* v : {&a2, &b2}) {
    if (std::abs(signed_distance(*v, horizon)) > tol * scale) {
      throw PreconditionError(
          "principal_line_constraint: second pair is off the horizon");
    }
  }
  const Vec2 n = detail::up_normal(horizon);

  struct Arc {
    Vec2 centre;
    double radius;
  };
  auto arc = [&n](const Vec2& a, const Vec2& b, double theta) {
    if (!(theta > 0.0 && theta < std::numbers::pi)) {
      throw PreconditionError("principal_line_constraint: theta out of range");
    }
    const double half = 0.5 * (b - a).norm();
    if (half == 0.0) {
      throw DegenerateError("principal_line_constraint: A and B coincide");
    }
    return Arc{0.5 * (a + b) + half / std::tan(theta) * n,
               half / std::sin(theta)};
  };
  const Arc c1 = arc(a1, b1, theta1);
  const Arc c2 = arc(a2, b2, theta2);

  const Vec2 delta = c2.centre - c1.centre;
  const double dist = delta.norm();
  if (dist <= kTolerance * scale) {
    throw DegenerateError(
        "principal_line_constraint: the two angle circles coincide");
  }
  if (dist > c1.radius + c2.radius || dist < std::abs(c1.radius - c2.radius)) {
    throw DegenerateError(
        "principal_line_constraint: the angle circles do not intersect");
  }
  const double along =
      (dist * dist + c1.radius * c1.radius - c2.radius * c2.radius) /
      (2.0 * dist);
  const double across = std::sqrt(std::max(0.0, c1.radius * c1.radius - along * along));
  const Vec2 ud = delta / dist;
  const Vec2 perp(-ud.y(), ud.x());
  const Vec2 base = c1.centre + along * ud;

  std::vector<Vec2> hits;
  for (const Vec2& x : {Vec2(base + across * perp), Vec2(base - across * perp)}) {
    if (signed_distance(x, horizon) > tol * scale) hits.push_back(x);
  }
  if (hits.size() == 2 && (hits[0] - hits[1]).norm() <= tol * scale) {
    hits.pop_back();
  }
  if (hits.empty()) {
    throw DegenerateError(
        "principal_line_constraint: the angle circles meet only on the horizon");
  }
  std::sort(hits.begin(), hits.end(), [&horizon](const Vec2& l, const Vec2& r) {
    return signed_distance(l, horizon) < signed_distance(r, horizon);
  });

  PrincipalLocus out{perpendicular_through(to_hom(hits[0]), horizon), hits[0], {}};
  for (std::size_t i = 1; i < hits.size(); ++i) {
    out.alternates.push_back(perpendicular_through(to_hom(hits[i]), horizon));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tilt and field of view

/// Angle between the principal ray and the plane, positive when the camera
/// looks down at it (principal point on the plane side of the horizon).
/// Geometrically this is the angle OEP, where O is the foot of the
/// perpendicular from P to the horizon and E the point of the calibrating
/// conic with PE orthogonal to OP.
inline double camera_tilt(const HomLine& horizon, const CalibratingConic& c) {
  const double f = detail::circle_radius(c, "camera_tilt");
  const Vec2 p = euclidean(c.centre);
  return std::atan2(-signed_distance(p, horizon), f);
}

struct FieldOfView {
  double horizontal;
  double vertical;
  double diagonal;
};

/// Angles subtended by the image edges (through the principal point) and by
/// opposite corners.
inline FieldOfView field_of_view(const CalibratingConic& c, double width,
                                 double height) {
  const double f = detail::circle_radius(c, "field_of_view");
  if (!(width > 0.0) || !(height > 0.0)) {
    throw PreconditionError("field_of_view: image size must be positive");
  }
  const Vec2 p = euclidean(c.centre);
  const Vec3 corner0(-p.x(), -p.y(), f);
  const Vec3 corner1(width - p.x(), height - p.y(), f);
  return {std::atan(p.x() / f) + std::atan((width - p.x()) / f),
          std::atan(p.y() / f) + std::atan((height - p.y()) / f),
          std::atan2(corner0.cross(corner1).norm(), corner0.dot(corner1))};
}

// ---------------------------------------------------------------------------
// Conformality of the image-to-plane map

struct Conformality {
  double anisotropy;  ///< (σmax - σmin) / (σmax + σmin)
  double lambda;      ///< mean of σ²
  double sigma_max;
  double sigma_min;
};

/// Finite-difference Jacobian of the image-to-plane map (the inverse of
/// `plane_to_image`) at `probe`. The map is conformal (anisotropy 0) only at
/// the conformal points of the plane's horizon.
inline Conformality conformality_check(const CalibrationMatrix& k,
                                       const HomLine& horizon,
                                       const Mat3& plane_to_image,
                                       const Vec2& probe,
                                       double image_scale = 0.0) {
  const double step = 1e-6 * std::max(k.fx(), image_scale);
  if (std::abs(signed_distance(probe, horizon)) <= 1e3 * step) {
    throw DegenerateError("conformality_check: probe lies on the horizon");
  }
  const Mat3 to_plane = plane_to_image.inverse();
  auto map = [&to_plane](const Vec2& x) {
    const Vec3 y = to_plane * Vec3(x.x(), x.y(), 1.0);
    return Vec2(y.head<2>() / y.z());
  };
  Mat2 j;
  j.col(0) = (map(probe + Vec2(step, 0.0)) - map(probe - Vec2(step, 0.0))) /
             (2.0 * step);
  j.col(1) = (map(probe + Vec2(0.0, step)) - map(probe - Vec2(0.0, step))) /
             (2.0 * step);
  if (!j.allFinite()) {
    throw DegenerateError("conformality_check: map is singular at probe");
  }
  const Eigen::JacobiSVD<Mat2> svd(j);
  const double smax = svd.singularValues()[0];
  const double smin = svd.singularValues()[1];
  return {(smax - smin) / (smax + smin), 0.5 * (smax * smax + smin * smin),
          smax, smin};
}

/// Coarse-to-fine grid search for the minimum of the conformality
/// anisotropy inside a square window. Probes too close to the horizon are
/// skipped.
inline Vec2 conformality_minimum(const CalibrationMatrix& k,
                                 const HomLine& horizon,
                                 const Mat3& plane_to_image, Vec2 centre,
                                 double half_width, int grid = 41,
                                 int levels = 6) {
  for (int level = 0; level < levels; ++level) {
    double best = std::numeric_limits<double>::infinity();
    Vec2 arg = centre;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        const Vec2 x =
            centre + half_width * Vec2(2.0 * i / (grid - 1) - 1.0,
                                       2.0 * j / (grid - 1) - 1.0);
        try {
          const double a =
              conformality_check(k, horizon, plane_to_image, x).anisotropy;
          if (a < best) {
            best = a;
            arg = x;
          }
        } catch (const DegenerateError&) {
        }
      }
    }
    centre = arg;
    half_width *= 4.0 / (grid - 1);
  }
  return centre;
}

}  // namespace conicam

#endif  // CONICAM_CONFORMAL_HPP
