#ifndef CONICAM_ODOMETRY_HPP
#define CONICAM_ODOMETRY_HPP

// Planar self-odometry through the conformal point: two-point rotation,
// robust aggregation (RANSAC and median), 2D rotation averaging, linear
// translation recovery and a whole-sequence driver.
//
// Plane coordinates are (forward, left) in units of the camera height, with
// counterclockwise rotation seen from above positive. A pair (i, j) relates
// plane coordinates of frame i and frame j by X_i = R(θ) X_j + t.

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conicam/calibration.hpp"
#include "conicam/conformal.hpp"
#include "conicam/homography.hpp"
#include "conicam/projective.hpp"

namespace conicam {

/// Wraps an angle to (-π, π].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

inline double circular_mean(std::span<const double> angles) {
  double s = 0.0;
  double c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  return wrap_angle(std::atan2(s, c));
}

/// Median of angles unwrapped around their circular mean. Linear time; the
/// result is one of the inputs (the lower median for even counts).
inline double circular_median(std::span<const double> angles) {
  if (angles.empty()) throw PreconditionError("circular_median: no angles");
  const double ref = circular_mean(angles);
  std::vector<double> unwrapped;
  unwrapped.reserve(angles.size());
  for (double a : angles) unwrapped.push_back(ref + wrap_angle(a - ref));
  const auto mid = unwrapped.begin() +
                   static_cast<std::ptrdiff_t>((unwrapped.size() - 1) / 2);
  std::nth_element(unwrapped.begin(), mid, unwrapped.end());
  return wrap_angle(*mid);
}

enum class RotationMethod { two_point, median, ransac };

struct RotationEstimate {
  double theta = 0.0;        ///< radians in (-π, π]
  std::size_t support = 0;   ///< matches consistent with theta
  RotationMethod method = RotationMethod::two_point;
  std::vector<std::size_t> inliers;
};

namespace detail {

// Direction at the conformal point that images the world direction A→B.
// The vanishing point of line AB is flipped when it lies behind A as seen
// from B, since the world direction then points away from it.
inline Vec2 world_direction_at(const Vec2& a, const Vec2& b,
                               const ConformalPoint& cp) {
  const double scale = std::max({a.norm(), b.norm(), 1.0});
  if ((b - a).norm() <= kTolerance * scale) {
    throw DegenerateError("two_point_rotation: matched points coincide");
  }
  const HomPoint v = meet(line_through(a, b), cp.horizon);
  if (!is_finite(v, 1e-12)) {
    throw DegenerateError(
        "two_point_rotation: direction at infinity, ill-conditioned");
  }
  const Vec2 ve = euclidean(v);
  const double sense = (ve - a).dot(b - a) >= 0.0 ? 1.0 : -1.0;
  return sense * (ve - cp.position());
}

inline double signed_angle(const Vec2& u, const Vec2& v) {
  return std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
}

inline std::optional<double> try_two_point(const Vec2& a, const Vec2& b,
                                           const Vec2& a2, const Vec2& b2,
                                           const ConformalPoint& cp) {
  try {
    const Vec2 d1 = world_direction_at(a, b, cp);
    const Vec2 d2 = world_direction_at(a2, b2, cp);
    // Raster angles at the lower conformal point have the sense of platform
    // rotation; the upper one is its mirror image.
    const double s = cp.branch == Branch::below ? 1.0 : -1.0;
    return wrap_angle(s * signed_angle(d1, d2));
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Platform rotation between two frames from two matches A↔A', B↔B': the
/// world angle between segments AB and A'B', measured at the conformal point
/// of the horizon. Counterclockwise (seen from above) is positive.
inline RotationEstimate two_point_rotation(const Vec2& a, const Vec2& b,
                                           const Vec2& a2, const Vec2& b2,
                                           const ConformalPoint& cp) {
  const Vec2 d1 = detail::world_direction_at(a, b, cp);
  const Vec2 d2 = detail::world_direction_at(a2, b2, cp);
  const double s = cp.branch == Branch::below ? 1.0 : -1.0;
  return {wrap_angle(s * detail::signed_angle(d1, d2)), 2,
          RotationMethod::two_point, {}};
}

/// Matches D for which both ∠(AD, A'D') and ∠(BD, B'D') agree with `theta`
/// to within `tol`. The anchors are always included.
inline std::vector<std::size_t> rotation_inliers(double theta,
                                                 const MatchSet& ms,
                                                 std::size_t anchor_a,
                                                 std::size_t anchor_b,
                                                 const ConformalPoint& cp,
                                                 double tol) {
  if (anchor_a >= ms.size() || anchor_b >= ms.size() || anchor_a == anchor_b) {
    throw PreconditionError("rotation_support: invalid anchors");
  }
  const PointMatch& ma = ms.matches[anchor_a];
  const PointMatch& mb = ms.matches[anchor_b];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (i == anchor_a || i == anchor_b) {
      out.push_back(i);
      continue;
    }
    const PointMatch& md = ms.matches[i];
    const auto ta = detail::try_two_point(ma.first, md.first, ma.second,
                                          md.second, cp);
    if (!ta || std::abs(wrap_angle(*ta - theta)) > tol) continue;
    const auto tb = detail::try_two_point(mb.first, md.first, mb.second,
                                          md.second, cp);
    if (!tb || std::abs(wrap_angle(*tb - theta)) > tol) continue;
    out.push_back(i);
  }
  return out;
}

inline std::size_t rotation_support(double theta, const MatchSet& ms,
                                    std::size_t anchor_a, std::size_t anchor_b,
                                    const ConformalPoint& cp, double tol) {
  return rotation_inliers(theta, ms, anchor_a, anchor_b, cp, tol).size();
}

struct RansacOptions {
  double tol = 0.5 * std::numbers::pi / 180.0;
  int iterations = 200;
  std::uint64_t seed = 0;
  std::size_t min_support = 3;
};

/// Two-point RANSAC: hypothesize θ from random pairs of matches, keep the
/// hypothesis with the largest support, then refine θ as the circular mean of
/// the inliers' two-point estimates against the winning anchors.
inline RotationEstimate ransac_rotation(const MatchSet& ms,
                                        const ConformalPoint& cp,
                                        const RansacOptions& opt = {}) {
  const std::size_t n = ms.size();
  if (n < 2) throw PreconditionError("ransac_rotation: need at least 2 matches");

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, n - 2);

  std::vector<std::size_t> best;
  std::size_t best_a = 0;
  std::size_t best_b = 0;
  double best_theta = 0.0;
  for (int it = 0; it < opt.iterations; ++it) {
    const std::size_t ia = pick_a(rng);
    std::size_t ib = pick_b(rng);
    if (ib >= ia) ++ib;
    const PointMatch& ma = ms.matches[ia];
    const PointMatch& mb = ms.matches[ib];
    const auto theta =
        detail::try_two_point(ma.first, mb.first, ma.second, mb.second, cp);
    if (!theta) continue;
    auto inl = rotation_inliers(*theta, ms, ia, ib, cp, opt.tol);
    if (inl.size() > best.size()) {
      best = std::move(inl);
      best_a = ia;
      best_b = ib;
      best_theta = *theta;
    }
  }
  if (best.size() < opt.min_support) {
    throw EstimationError("ransac_rotation: no hypothesis reached the minimum support");
  }

  const PointMatch& ma = ms.matches[best_a];
  const PointMatch& mb = ms.matches[best_b];
  std::vector<double> estimates{best_theta};
  for (std::size_t i : best) {
    if (i == best_a || i == best_b) continue;
    const PointMatch& md = ms.matches[i];
    for (const PointMatch* anchor : {&ma, &mb}) {
      if (auto t = detail::try_two_point(anchor->first, md.first,
                                         anchor->second, md.second, cp)) {
        estimates.push_back(*t);
      }
    }
  }
  const std::size_t support = best.size();
  return {circular_mean(estimates), support, RotationMethod::ransac,
          std::move(best)};
}

/// Median of two-point estimates over disjoint pairs (0,1), (2,3), ... of
/// the matches after a seeded shuffle.
inline RotationEstimate median_rotation(const MatchSet& ms,
                                        const ConformalPoint& cp,
                                        std::uint64_t seed = 0) {
  if (ms.size() < 2) {
    throw PreconditionError("median_rotation: need at least 2 matches");
  }
  std::vector<std::size_t> order(ms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> estimates;
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k + 1 < order.size(); k += 2) {
    const PointMatch& ma = ms.matches[order[k]];
    const PointMatch& mb = ms.matches[order[k + 1]];
    if (auto t = detail::try_two_point(ma.first, mb.first, ma.second,
                                       mb.second, cp)) {
      estimates.push_back(*t);
      used.push_back(order[k]);
      used.push_back(order[k + 1]);
    }
  }
  if (estimates.empty()) {
    throw EstimationError("median_rotation: no valid pair of matches");
  }
  std::sort(used.begin(), used.end());
  const std::size_t support = used.size();
  return {circular_median(estimates), support, RotationMethod::median,
          std::move(used)};
}

// ---------------------------------------------------------------------------
// Rotation averaging

struct RelativeRotation {
  int i;
  int j;
  double theta;  ///< heading_j - heading_i
  double weight = 1.0;
};

namespace detail {

inline std::vector<std::vector<int>> components(
    int n, std::span<const RelativeRotation> edges) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges) parent[find(e.i)] = find(e.j);
  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < n; ++v) groups[find(v)].push_back(v);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Absolute headings (frame 0 pinned to zero) minimizing
/// Σ w |e^{iθj} - e^{iθij} e^{iθi}|², solved linearly on the complex
/// embedding and renormalized.
inline std::vector<double> average_rotations(
    int n_frames, std::span<const RelativeRotation> edges) {
  if (n_frames <= 0) return {};
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n_frames || e.j >= n_frames || e.i == e.j) {
      throw PreconditionError("average_rotations: invalid edge");
    }
    if (!(e.weight > 0.0)) {
      throw PreconditionError("average_rotations: weights must be positive");
    }
  }
  const auto comps = detail::components(n_frames, edges);
  if (comps.size() > 1) {
    std::ostringstream msg;
    msg << "average_rotations: pair graph is disconnected; components:";
    for (const auto& c : comps) {
      msg << " {";
      for (std::size_t k = 0; k < c.size(); ++k) msg << (k ? "," : "") << c[k];
      msg << "}";
    }
    throw DegenerateError(msg.str());
  }
  if (n_frames == 1) return {0.0};

  // Unknowns: (cos, sin) of frames 1..n-1; frame 0 is (1, 0).
  const int m = 2 * (n_frames - 1);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  auto idx = [](int frame) { return 2 * (frame - 1); };
  auto add_block = [&trip](int r, int c, const Mat2& b) {
    for (int a = 0; a < 2; ++a) {
      for (int d = 0; d < 2; ++d) trip.emplace_back(r + a, c + d, b(a, d));
    }
  };
  const Vec2 pinned(1.0, 0.0);
  for (const auto& e : edges) {
    Mat2 r;
    r << std::cos(e.theta), -std::sin(e.theta),
         std::sin(e.theta), std::cos(e.theta);
    const double w = e.weight;
    // residual z_j - R z_i
    if (e.i != 0) add_block(idx(e.i), idx(e.i), w * Mat2::Identity());
    if (e.j != 0) add_block(idx(e.j), idx(e.j), w * Mat2::Identity());
    if (e.i != 0 && e.j != 0) {
      add_block(idx(e.i), idx(e.j), -w * r.transpose());
      add_block(idx(e.j), idx(e.i), -w * r);
    } else if (e.i == 0) {
      rhs.segment<2>(idx(e.j)) += w * r * pinned;
    } else {
      rhs.segment<2>(idx(e.i)) += w * r.transpose() * pinned;
    }
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) {
    throw EstimationError("average_rotations: normal equations are singular");
  }
  const Eigen::VectorXd z = solver.solve(rhs);

  std::vector<double> headings(static_cast<std::size_t>(n_frames), 0.0);
  for (int f = 1; f < n_frames; ++f) {
    headings[f] = wrap_angle(std::atan2(z[idx(f) + 1], z[idx(f)]));
  }
  return headings;
}

// ---------------------------------------------------------------------------
// Translation

/// Maps image points on the ground side of the horizon to plane coordinates
/// (forward, left) at camera height 1.
class GroundRectifier {
 public:
  GroundRectifier(const CalibrationMatrix& k, const HomLine& horizon)
      : kinv_(k.inverse()) {
    if (is_line_at_infinity(horizon)) {
      throw DegenerateError("ground rectification: horizon at infinity");
    }
    up_ = (k.matrix().transpose() * horizon.vec()).normalized();
    Vec3 fwd = Vec3::UnitZ() - up_.z() * up_;
    if (fwd.norm() < 1e-9) fwd = -Vec3::UnitY() - (-up_.y()) * up_;
    fwd_ = fwd.normalized();
    left_ = up_.cross(fwd_);
    plane_to_image_.col(0) = k.matrix() * fwd_;
    plane_to_image_.col(1) = k.matrix() * left_;
    plane_to_image_.col(2) = k.matrix() * (-up_);
  }

  std::optional<Vec2> rectify(const Vec2& x) const {
    const Vec3 r = kinv_ * Vec3(x.x(), x.y(), 1.0);
    const double down = r.dot(up_);
    if (!(down < -1e-12 * r.norm())) return std::nullopt;
    const Vec3 p = -r / down;
    return Vec2(p.dot(fwd_), p.dot(left_));
  }

  /// Derivative of `rectify` with respect to the pixel position.
  Mat2 jacobian(const Vec2& x) const {
    const Vec3 r = kinv_ * Vec3(x.x(), x.y(), 1.0);
    const double down = r.dot(up_);
    const Vec3 p = -r / down;
    Mat2 j;
    for (int c = 0; c < 2; ++c) {
      const Vec3 dr = kinv_.col(c);
      const Vec3 dp = -(dr - p * (-dr.dot(up_))) / down;
      j(0, c) = dp.dot(fwd_);
      j(1, c) = dp.dot(left_);
    }
    return j;
  }

  /// Homography from plane coordinates to pixels.
  const Mat3& plane_to_image() const noexcept { return plane_to_image_; }

 private:
  Mat3 kinv_;
  Vec3 up_;
  Vec3 fwd_;
  Vec3 left_;
  Mat3 plane_to_image_;
};

inline Mat2 rotation2(double theta) {
  Mat2 r;
  r << std::cos(theta), -std::sin(theta),
       std::sin(theta), std::cos(theta);
  return r;
}

struct TranslationEstimate {
  Vec2 t = Vec2::Zero();   ///< frame j's origin in frame i's plane coordinates
  std::size_t used = 0;
  double rms = 0.0;        ///< residual RMS in plane units
};

namespace detail {

// One match's translation estimate X_i - R X_j and its information matrix
// under isotropic pixel noise.
struct TranslationSample {
  Vec2 value;
  Mat2 info;
};

inline std::vector<TranslationSample> translation_samples(
    const MatchSet& ms, double theta, const GroundRectifier& rect,
    std::span<const std::size_t> subset) {
  const Mat2 r = rotation2(theta);
  std::vector<TranslationSample> out;
  auto visit = [&](std::size_t i) {
    if (!ms.on_ground(i)) return;
    const auto xi = rect.rectify(ms.matches[i].first);
    const auto xj = rect.rectify(ms.matches[i].second);
    if (!xi || !xj) return;
    const Mat2 ji = rect.jacobian(ms.matches[i].first);
    const Mat2 jj = r * rect.jacobian(ms.matches[i].second);
    const Mat2 cov = ji * ji.transpose() + jj * jj.transpose();
    out.push_back({*xi - r * *xj, cov.inverse()});
  };
  if (subset.empty()) {
    for (std::size_t i = 0; i < ms.size(); ++i) visit(i);
  } else {
    for (std::size_t i : subset) visit(i);
  }
  return out;
}

inline TranslationEstimate weighted_translation(
    std::span<const TranslationSample> samples) {
  Mat2 a = Mat2::Zero();
  Vec2 b = Vec2::Zero();
  for (const auto& s : samples) {
    a += s.info;
    b += s.info * s.value;
  }
  TranslationEstimate out;
  out.t = a.ldlt().solve(b);
  out.used = samples.size();
  double sum = 0.0;
  for (const auto& s : samples) sum += (s.value - out.t).squaredNorm();
  out.rms = std::sqrt(sum / static_cast<double>(samples.size()));
  return out;
}

}  // namespace detail

/// Least-squares translation for known rotation: each ground-plane match is
/// rectified in both frames and contributes X_i - R(θ) X_j, weighted by the
/// inverse of its covariance under equal pixel noise. Far points, whose
/// rectified positions are the least certain, count the least.
inline TranslationEstimate recover_translation(
    const MatchSet& ms, double theta, const CalibrationMatrix& k,
    const HomLine& horizon, std::span<const std::size_t> subset = {}) {
  const GroundRectifier rect(k, horizon);
  const auto samples = detail::translation_samples(ms, theta, rect, subset);
  if (samples.empty()) {
    throw PreconditionError("recover_translation: no usable ground-plane matches");
  }
  return detail::weighted_translation(samples);
}

/// As `recover_translation`, but samples farther than `gate` (plane units)
/// from the component-wise median are discarded first.
inline TranslationEstimate recover_translation_robust(
    const MatchSet& ms, double theta, const CalibrationMatrix& k,
    const HomLine& horizon, double gate,
    std::span<const std::size_t> subset = {}) {
  const GroundRectifier rect(k, horizon);
  const auto samples = detail::translation_samples(ms, theta, rect, subset);
  if (samples.empty()) {
    throw PreconditionError("recover_translation: no usable ground-plane matches");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : samples) {
    xs.push_back(s.value.x());
    ys.push_back(s.value.y());
  }
  const auto mid = static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  std::nth_element(ys.begin(), ys.begin() + mid, ys.end());
  const Vec2 med(xs[mid], ys[mid]);

  std::vector<detail::TranslationSample> kept;
  for (const auto& s : samples) {
    if ((s.value - med).norm() <= gate) kept.push_back(s);
  }
  if (kept.empty()) kept = samples;
  return detail::weighted_translation(kept);
}

// ---------------------------------------------------------------------------
// Sequences

enum class Estimator { ransac, median };
enum class FailurePolicy { interpolate, drop };

struct SequenceConfig {
  Estimator estimator = Estimator::ransac;
  RansacOptions ransac{};
  FailurePolicy on_failure = FailurePolicy::interpolate;
  double translation_gate = 0.1;  ///< plane units (camera heights)
  int frames = 0;                 ///< 0: inferred from the pairs
};

struct FramePose {
  int frame;
  double theta;  ///< heading, radians
  double tx;
  double ty;
  bool interpolated = false;
};

/// Headings and positions per frame; frame 0 is the origin.
struct PlanarTrajectory {
  std::vector<FramePose> poses;
};

struct PairDiagnostics {
  int i;
  int j;
  bool ok = false;
  double theta = 0.0;
  std::size_t support = 0;
  std::size_t matches = 0;
  double inlier_ratio = 0.0;
  std::string message;
};

struct SequenceResult {
  PlanarTrajectory trajectory;
  std::vector<PairDiagnostics> pairs;
};

namespace detail {

struct PairSolution {
  RotationEstimate rotation;
  std::vector<std::size_t> inliers;
};

}  // namespace detail

/// Runs per-pair rotation estimation, averages the rotations over the pair
/// graph, then chains per-pair translations into frame 0's plane coordinates.
inline SequenceResult run_sequence(std::span<const MatchSet> pairs,
                                   const CalibrationMatrix& k,
                                   const HomLine& horizon,
                                   const ConformalPoint& cp,
                                   const SequenceConfig& cfg = {}) {
  SequenceResult out;
  if (pairs.empty()) return out;

  int n_frames = cfg.frames;
  for (const auto& p : pairs) {
    if (p.frame_i < 0 || p.frame_j < 0 || p.frame_i == p.frame_j) {
      throw PreconditionError("run_sequence: invalid frame indices");
    }
    if (cfg.frames > 0 && std::max(p.frame_i, p.frame_j) >= cfg.frames) {
      throw PreconditionError("run_sequence: pair references a frame beyond the sequence");
    }
    n_frames = std::max({n_frames, p.frame_i + 1, p.frame_j + 1});
  }
  {
    std::vector<RelativeRotation> input;
    for (const auto& p : pairs) input.push_back({p.frame_i, p.frame_j, 0.0, 1.0});
    const auto comps = detail::components(n_frames, input);
    if (comps.size() > 1) {
      std::ostringstream msg;
      msg << "run_sequence: pair graph is disconnected; components:";
      for (const auto& c : comps) {
        msg << " {";
        for (std::size_t q = 0; q < c.size(); ++q) msg << (q ? "," : "") << c[q];
        msg << "}";
      }
      throw DegenerateError(msg.str());
    }
  }

  std::vector<std::optional<detail::PairSolution>> sol(pairs.size());
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const MatchSet& ms = pairs[q];
    PairDiagnostics diag{ms.frame_i, ms.frame_j, false, 0.0, 0, 0, 0.0, {}};
    diag.matches = ms.size();
    try {
      RotationEstimate est;
      if (cfg.estimator == Estimator::ransac) {
        RansacOptions opt = cfg.ransac;
        opt.seed = cfg.ransac.seed + q;
        est = ransac_rotation(ms, cp, opt);
      } else {
        est = median_rotation(ms, cp, cfg.ransac.seed + q);
      }
      diag.ok = true;
      diag.theta = est.theta;
      diag.support = est.support;
      diag.inlier_ratio = ms.size() ? static_cast<double>(est.support) /
                                          static_cast<double>(ms.size())
                                    : 0.0;
      std::vector<std::size_t> inl =
          cfg.estimator == Estimator::ransac ? est.inliers
                                             : std::vector<std::size_t>{};
      sol[q] = detail::PairSolution{std::move(est), std::move(inl)};
    } catch (const Error& e) {
      diag.message = e.what();
    }
    out.pairs.push_back(std::move(diag));
  }

  // Rotation graph, with interpolated links across failed consecutive pairs.
  std::vector<RelativeRotation> edges;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    if (!sol[q]) continue;
    edges.push_back({pairs[q].frame_i, pairs[q].frame_j, sol[q]->rotation.theta,
                     static_cast<double>(std::max<std::size_t>(
                         sol[q]->rotation.support, 1))});
  }

  std::vector<bool> interpolated(static_cast<std::size_t>(n_frames), false);
  std::vector<bool> keep(static_cast<std::size_t>(n_frames), true);
  auto comps = detail::components(n_frames, edges);
  if (comps.size() > 1) {
    if (cfg.on_failure == FailurePolicy::interpolate) {
      // Constant angular rate across gaps: bridge each break between
      // consecutive frames with the mean per-frame rotation of the
      // successful consecutive pairs.
      std::vector<double> rates;
      for (const auto& e : edges) {
        if (e.j - e.i == 1) rates.push_back(e.theta);
        if (e.i - e.j == 1) rates.push_back(-e.theta);
      }
      const double rate = rates.empty() ? 0.0 : circular_mean(rates);
      std::vector<int> comp_of(static_cast<std::size_t>(n_frames));
      for (std::size_t c = 0; c < comps.size(); ++c) {
        for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
      }
      for (int f = 0; f + 1 < n_frames; ++f) {
        if (comp_of[f] != comp_of[f + 1]) {
          edges.push_back({f, f + 1, rate, 1e-3});
          interpolated[f + 1] = true;
          const int from = comp_of[f + 1];
          const int to = comp_of[f];
          for (auto& c : comp_of) {
            if (c == from) c = to;
          }
        }
      }
    } else {
      std::vector<bool> reach(static_cast<std::size_t>(n_frames), false);
      for (const auto& c : comps) {
        if (std::find(c.begin(), c.end(), 0) != c.end()) {
          for (int v : c) reach[v] = true;
        }
      }
      keep = reach;
    }
  }

  // Re-index kept frames so averaging sees a connected graph.
  std::vector<int> local(static_cast<std::size_t>(n_frames), -1);
  std::vector<int> global;
  for (int f = 0; f < n_frames; ++f) {
    if (keep[f]) {
      local[f] = static_cast<int>(global.size());
      global.push_back(f);
    }
  }
  std::vector<RelativeRotation> local_edges;
  for (const auto& e : edges) {
    if (keep[e.i] && keep[e.j]) {
      local_edges.push_back({local[e.i], local[e.j], e.theta, e.weight});
    }
  }
  const auto headings =
      average_rotations(static_cast<int>(global.size()), local_edges);

  // Translations along a breadth-first spanning tree from frame 0, using
  // consecutive pairs first.
  std::vector<std::optional<Vec2>> pos(static_cast<std::size_t>(n_frames));
  pos[0] = Vec2::Zero();
  std::vector<std::pair<std::size_t, bool>> order;  // pair index, forward
  struct Link {
    int to;
    std::size_t pair;
    bool forward;
  };
  std::vector<std::vector<Link>> adj(static_cast<std::size_t>(n_frames));
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    if (!sol[q]) continue;
    const int i = pairs[q].frame_i;
    const int j = pairs[q].frame_j;
    if (!keep[i] || !keep[j]) continue;
    adj[i].push_back({j, q, true});
    adj[j].push_back({i, q, false});
  }
  for (auto& a : adj) {
    std::stable_sort(a.begin(), a.end(), [&pairs](const Link& l, const Link& r) {
      auto gap = [&pairs](const Link& x) {
        return std::abs(pairs[x.pair].frame_j - pairs[x.pair].frame_i);
      };
      return gap(l) < gap(r);
    });
  }
  auto heading = [&](int f) { return headings[local[f]]; };
  std::queue<int> bfs;
  bfs.push(0);
  while (!bfs.empty()) {
    const int f = bfs.front();
    bfs.pop();
    for (const Link& l : adj[f]) {
      if (pos[l.to]) continue;
      const MatchSet& ms = pairs[l.pair];
      const double theta = heading(ms.frame_j) - heading(ms.frame_i);
      Vec2 t = Vec2::Zero();
      try {
        t = recover_translation_robust(ms, theta, k, horizon,
                                       cfg.translation_gate,
                                       sol[l.pair]->inliers)
                .t;
      } catch (const Error&) {
        interpolated[l.to] = true;
      }
      const Mat2 ri = rotation2(heading(ms.frame_i));
      if (l.forward) {
        pos[l.to] = *pos[f] + ri * t;
      } else {
        pos[l.to] = *pos[f] - ri * t;
      }
      bfs.push(l.to);
    }
  }

  // Frames reached only through interpolated rotation links: carry the
  // position forward along the previous step.
  for (int f = 1; f < n_frames; ++f) {
    if (!keep[f] || pos[f]) continue;
    int prev = f - 1;
    while (prev >= 0 && !pos[prev]) --prev;
    Vec2 step = Vec2::Zero();
    if (prev >= 1 && pos[prev - 1]) step = *pos[prev] - *pos[prev - 1];
    pos[f] = (prev >= 0 ? *pos[prev] : Vec2::Zero()) +
             static_cast<double>(f - prev) * step;
    interpolated[f] = true;
  }

  for (int f = 0; f < n_frames; ++f) {
    if (!keep[f]) continue;
    out.trajectory.poses.push_back(
        {f, heading(f), pos[f]->x(), pos[f]->y(), interpolated[f]});
  }
  return out;
}

/// Horizon for a whole sequence: per-pair fixed lines of the estimated
/// homographies, aggregated as the geometric median of the sign-aligned unit
/// line vectors. Pairs without usable rotation are skipped.
inline HomLine estimate_sequence_horizon(std::span<const MatchSet> pairs) {
  std::vector<Vec3> lines;
  for (const auto& ms : pairs) {
    try {
      const Vec3 l =
          horizon_from_homography(estimate_homography(ms)).vec().normalized();
      lines.push_back(lines.empty() || l.dot(lines.front()) >= 0.0 ? l : Vec3(-l));
    } catch (const Error&) {
    }
  }
  if (lines.empty()) {
    throw EstimationError("estimate_sequence_horizon: no pair yields a horizon");
  }
  // Weiszfeld iterations.
  Vec3 x = Vec3::Zero();
  for (const auto& l : lines) x += l;
  x /= static_cast<double>(lines.size());
  for (int it = 0; it < 100; ++it) {
    Vec3 num = Vec3::Zero();
    double den = 0.0;
    for (const auto& l : lines) {
      const double d = std::max((l - x).norm(), 1e-15);
      num += l / d;
      den += 1.0 / d;
    }
    const Vec3 next = num / den;
    if ((next - x).norm() < 1e-15) {
      x = next;
      break;
    }
    x = next;
  }
  return HomLine(x);
}

/// Orients a horizon so that most of the given image points (assumed to
/// image the plane) fall on its negative side.
inline HomLine orient_horizon_by_majority(const HomLine& l,
                                          std::span<const Vec2> plane_points) {
  int below = 0;
  for (const auto& p : plane_points) {
    below += signed_distance(p, l) < 0.0 ? 1 : -1;
  }
  return below >= 0 ? l : -l;
}

}  // namespace conicam

#endif  // CONICAM_ODOMETRY_HPP
