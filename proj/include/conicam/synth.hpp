#ifndef CONICAM_SYNTH_HPP
#define CONICAM_SYNTH_HPP

// Synthetic pinhole camera and planar-motion sequences with ground truth.
// World frame: Z up, ground plane Z = 0. Headings are counterclockwise from
// +X seen from above; pitch is positive looking down.

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "conicam/calibration.hpp"
#include "conicam/errors.hpp"
#include "conicam/homography.hpp"
#include "conicam/projective.hpp"

namespace conicam::synth {

class SyntheticCamera {
 public:
  SyntheticCamera(const CalibrationMatrix& k, const Mat3& rotation,
                  const Vec3& centre)
      : k_(k), r_(rotation), c_(centre) {
    if (!(r_ * r_.transpose()).isIdentity(1e-12) ||
        std::abs(r_.determinant() - 1.0) > 1e-12) {
      throw PreconditionError("synthetic camera: rotation must be orthonormal");
    }
  }

  const CalibrationMatrix& k() const noexcept { return k_; }
  const Mat3& rotation() const noexcept { return r_; }
  const Vec3& centre() const noexcept { return c_; }

  /// Camera-frame coordinates (x right, y down, z forward).
  Vec3 to_camera(const Vec3& x) const { return r_ * (x - c_); }

  std::optional<Vec2> try_project(const Vec3& x) const {
    const Vec3 y = to_camera(x);
    if (!(y.z() > 0.0)) return std::nullopt;
    const Vec3 p = k_.matrix() * y;
    return Vec2(p.head<2>() / p.z());
  }

  HomPoint project(const Vec3& x) const {
    const Vec3 y = to_camera(x);
    if (!(y.z() > 0.0)) {
      throw DegenerateError("project: point is behind the camera");
    }
    return HomPoint(Vec3(k_.matrix() * y));
  }

  /// World direction of the ray through a pixel.
  Vec3 ray(const Vec2& pixel) const {
    return (r_.transpose() * k_.inverse() * Vec3(pixel.x(), pixel.y(), 1.0))
        .normalized();
  }

 private:
  CalibrationMatrix k_;
  Mat3 r_;
  Vec3 c_;
};

/// Rows right, down, forward for a camera with the given heading and pitch
/// and no roll.
inline Mat3 heading_pitch_rotation(double heading, double pitch) {
  const double cy = std::cos(heading);
  const double sy = std::sin(heading);
  const double cp = std::cos(pitch);
  const double sp = std::sin(pitch);
  const Vec3 fwd(cy * cp, sy * cp, -sp);
  const Vec3 right(sy, -cy, 0.0);
  const Vec3 down = fwd.cross(right);
  Mat3 r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = fwd;
  return r;
}

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

inline SyntheticCamera ground_camera(const CalibrationMatrix& k,
                                     const Pose2& pose, double height,
                                     double pitch) {
  if (!(height > 0.0)) {
    throw PreconditionError("ground_camera: height must be positive");
  }
  return {k, heading_pitch_rotation(pose.heading, pitch),
          Vec3(pose.x, pose.y, height)};
}

struct TrueHorizon {
  HomLine line;
  bool degenerate;  ///< plane is fronto-parallel; the line is at infinity
};

/// Vanishing line K⁻ᵀ R n of the plane with world normal `normal`, signed so
/// that points on the side the normal points away from are negative.
inline TrueHorizon true_horizon(const SyntheticCamera& cam,
                                const Vec3& normal = Vec3::UnitZ()) {
  const Vec3 l = cam.k().inverse().transpose() * cam.rotation() * normal;
  const bool degenerate = l.head<2>().norm() <= 1e-12 * l.norm();
  return {HomLine(l), degenerate};
}

/// Homography from ground-plane world coordinates (X, Y) to pixels.
inline Mat3 ground_plane_to_image(const SyntheticCamera& cam) {
  const Mat3 kr = cam.k().matrix() * cam.rotation();
  Mat3 h;
  h.col(0) = kr.col(0);
  h.col(1) = kr.col(1);
  h.col(2) = -kr * cam.centre();
  return h;
}

struct PlanarMotionSpec {
  CalibrationMatrix k;
  double height = 1.0;
  double pitch = 0.3;
  double width = 640.0;
  double image_height = 480.0;
  std::vector<Pose2> poses;

  SyntheticCamera camera(std::size_t frame) const {
    return ground_camera(k, poses.at(frame), height, pitch);
  }
};

/// Heading ψ_k = amplitude·sin(2πk / period); forward speed `step` per frame.
inline std::vector<Pose2> sinusoidal_motion(std::size_t frames,
                                            double amplitude, double period,
                                            double step) {
  std::vector<Pose2> poses;
  Pose2 p;
  for (std::size_t f = 0; f < frames; ++f) {
    p.heading = amplitude * std::sin(2.0 * std::numbers::pi *
                                     static_cast<double>(f) / period);
    poses.push_back(p);
    p.x += step * std::cos(p.heading);
    p.y += step * std::sin(p.heading);
  }
  return poses;
}

/// Ground point in front of a camera pose, uniformly over a sector of the
/// plane between `near` and `far` camera-footprint distances.
inline Vec3 sample_ground_point(std::mt19937_64& rng, const Pose2& pose,
                                double near, double far, double half_angle) {
  std::uniform_real_distribution<double> r(near, far);
  std::uniform_real_distribution<double> a(-half_angle, half_angle);
  const double d = r(rng);
  const double phi = pose.heading + a(rng);
  return {pose.x + d * std::cos(phi), pose.y + d * std::sin(phi), 0.0};
}

struct PairTruth {
  int i;
  int j;
  double theta;             ///< heading_j - heading_i, wrapped
  Vec2 t;                   ///< frame j origin in frame i plane coordinates
  std::vector<bool> outlier;
};

struct GeneratedSequence {
  std::vector<MatchSet> pairs;
  std::vector<PairTruth> truth;
  HomLine horizon;
  Mat3 k;
};

struct GenerationOptions {
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> pair_offsets{1};
  std::size_t points_per_pair = 100;
  double near = 2.0;   ///< in camera heights
  double far = 15.0;   ///< in camera heights
};

namespace detail {

inline bool in_image(const Vec2& x, double w, double h) {
  return x.x() >= 0.0 && x.x() <= w && x.y() >= 0.0 && x.y() <= h;
}

inline double wrap(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace detail

/// Match sets for frame pairs (k, k + offset). Ground points come from
/// `scene` when it is given, otherwise `points_per_pair` fresh points are
/// drawn in front of frame k. Points not visible in both frames are dropped.
/// Noise is isotropic Gaussian on both positions; an outlier's second
/// position is uniform over the image.
inline GeneratedSequence generate_sequence(
    const PlanarMotionSpec& spec, const GenerationOptions& opt,
    const std::optional<std::vector<Vec3>>& scene = std::nullopt) {
  if (spec.poses.empty()) {
    throw PreconditionError("generate_sequence: no poses");
  }
  const SyntheticCamera first = spec.camera(0);
  GeneratedSequence out{{}, {}, true_horizon(first).line, spec.k.matrix()};

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double half_angle =
      std::atan(0.5 * spec.width / spec.k.fx()) + 0.05;

  const auto n = static_cast<int>(spec.poses.size());
  for (int i = 0; i < n; ++i) {
    for (int offset : opt.pair_offsets) {
      const int j = i + offset;
      if (offset <= 0 || j >= n) continue;
      const SyntheticCamera ci = spec.camera(static_cast<std::size_t>(i));
      const SyntheticCamera cj = spec.camera(static_cast<std::size_t>(j));
      const Pose2& pi = spec.poses[static_cast<std::size_t>(i)];
      const Pose2& pj = spec.poses[static_cast<std::size_t>(j)];

      std::vector<Vec3> points;
      if (scene) {
        points = *scene;
      } else if (opt.points_per_pair > 0) {
        std::size_t tries = 0;
        while (points.size() < opt.points_per_pair &&
               tries++ < 50 * opt.points_per_pair) {
          const Vec3 x = sample_ground_point(rng, pi, opt.near * spec.height,
                                             opt.far * spec.height, half_angle);
          const auto a = ci.try_project(x);
          const auto b = cj.try_project(x);
          if (a && b && detail::in_image(*a, spec.width, spec.image_height) &&
              detail::in_image(*b, spec.width, spec.image_height)) {
            points.push_back(x);
          }
        }
      }

      MatchSet ms;
      ms.frame_i = i;
      ms.frame_j = j;
      PairTruth truth{i, j, detail::wrap(pj.heading - pi.heading), Vec2::Zero(),
                      {}};
      const double c = std::cos(pi.heading);
      const double s = std::sin(pi.heading);
      const Vec2 d(pj.x - pi.x, pj.y - pi.y);
      truth.t = Vec2(c * d.x() + s * d.y(), -s * d.x() + c * d.y()) / spec.height;

      for (const Vec3& x : points) {
        const auto a = ci.try_project(x);
        const auto b = cj.try_project(x);
        if (!a || !b || !detail::in_image(*a, spec.width, spec.image_height) ||
            !detail::in_image(*b, spec.width, spec.image_height)) {
          continue;
        }
        Vec2 xa = *a;
        Vec2 xb = *b;
        if (opt.noise_sigma > 0.0) {
          xa += opt.noise_sigma * Vec2(noise(rng), noise(rng));
          xb += opt.noise_sigma * Vec2(noise(rng), noise(rng));
        }
        bool outlier = false;
        if (opt.outlier_fraction > 0.0 && unit(rng) < opt.outlier_fraction) {
          xb = Vec2(unit(rng) * spec.width, unit(rng) * spec.image_height);
          outlier = true;
        }
        ms.matches.push_back({xa, xb});
        ms.ground_plane.push_back(true);
        truth.outlier.push_back(outlier);
      }
      out.pairs.push_back(std::move(ms));
      out.truth.push_back(std::move(truth));
    }
  }
  return out;
}

}  // namespace conicam::synth

#endif  // CONICAM_SYNTH_HPP
