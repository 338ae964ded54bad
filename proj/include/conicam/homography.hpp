#ifndef CONICAM_HOMOGRAPHY_HPP
#define CONICAM_HOMOGRAPHY_HPP

// Point matches between frames, normalized-DLT and planar-motion homography
// estimation, and the horizon as the fixed line of a planar-motion homography.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "conicam/calibration.hpp"
#include "conicam/projective.hpp"

namespace conicam {

struct PointMatch {
  Vec2 first;   ///< pixel position in frame i
  Vec2 second;  ///< pixel position in frame j
};

/// Correspondences between two frames. `ground_plane` is either empty (all
/// matches are assumed to lie on the ground plane) or one flag per match.
struct MatchSet {
  int frame_i = 0;
  int frame_j = 1;
  std::vector<PointMatch> matches;
  std::vector<bool> ground_plane;

  std::size_t size() const noexcept { return matches.size(); }

  bool on_ground(std::size_t i) const {
    return ground_plane.empty() || ground_plane[i];
  }
};

/// 3x3 homography, unit Frobenius norm, largest-magnitude entry positive.
struct Homography {
  Mat3 matrix;
  double condition = 0.0;     ///< σmax / σmin of the matrix
  double transfer_rms = 0.0;  ///< symmetric transfer error in pixels

  Vec2 apply(const Vec2& x) const {
    const Vec3 y = matrix * Vec3(x.x(), x.y(), 1.0);
    return y.head<2>() / y.z();
  }
};

namespace detail {

// Similarity taking the points to zero centroid and mean distance √2.
inline Mat3 isotropic_normalization(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double spread = 0.0;
  for (const auto& p : pts) spread += (p - mean).norm();
  spread /= static_cast<double>(pts.size());
  const double s = spread > 0.0 ? std::sqrt(2.0) / spread : 1.0;
  Mat3 t;
  t << s, 0.0, -s * mean.x(),
       0.0, s, -s * mean.y(),
       0.0, 0.0, 1.0;
  return t;
}

inline Mat3 canonical_homography(const Mat3& h) {
  Mat3 n = h / h.norm();
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  n.cwiseAbs().maxCoeff(&r, &c);
  if (n(r, c) < 0.0) n = -n;
  return n;
}

inline Vec2 transfer(const Mat3& h, const Vec2& x) {
  const Vec3 y = h * Vec3(x.x(), x.y(), 1.0);
  return y.head<2>() / y.z();
}

}  // namespace detail

inline Homography make_homography(const Mat3& h) {
  Homography out;
  out.matrix = detail::canonical_homography(h);
  const Eigen::JacobiSVD<Mat3> svd(out.matrix);
  const Vec3 sv = svd.singularValues();
  out.condition = sv[2] > 0.0 ? sv[0] / sv[2]
                              : std::numeric_limits<double>::infinity();
  return out;
}

/// Normalized direct linear transform over the ground-plane matches.
inline Homography estimate_homography(const MatchSet& ms) {
  std::vector<Vec2> src;
  std::vector<Vec2> dst;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (!ms.on_ground(i)) continue;
    src.push_back(ms.matches[i].first);
    dst.push_back(ms.matches[i].second);
  }
  if (src.size() < 4) {
    throw PreconditionError(
        "estimate_homography: need at least 4 ground-plane matches");
  }

  const Mat3 t1 = detail::isotropic_normalization(src);
  const Mat3 t2 = detail::isotropic_normalization(dst);
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 x = t1 * Vec3(src[i].x(), src[i].y(), 1.0);
    const Vec3 y = t2 * Vec3(dst[i].x(), dst[i].y(), 1.0);
    a.block<1, 3>(2 * i, 3) = -y.z() * x.transpose();
    a.block<1, 3>(2 * i, 6) = y.y() * x.transpose();
    a.block<1, 3>(2 * i + 1, 0) = y.z() * x.transpose();
    a.block<1, 3>(2 * i + 1, 6) = -y.x() * x.transpose();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv[7] <= 1e-9 * sv[0]) {
    throw DegenerateError(
        "estimate_homography: degenerate configuration (rank-deficient design)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h[0], h[1], h[2],
        h[3], h[4], h[5],
        h[6], h[7], h[8];

  Homography out = make_homography(t2.inverse() * hn * t1);
  const Mat3 inv = out.matrix.inverse();
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    sum += (detail::transfer(out.matrix, src[i]) - dst[i]).squaredNorm();
    sum += (detail::transfer(inv, dst[i]) - src[i]).squaredNorm();
  }
  out.transfer_rms = std::sqrt(sum / (2.0 * static_cast<double>(src.size())));
  return out;
}

/// Eigenvalues of a 3x3 matrix from its characteristic polynomial.
struct CubicSpectrum {
  double discriminant;  ///< negative: one real root and a complex pair
  double real_root;     ///< the real root when discriminant < 0
};

/// Characteristic polynomial λ³ + bλ² + cλ + d of `m` (monic).
inline CubicSpectrum cubic_spectrum(const Mat3& m) {
  const double b = -m.trace();
  const double c = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) +
                   m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                   m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double d = -m.determinant();
  const double disc = 18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c -
                      4.0 * c * c * c - 27.0 * d * d;

  CubicSpectrum out{disc, 0.0};
  if (disc < 0.0) {
    // Cardano on the depressed cubic t³ + pt + q, λ = t - b/3.
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double r = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    double x = std::cbrt(-q / 2.0 + r) + std::cbrt(-q / 2.0 - r) - b / 3.0;
    for (int it = 0; it < 3; ++it) {
      const double f = ((x + b) * x + c) * x + d;
      const double df = (3.0 * x + 2.0 * b) * x + c;
      if (df == 0.0) break;
      x -= f / df;
    }
    out.real_root = x;
  }
  return out;
}

/// The ground plane's horizon as the line fixed by a planar-motion
/// homography: the eigenvector of Hᵀ for its single real eigenvalue. Pairs
/// whose homography has three real eigenvalues (no rotation) are refused.
inline HomLine horizon_from_homography(const Homography& h,
                                       double discriminant_tol = 1e-12) {
  Mat3 m = h.matrix.transpose();
  const double det = m.determinant();
  if (det == 0.0) {
    throw DegenerateError("horizon_from_homography: singular homography");
  }
  m /= std::cbrt(det);

  const CubicSpectrum spec = cubic_spectrum(m);
  if (!(spec.discriminant < -discriminant_tol)) {
    throw DegenerateError(
        "rotation-free pair, horizon not identifiable from this pair");
  }
  const Mat3 n = m - spec.real_root * Mat3::Identity();
  Vec3 best = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const Vec3 v = n.row(i).transpose().cross(n.row(j).transpose());
      if (v.norm() > best.norm()) best = v;
    }
  }
  if (best.norm() == 0.0) {
    throw DegenerateError("horizon_from_homography: eigenvector undefined");
  }
  return HomLine(best);
}

namespace detail {

// Planar motion seen by a fixed camera: H = R⁻¹·S·R, where R is the metric
// rectification of the image (horizon l, circular-point parameters α, β) and
// S a rotation by θ plus a translation t. Seven parameters.
struct PlanarMotionModel {
  Vec3 l;
  double alpha = 0.0;
  double beta = 1.0;
  double theta = 0.0;
  Vec2 t = Vec2::Zero();

  Mat3 rectifier() const {
    Mat3 p;
    p << 1.0, 0.0, 0.0,
         0.0, 1.0, 0.0,
         l.x(), l.y(), l.z();
    Mat3 a;
    a << 1.0 / beta, -alpha / beta, 0.0,
         0.0, 1.0, 0.0,
         0.0, 0.0, 1.0;
    return a * p;
  }

  Mat3 homography() const {
    const Mat3 r = rectifier();
    Mat3 s;
    s << std::cos(theta), -std::sin(theta), t.x(),
         std::sin(theta), std::cos(theta), t.y(),
         0.0, 0.0, 1.0;
    return r.inverse() * s * r;
  }
};

// Model read off a general homography: the fixed line gives l, the complex
// eigenvector (an imaged circular point) gives α and β.
inline std::optional<PlanarMotionModel> planar_motion_from(const Mat3& h,
                                                           const Vec3& l) {
  const Eigen::EigenSolver<Mat3> es(h);
  int idx = -1;
  for (int i = 0; i < 3; ++i) {
    if (es.eigenvalues()[i].imag() > 0.0) idx = i;
  }
  if (idx < 0) return std::nullopt;
  const Eigen::Vector3cd v = es.eigenvectors().col(idx);
  const std::complex<double> w2 = l.x() * v[0] + l.y() * v[1] + l.z() * v[2];
  if (std::abs(v[1]) == 0.0 || std::abs(w2) > 1e-6 * v.norm() * l.norm()) {
    return std::nullopt;
  }
  const std::complex<double> z = v[0] / v[1];
  PlanarMotionModel m{l, z.real(), std::abs(z.imag()), 0.0, Vec2::Zero()};
  if (!(m.beta > 0.0)) return std::nullopt;
  Mat3 hr = m.rectifier() * h * m.rectifier().inverse();
  hr /= hr(2, 2);
  m.theta = std::atan2(hr(1, 0) - hr(0, 1), hr(0, 0) + hr(1, 1));
  m.t = hr.block<2, 1>(0, 2);
  return m;
}

}  // namespace detail

/// Homography constrained to planar motion: the normalized-DLT estimate is
/// refined by Levenberg-Marquardt on the symmetric transfer error over the
/// seven planar-motion parameters. Its fixed line is the horizon, so
/// horizon_from_homography applies unchanged. Less noisy than the DLT
/// horizon; assumes inliers.
inline Homography estimate_planar_motion_homography(const MatchSet& ms,
                                                    int max_iterations = 100) {
  const Homography dlt = estimate_homography(ms);
  const HomLine l0 = horizon_from_homography(dlt);

  std::vector<Vec2> all;
  std::vector<Vec2> src;
  std::vector<Vec2> dst;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (!ms.on_ground(i)) continue;
    src.push_back(ms.matches[i].first);
    dst.push_back(ms.matches[i].second);
    all.push_back(src.back());
    all.push_back(dst.back());
  }
  // One normalization for both frames keeps the conjugate form.
  const Mat3 t = detail::isotropic_normalization(all);
  const Mat3 t_inv = t.inverse();
  for (auto& p : src) p = detail::transfer(t, p);
  for (auto& p : dst) p = detail::transfer(t, p);

  const auto init = detail::planar_motion_from(
      t * dlt.matrix * t_inv, (t_inv.transpose() * l0.vec()).normalized());
  if (!init) {
    throw DegenerateError(
        "estimate_planar_motion_homography: homography is not a planar motion");
  }

  using Vec7 = Eigen::Matrix<double, 7, 1>;
  using Mat7 = Eigen::Matrix<double, 7, 7>;
  detail::PlanarMotionModel m = *init;
  auto perturbed = [&](const Vec7& p) {
    const Vec3 u1 = m.l.unitOrthogonal();
    const Vec3 u2 = m.l.cross(u1);
    detail::PlanarMotionModel q = m;
    q.l = (m.l + p[0] * u1 + p[1] * u2).normalized();
    q.alpha += p[2];
    q.beta += p[3];
    q.theta += p[4];
    q.t += p.tail<2>();
    return q;
  };
  auto residuals = [&](const detail::PlanarMotionModel& q) {
    const Mat3 h = q.homography();
    const Mat3 inv = h.inverse();
    Eigen::VectorXd r(4 * static_cast<Eigen::Index>(src.size()));
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto k = 4 * static_cast<Eigen::Index>(i);
      r.segment<2>(k) = detail::transfer(h, src[i]) - dst[i];
      r.segment<2>(k + 2) = detail::transfer(inv, dst[i]) - src[i];
    }
    return r;
  };

  Eigen::VectorXd r = residuals(m);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  Eigen::MatrixXd jac(r.size(), 7);
  for (int it = 0; it < max_iterations; ++it) {
    for (int p = 0; p < 7; ++p) {
      Vec7 e = Vec7::Zero();
      e[p] = 1e-7;
      jac.col(p) = (residuals(perturbed(e)) - r) / e[p];
    }
    const Mat7 a = jac.transpose() * jac;
    const Vec7 g = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 10 && !improved; ++tries) {
      Mat7 damped = a;
      damped.diagonal() *= 1.0 + lambda;
      const detail::PlanarMotionModel q = perturbed(damped.ldlt().solve(-g));
      const Eigen::VectorXd rq = q.beta > 0.0 ? residuals(q) : r;
      if (q.beta > 0.0 && rq.allFinite() && rq.squaredNorm() < cost) {
        const double gain = cost - rq.squaredNorm();
        m = q;
        r = rq;
        cost = rq.squaredNorm();
        lambda *= 0.3;
        improved = true;
        if (gain <= 1e-12 * cost) it = max_iterations;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }

  Homography out = make_homography(t_inv * m.homography() * t);
  const Mat3 inv = out.matrix.inverse();
  double sum = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (!ms.on_ground(i)) continue;
    const auto& x = ms.matches[i];
    sum += (detail::transfer(out.matrix, x.first) - x.second).squaredNorm();
    sum += (detail::transfer(inv, x.second) - x.first).squaredNorm();
  }
  out.transfer_rms = std::sqrt(sum / (2.0 * static_cast<double>(src.size())));
  return out;
}

/// Angle between the plane normals Kᵀl1 and Kᵀl2 that two horizons imply,
/// ignoring sign. A scale-free way to compare horizons.
inline double horizon_angle_error(const HomLine& l1, const HomLine& l2,
                                  const CalibrationMatrix& k) {
  const Vec3 n1 = (k.matrix().transpose() * l1.vec()).normalized();
  const Vec3 n2 = (k.matrix().transpose() * l2.vec()).normalized();
  return std::atan2(n1.cross(n2).norm(), std::abs(n1.dot(n2)));
}

}  // namespace conicam

#endif  // CONICAM_HOMOGRAPHY_HPP
