#include "roba/epipolar.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "roba/error.h"
#include "roba/units.h"

namespace roba {
namespace {

// Spread below which the three roots are treated as one, relative to the
// eigenvalue magnitude.
constexpr double kTripleRootTolerance = 1e-24;
constexpr double kNegativeClamp = 1e-10;
constexpr double kAmbiguityGap = 1e-9;
// When s / sqrt(t) is this close to -1 (+1) the two smallest (largest) roots
// nearly coincide and arccos loses half the significant digits.
constexpr double kDoubleRootBand = 1e-4;

// a^T F b.
inline double Bilinear(const Vec3& a, const Mat3& f, const Vec3& b) {
  return a.dot(f * b);
}

struct CubicRoots {
  double shift;     // -b1 / 3, the mean eigenvalue
  double radius;    // (2/3) sqrt(b1^2 - 3 b2)
  double angle;     // arccos(s / sqrt(t)) / 3, in [0, pi/3]
  double ratio;     // s / sqrt(t), clamped to [-1, 1]
  bool triple;
};

// Characteristic cubic lambda^3 + b1 lambda^2 + b2 lambda + b3 of a
// symmetric matrix, solved with the trigonometric closed form
//   s = 2 b1^3 - 9 b1 b2 + 27 b3,  t = 4 (b1^2 - 3 b2)^3,
//   k = (sqrt(t)/2)^(1/3) cos(arccos(s / sqrt(t)) / 3),
//   lambda_min = (-b1 - 2k) / 3.
// b1^2 - 3 b2 and s are evaluated in their shifted forms
//   b1^2 - 3 b2 = 1/2 sum (m_aa - m_bb)^2 + 3 sum m_ab^2,
//   s = -27 det(M + b1/3 I),
// which are algebraically identical but free of cancellation when the
// eigenvalues are close together.
CubicRoots SolveCharacteristicCubic(const Mat3& m) {
  const double m11 = m(0, 0), m22 = m(1, 1), m33 = m(2, 2);
  const double m12 = m(0, 1), m13 = m(0, 2), m23 = m(1, 2);

  const double b1 = -(m11 + m22 + m33);
  const double shift = -b1 / 3.0;

  const double d12 = m11 - m22, d13 = m11 - m33, d23 = m22 - m33;
  const double off = m12 * m12 + m13 * m13 + m23 * m23;
  const double spread = 0.5 * (d12 * d12 + d13 * d13 + d23 * d23) + 3.0 * off;

  CubicRoots roots{shift, 0.0, 0.0, 0.0, false};
  if (!(spread > kTripleRootTolerance * std::max(1.0, shift * shift))) {
    roots.triple = true;
    return roots;
  }

  // s / sqrt(t) = -27 det(D) / (2 spread^(3/2)) with D = M - shift I.
  // Normalizing D first keeps the determinant in range.
  const double root_spread = std::sqrt(spread);
  const double inv = 1.0 / root_spread;
  const double a11 = (m11 - shift) * inv, a22 = (m22 - shift) * inv,
               a33 = (m33 - shift) * inv;
  const double a12 = m12 * inv, a13 = m13 * inv, a23 = m23 * inv;
  const double det = a11 * (a22 * a33 - a23 * a23) -
                     a12 * (a12 * a33 - a23 * a13) +
                     a13 * (a12 * a23 - a22 * a13);
  const double ratio = std::clamp(-13.5 * det, -1.0, 1.0);

  roots.radius = (2.0 / 3.0) * root_spread;
  roots.angle = std::acos(ratio) / 3.0;
  roots.ratio = ratio;
  return roots;
}

double LargestRoot(const CubicRoots& roots) {
  return roots.shift - roots.radius * std::cos(roots.angle - 4.0 * kPi / 3.0);
}

// Unit null vector of a (numerically) rank-2 symmetric matrix.
Vec3 NullVector(const Mat3& a) {
  const Vec3 c0 = a.col(0), c1 = a.col(1), c2 = a.col(2);
  const std::array<Vec3, 3> candidates = {c0.cross(c1), c0.cross(c2),
                                          c1.cross(c2)};
  const Vec3* best = &candidates[0];
  for (const Vec3& c : candidates) {
    if (c.squaredNorm() > best->squaredNorm()) best = &c;
  }
  return best->normalized();
}

// The two eigenvalues other than the simple root, for when they nearly
// coincide: deflate the simple root's eigenvector and solve the remaining
// quadratic factor on its orthogonal complement.
std::array<double, 2> QuadraticFactorRoots(const Mat3& m, double simple_root) {
  const Vec3 v = NullVector(m - simple_root * Mat3::Identity());
  const Vec3 helper =
      std::abs(v.x()) < 0.6 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = v.cross(helper).normalized();
  const Vec3 e2 = v.cross(e1);
  const double a = e1.dot(m * e1);
  const double b = e1.dot(m * e2);
  const double c = e2.dot(m * e2);
  const double mid = 0.5 * (a + c);
  const double half_gap = std::hypot(0.5 * (a - c), b);
  return {mid - half_gap, mid + half_gap};
}

double ClampNearZero(double lambda) {
  if (lambda < 0.0 && lambda >= -kNegativeClamp) return 0.0;
  return lambda;
}

}  // namespace

void ValidateObservations(const EdgeObservations& obs) {
  if (obs.bearings_j.size() != obs.bearings_k.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "bearing lists differ in length (" +
                    std::to_string(obs.bearings_j.size()) + " vs " +
                    std::to_string(obs.bearings_k.size()) + ")");
  }
  if (obs.size() < kMinEdgeObservations) {
    throw Error(ErrorKind::kInsufficientObservations,
                "edge has " + std::to_string(obs.size()) +
                    " observations, need at least " +
                    std::to_string(kMinEdgeObservations));
  }
  for (int i = 0; i < obs.size(); ++i) {
    for (const Vec3* f : {&obs.bearings_j[i], &obs.bearings_k[i]}) {
      if (!f->allFinite() ||
          std::abs(f->norm() - 1.0) > kUnitNormTolerance) {
        throw Error(ErrorKind::kInvalidArgument,
                    "bearing " + std::to_string(i) + " is not unit norm");
      }
    }
  }
}

EdgeMoments PrecomputeMoments(const EdgeObservations& obs) {
  ValidateObservations(obs);
  EdgeMoments f;
  for (int i = 0; i < obs.size(); ++i) {
    const Vec3& fj = obs.bearings_j[i];
    const Vec3& fk = obs.bearings_k[i];
    const Mat3 outer = fk * fk.transpose();
    f.xx += (fj.x() * fj.x()) * outer;
    f.xy += (fj.x() * fj.y()) * outer;
    f.xz += (fj.x() * fj.z()) * outer;
    f.yy += (fj.y() * fj.y()) * outer;
    f.yz += (fj.y() * fj.z()) * outer;
    f.zz += (fj.z() * fj.z()) * outer;
  }
  return f;
}

Mat3 AssembleM(const Mat3& r, const EdgeMoments& f) {
  const Vec3 r1 = r.row(0).transpose();
  const Vec3 r2 = r.row(1).transpose();
  const Vec3 r3 = r.row(2).transpose();

  const double m11 = Bilinear(r3, f.yy, r3) - 2.0 * Bilinear(r3, f.yz, r2) +
                     Bilinear(r2, f.zz, r2);
  const double m22 = Bilinear(r1, f.zz, r1) - 2.0 * Bilinear(r1, f.xz, r3) +
                     Bilinear(r3, f.xx, r3);
  const double m33 = Bilinear(r2, f.xx, r2) - 2.0 * Bilinear(r1, f.xy, r2) +
                     Bilinear(r1, f.yy, r1);
  const double m12 = Bilinear(r1, f.yz, r3) - Bilinear(r1, f.zz, r2) -
                     Bilinear(r3, f.xy, r3) + Bilinear(r3, f.xz, r2);
  const double m13 = Bilinear(r2, f.xy, r3) - Bilinear(r2, f.xz, r2) -
                     Bilinear(r1, f.yy, r3) + Bilinear(r1, f.yz, r2);
  const double m23 = Bilinear(r1, f.xz, r2) - Bilinear(r1, f.yz, r1) -
                     Bilinear(r3, f.xx, r2) + Bilinear(r3, f.xy, r1);

  Mat3 m;
  m << m11, m12, m13,
       m12, m22, m23,
       m13, m23, m33;
  return m;
}

double SmallestEigenvalue(const Mat3& m) {
  const CubicRoots roots = SolveCharacteristicCubic(m);
  if (roots.triple) return ClampNearZero(roots.shift);
  if (roots.ratio < -1.0 + kDoubleRootBand) {
    return ClampNearZero(QuadraticFactorRoots(m, LargestRoot(roots))[0]);
  }
  return ClampNearZero(roots.shift - roots.radius * std::cos(roots.angle));
}

std::array<double, 3> SymmetricEigenvalues(const Mat3& m) {
  const CubicRoots roots = SolveCharacteristicCubic(m);
  if (roots.triple) return {roots.shift, roots.shift, roots.shift};
  const double largest = LargestRoot(roots);
  const double smallest = roots.shift - roots.radius * std::cos(roots.angle);
  std::array<double, 3> ev;
  if (roots.ratio < -1.0 + kDoubleRootBand) {
    const std::array<double, 2> low = QuadraticFactorRoots(m, largest);
    ev = {low[0], low[1], largest};
  } else if (roots.ratio > 1.0 - kDoubleRootBand) {
    const std::array<double, 2> high = QuadraticFactorRoots(m, smallest);
    ev = {smallest, high[0], high[1]};
  } else {
    ev = {smallest, 3.0 * roots.shift - smallest - largest, largest};
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

Vec3 RecoverTranslationDirection(const Mat3& m) {
  const std::array<double, 3> ev = SymmetricEigenvalues(m);
  if (ev[1] - ev[0] <= kAmbiguityGap) {
    throw Error(ErrorKind::kAmbiguousDirection,
                "smallest eigenvalue is repeated; direction is not unique");
  }
  Vec3 dir = NullVector(m - ev[0] * Mat3::Identity());
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) > 1e-12) {
      if (dir[i] < 0.0) dir = -dir;
      break;
    }
  }
  return dir;
}

double EdgeCost(const Mat3& relative_rotation, const EdgeMoments& moments,
                bool use_sqrt) {
  const double lambda =
      std::max(0.0, SmallestEigenvalue(AssembleM(relative_rotation, moments)));
  return use_sqrt ? std::sqrt(lambda) : lambda;
}

EdgeCostResult EvaluateEdge(const Rotation& relative_rotation,
                            const EdgeMoments& moments, bool use_sqrt,
                            bool want_direction) {
  const Mat3 m = AssembleM(relative_rotation, moments);
  EdgeCostResult result;
  result.lambda_min = std::max(0.0, SmallestEigenvalue(m));
  result.cost = use_sqrt ? std::sqrt(result.lambda_min) : result.lambda_min;
  if (want_direction) result.t_dir = RecoverTranslationDirection(m);
  return result;
}

}  // namespace roba
