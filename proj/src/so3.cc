#include "roba/so3.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "roba/error.h"
#include "roba/random.h"
#include "roba/units.h"

namespace roba {
namespace {

constexpr double kSmallAngle = 1e-8;
constexpr double kNearPi = 1e-6;

}  // namespace

bool IsRotationMatrix(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const Mat3 residual = m.transpose() * m - Mat3::Identity();
  if (residual.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation Rotation::FromMatrix(const Mat3& m) {
  if (!IsRotationMatrix(m)) {
    throw Error(ErrorKind::kInvalidArgument,
                "matrix is not a rotation (orthonormality or determinant "
                "check failed)");
  }
  return Rotation(m, Unchecked{});
}

Rotation Rotation::FromQuaternion(double w, double x, double y, double z) {
  const Eigen::Quaterniond q(w, x, y, z);
  const double norm = q.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "quaternion must be finite and nonzero");
  }
  return Rotation(q.normalized().toRotationMatrix(), Unchecked{});
}

Eigen::Vector4d Rotation::ToQuaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  Eigen::Vector4d wxyz(q.w(), q.x(), q.y(), q.z());
  // Canonical sign: w >= 0, and for w == 0 the first nonzero entry positive.
  for (int i = 0; i < 4; ++i) {
    if (wxyz[i] != 0.0) {
      if (wxyz[i] < 0.0) wxyz = -wxyz;
      break;
    }
  }
  return wxyz;
}

Mat3 Hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Vec3 Vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Rotation ExpMap(const RotationVector& u) {
  if (!u.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "rotation vector is not finite");
  }
  const double theta2 = u.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 w = Hat(u);
  return Rotation(Mat3::Identity() + a * w + b * (w * w), Rotation::Unchecked{});
}

RotationVector LogMap(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 skew = Vee(m - m.transpose());
  // atan2 of (sin, cos) agrees with arccos((tr - 1) / 2) but keeps full
  // precision near 0 and pi.
  const double cos_theta = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double sin_theta = 0.5 * skew.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < kSmallAngle) {
    return 0.5 * skew;
  }
  if (kPi - theta < kNearPi) {
    // (R + R^T) / 2 - cos(theta) I = (1 - cos(theta)) a a^T.
    const Mat3 sym = 0.5 * (m + m.transpose());
    const Mat3 outer =
        (sym - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
    int i;
    outer.diagonal().maxCoeff(&i);
    Vec3 axis = outer.col(i) / std::sqrt(std::max(outer(i, i), 1e-300));
    axis.normalize();
    if (axis.dot(skew) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * std::sin(theta))) * skew;
}

double GeodesicDistance(const Rotation& r1, const Rotation& r2) {
  const Mat3 rel = r1.matrix() * r2.matrix().transpose();
  const double cos_theta = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double sin_theta = 0.5 * Vee(rel - rel.transpose()).norm();
  return std::atan2(sin_theta, cos_theta);
}

Rotation RandomRotation(double max_angle, Rng& rng) {
  const Vec3 axis = rng.UnitVector();
  const double angle = rng.Uniform(0.0, max_angle);
  return ExpMap(angle * axis);
}

}  // namespace roba
