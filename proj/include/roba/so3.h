#pragma once

#include <Eigen/Core>

namespace roba {

class Rng;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Axis-angle vector: angle = norm, axis = direction (radians).
using RotationVector = Eigen::Vector3d;

// Tolerance used when validating orthonormality and determinant.
inline constexpr double kRotationTolerance = 1e-9;

// An element of SO(3) stored as a 3x3 orthonormal matrix.
//
// Construction from an arbitrary matrix is checked. Products, transposes and
// the exponential map produce rotations by construction and skip the check.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation Identity() { return Rotation(); }

  // Throws Error(kInvalidArgument) unless m^T m = I and det(m) = 1 within
  // kRotationTolerance.
  static Rotation FromMatrix(const Mat3& m);

  // Unit quaternion in (w, x, y, z) order; normalized before conversion.
  static Rotation FromQuaternion(double w, double x, double y, double z);

  const Mat3& matrix() const { return m_; }

  Rotation Inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

  // Unit quaternion (w, x, y, z) with w >= 0.
  Eigen::Vector4d ToQuaternion() const;

  friend Rotation operator*(const Rotation& a, const Rotation& b) {
    return Rotation(a.m_ * b.m_, Unchecked{});
  }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool operator==(const Rotation& other) const { return m_ == other.m_; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  friend Rotation ExpMap(const RotationVector& u);

  Mat3 m_;
};

// Returns true when m is orthonormal with det +1 within tol.
bool IsRotationMatrix(const Mat3& m, double tol = kRotationTolerance);

Mat3 Hat(const Vec3& v);
Vec3 Vee(const Mat3& m);

// Rodrigues formula. Throws Error(kInvalidArgument) on non-finite input.
Rotation ExpMap(const RotationVector& u);

// Inverse of ExpMap with the result canonicalized to norm <= pi.
RotationVector LogMap(const Rotation& r);

// Rotation angle of r1 * r2^T, in [0, pi].
double GeodesicDistance(const Rotation& r1, const Rotation& r2);

// Rotation by an angle drawn from U(0, max_angle) about a uniform axis.
Rotation RandomRotation(double max_angle, Rng& rng);

}  // namespace roba
