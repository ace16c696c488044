#pragma once

#include <array>
#include <optional>
#include <vector>

#include "roba/so3.h"

namespace roba {

// Minimum number of correspondences for a relative rotation.
inline constexpr int kMinEdgeObservations = 5;
inline constexpr double kUnitNormTolerance = 1e-9;

// Matched unit bearing vectors for one camera pair (j, k); entry i of each
// list observes the same scene point.
struct EdgeObservations {
  std::vector<Vec3> bearings_j;
  std::vector<Vec3> bearings_k;

  int size() const { return static_cast<int>(bearings_j.size()); }
};

// Throws Error(kInsufficientObservations) if fewer than kMinEdgeObservations
// pairs, Error(kInvalidArgument) on mismatched lengths or non-unit vectors.
void ValidateObservations(const EdgeObservations& obs);

// Moment matrices of the k-side bearings weighted by products of the j-side
// components: F_ab = sum_i (f_j)_a (f_j)_b f_k f_k^T. Fixed per edge.
struct EdgeMoments {
  Mat3 xx = Mat3::Zero();
  Mat3 xy = Mat3::Zero();
  Mat3 xz = Mat3::Zero();
  Mat3 yy = Mat3::Zero();
  Mat3 yz = Mat3::Zero();
  Mat3 zz = Mat3::Zero();
};

EdgeMoments PrecomputeMoments(const EdgeObservations& obs);

// M = sum_i (f_j x R f_k)(f_j x R f_k)^T, assembled from the moments and the
// rows of the relative rotation R = R_j R_k^T. Symmetric PSD.
Mat3 AssembleM(const Mat3& relative_rotation, const EdgeMoments& moments);
inline Mat3 AssembleM(const Rotation& relative_rotation,
                      const EdgeMoments& moments) {
  return AssembleM(relative_rotation.matrix(), moments);
}

// Smallest eigenvalue of a symmetric 3x3 matrix from the closed-form roots of
// its characteristic cubic. Only the upper triangle is read.
double SmallestEigenvalue(const Mat3& m);

// All three eigenvalues in ascending order, same closed form.
std::array<double, 3> SymmetricEigenvalues(const Mat3& m);

// Unit eigenvector of the smallest eigenvalue; first nonzero component made
// positive. Throws Error(kAmbiguousDirection) if the smallest eigenvalue is
// repeated within 1e-9.
Vec3 RecoverTranslationDirection(const Mat3& m);

struct EdgeCostResult {
  double cost = 0.0;
  double lambda_min = 0.0;
  std::optional<Vec3> t_dir;
};

// Edge cost sqrt(lambda_min(M)) (or lambda_min itself with use_sqrt = false).
double EdgeCost(const Mat3& relative_rotation, const EdgeMoments& moments,
                bool use_sqrt = true);

EdgeCostResult EvaluateEdge(const Rotation& relative_rotation,
                            const EdgeMoments& moments, bool use_sqrt = true,
                            bool want_direction = false);

}  // namespace roba
