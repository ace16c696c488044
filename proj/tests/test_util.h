#pragma once

// Test-only reference implementations. Nothing here calls into the code paths
// it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "roba/random.h"
#include "roba/so3.h"
#include "roba/view_graph.h"

namespace roba::testing {

// Cyclic Jacobi eigenvalue iteration for symmetric 3x3 matrices. Returns the
// eigenvalues in ascending order.
inline std::array<double, 3> JacobiEigenvalues(const Eigen::Matrix3d& input) {
  Eigen::Matrix3d a = 0.5 * (input + input.transpose());
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
        rot(p, p) = c;
        rot(q, q) = c;
        rot(p, q) = s;
        rot(q, p) = -s;
        a = rot.transpose() * a * rot;
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  std::array<double, 3> ev{a(0, 0), a(1, 1), a(2, 2)};
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Rotation from a unit quaternion, written out from the textbook formula.
inline Eigen::Matrix3d QuaternionToMatrix(double w, double x, double y,
                                          double z) {
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Rotation vector -> rotation through the half-angle quaternion.
inline Eigen::Matrix3d AxisAngleViaQuaternion(const Eigen::Vector3d& u) {
  const double theta = u.norm();
  if (theta == 0.0) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d axis = u / theta;
  const double s = std::sin(0.5 * theta);
  return QuaternionToMatrix(std::cos(0.5 * theta), s * axis.x(), s * axis.y(),
                            s * axis.z());
}

// Direct sum over points of (f_j x R f_k)(f_j x R f_k)^T.
inline Eigen::Matrix3d DirectM(const Eigen::Matrix3d& r,
                               const std::vector<Eigen::Vector3d>& fj,
                               const std::vector<Eigen::Vector3d>& fk) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < fj.size(); ++i) {
    const Eigen::Vector3d v = fj[i].cross(r * fk[i]);
    m += v * v.transpose();
  }
  return m;
}

inline Eigen::Matrix3d RandomOrthogonal(Rng& rng) {
  const Eigen::Vector3d axis = rng.UnitVector();
  return Eigen::AngleAxisd(rng.Uniform(0.0, 3.14159), axis).toRotationMatrix();
}

// Symmetric PSD matrix Q diag(ev) Q^T with the given eigenvalues.
inline Eigen::Matrix3d PsdWithEigenvalues(const Eigen::Vector3d& ev, Rng& rng) {
  const Eigen::Matrix3d q = RandomOrthogonal(rng);
  return q * ev.asDiagonal() * q.transpose();
}

// Textbook scalar Adam, one coordinate at a time.
struct ScalarAdam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double m = 0.0;
  double v = 0.0;
  int t = 0;

  // Returns the updated parameter.
  double Step(double x, double g, double alpha) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double m_hat = m / (1.0 - std::pow(beta1, t));
    const double v_hat = v / (1.0 - std::pow(beta2, t));
    return x - alpha * m_hat / (std::sqrt(v_hat) + epsilon);
  }
};

// Rotation angle between two rotation matrices from the trace.
inline double AngleBetween(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = 0.5 * ((a.transpose() * b).trace() - 1.0);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

inline double SumOfAngles(const Eigen::Matrix3d& s,
                          const std::vector<Eigen::Matrix3d>& residuals) {
  double sum = 0.0;
  for (const auto& q : residuals) sum += AngleBetween(s, q);
  return sum;
}

// Brute-force L1 single rotation average: grid over rotation vectors around
// center (2 degree spacing within radius_deg), then two local refinements.
struct GridResult {
  Eigen::Matrix3d rotation;
  double cost;
};

inline GridResult GridSearchL1(const std::vector<Eigen::Matrix3d>& residuals,
                               const Eigen::Matrix3d& center,
                               double radius_deg) {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  GridResult best{center, SumOfAngles(center, residuals)};
  auto search = [&](const Eigen::Matrix3d& around, double half_width_deg,
                    double step_deg) {
    const int steps = static_cast<int>(std::round(half_width_deg / step_deg));
    GridResult local = best;
    for (int a = -steps; a <= steps; ++a) {
      for (int b = -steps; b <= steps; ++b) {
        for (int c = -steps; c <= steps; ++c) {
          const Eigen::Vector3d w = Eigen::Vector3d(a, b, c) * step_deg * kDeg;
          const Eigen::Matrix3d s = around * AxisAngleViaQuaternion(w);
          const double cost = SumOfAngles(s, residuals);
          if (cost < local.cost) local = {s, cost};
        }
      }
    }
    best = local;
  };
  search(center, radius_deg, 2.0);
  search(best.rotation, 2.0, 0.2);
  search(best.rotation, 0.2, 0.02);
  return best;
}

// Total cost computed without the moment matrices or the closed-form
// eigenvalue: direct M and Jacobi eigenvalues.
inline double DirectTotalCost(const std::vector<Eigen::Matrix3d>& rotations,
                              const ViewGraph& graph, bool use_sqrt) {
  double total = 0.0;
  for (const Edge& e : graph.edges()) {
    const Eigen::Matrix3d m =
        DirectM(rotations[e.j] * rotations[e.k].transpose(),
                e.observations.bearings_j, e.observations.bearings_k);
    const double lambda = std::max(0.0, JacobiEigenvalues(m)[0]);
    total += use_sqrt ? std::sqrt(lambda) : lambda;
  }
  return total;
}

// Central differences of DirectTotalCost in the chart R_i -> R_i Exp-like
// perturbation used by the optimizer: u_i = Log(R_i), u_i + h e_a.
inline Eigen::VectorXd CentralDifferenceGradient(
    const std::vector<Rotation>& rotations, const ViewGraph& graph,
    bool use_sqrt, double h) {
  const int n = static_cast<int>(rotations.size());
  std::vector<Eigen::Matrix3d> base;
  std::vector<Eigen::Vector3d> u;
  for (const Rotation& r : rotations) {
    base.push_back(r.matrix());
    const Eigen::AngleAxisd aa(r.matrix());
    u.push_back(aa.angle() * aa.axis());
  }
  Eigen::VectorXd g(3 * n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      std::vector<Eigen::Matrix3d> plus = base;
      std::vector<Eigen::Matrix3d> minus = base;
      Eigen::Vector3d up = u[i];
      Eigen::Vector3d um = u[i];
      up[a] += h;
      um[a] -= h;
      plus[i] = AxisAngleViaQuaternion(up);
      minus[i] = AxisAngleViaQuaternion(um);
      g[3 * i + a] = (DirectTotalCost(plus, graph, use_sqrt) -
                      DirectTotalCost(minus, graph, use_sqrt)) /
                     (2.0 * h);
    }
  }
  return g;
}

// Random connected view graph built directly from a two-view model: ring
// edges plus extra_edges random chords, points_per_edge correspondences per
// edge at depths [2, 6], bearing noise of noise_rad radians.
inline ViewGraph RandomViewGraph(int n, int extra_edges, int points_per_edge,
                                 double noise_rad, Rng& rng,
                                 double init_perturb_rad = 0.0) {
  std::vector<Rotation> gt;
  std::vector<Eigen::Vector3d> centers;
  for (int i = 0; i < n; ++i) {
    gt.push_back(RandomRotation(3.14159 / 8.0, rng));
    centers.push_back(2.0 * rng.UnitVector());
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  if (n > 2) pairs.emplace_back(0, n - 1);
  for (int c = 0; c < extra_edges; ++c) {
    int j = static_cast<int>(rng.Uniform() * n);
    int k = static_cast<int>(rng.Uniform() * n);
    if (j == k) continue;
    if (j > k) std::swap(j, k);
    if (std::find(pairs.begin(), pairs.end(), std::make_pair(j, k)) != pairs.end()) {
      continue;
    }
    pairs.emplace_back(j, k);
  }
  auto jitter = [&](const Eigen::Vector3d& f) {
    if (noise_rad == 0.0) return f;
    const Eigen::Vector3d axis = rng.UnitVector();
    return Eigen::Vector3d(
        AxisAngleViaQuaternion(rng.Normal(0.0, noise_rad) * axis) * f);
  };
  std::vector<EdgeInput> edges;
  for (auto [j, k] : pairs) {
    EdgeInput e;
    e.j = j;
    e.k = k;
    for (int p = 0; p < points_per_edge; ++p) {
      // A point in front of camera j, expressed in world coordinates.
      Eigen::Vector3d dir = rng.UnitVector();
      dir.z() = std::abs(dir.z()) + 0.5;
      const Eigen::Vector3d x_cam = rng.Uniform(2.0, 6.0) * dir.normalized();
      const Eigen::Vector3d x =
          gt[j].Inverse() * x_cam + centers[j];
      const Eigen::Vector3d xj = gt[j] * (x - centers[j]);
      const Eigen::Vector3d xk = gt[k] * (x - centers[k]);
      e.observations.bearings_j.push_back(jitter(xj.normalized()).normalized());
      e.observations.bearings_k.push_back(jitter(xk.normalized()).normalized());
    }
    edges.push_back(std::move(e));
  }
  std::vector<Rotation> initial;
  for (const Rotation& r : gt) {
    initial.push_back(init_perturb_rad > 0.0
                          ? RandomRotation(init_perturb_rad, rng) * r
                          : r);
  }
  return ViewGraph::Create(n, std::move(edges), std::move(initial), gt);
}

}  // namespace roba::testing
