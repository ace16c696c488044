#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roba/so3.h"
#include "roba/view_graph.h"

namespace roba {

enum class Layout {
  // Cameras on a circle in the xy-plane, neighbors 1 unit apart.
  kCircle,
  // All cameras at the origin.
  kPureRotation,
  // groups locations on a circle, group_size co-located cameras at each.
  kMixed,
};

const char* LayoutName(Layout layout);
// Accepts "circle", "pure_rotation", "mixed". Throws Error(kInvalidArgument).
Layout ParseLayout(const std::string& name);

struct SimSettings {
  int n = 20;
  // Minimum common points per neighboring camera pair.
  int n_cov = 50;
  // Pixel noise standard deviation.
  double sigma = 1.0;
  // Point distance range from the xy-plane, scene units.
  double d_min = 2.0;
  double d_max = 5.0;
  Layout layout = Layout::kCircle;
  // Mixed layout only; n must equal groups * group_size.
  int groups = 20;
  int group_size = 5;
  // Camera attitude scatter about the +z optical axis, degrees.
  double rot_perturb_max = 20.0;
  int image_w = 640;
  int image_h = 480;
  double focal = 525.0;
  uint64_t seed = 0;

  // Edge construction.
  // Inlier threshold on the angular reprojection error, radians.
  double inlier_threshold = 1e-2;
  // Candidate relative poses are the ground truth with the rotation and the
  // translation direction each turned by U(0, candidate_perturb_max) degrees.
  double candidate_perturb_max = 20.0;
  int num_candidates = 100;
  int min_inliers = 10;
};

// Throws Error(kInvalidArgument) naming the first offending field.
void ValidateSimSettings(const SimSettings& cfg);

std::string SerializeSimSettings(const SimSettings& cfg);

struct CameraObservation {
  int point = 0;
  // Noisy pixel coordinates, inside the image.
  Eigen::Vector2d pixel;
  // Unit bearing of the noisy pixel in the camera frame.
  Vec3 bearing;
};

// Cameras, points and their image measurements before edge construction.
// Camera i maps world points as x_cam = R_i x + t_i.
struct SyntheticScene {
  SimSettings settings;
  std::vector<Rotation> gt_rotations;
  std::vector<Vec3> gt_translations;
  std::vector<Vec3> points;
  // Per camera, sorted by point index.
  std::vector<std::vector<CameraObservation>> observations;

  Vec3 CameraCenter(int i) const;
  // Indices into observations[j] and observations[k] of the shared points.
  std::vector<std::pair<int, int>> CommonObservations(int j, int k) const;
};

// Camera placement and point sampling. Every neighboring pair (centers at
// most 1 unit apart) ends up with >= n_cov common points. Throws
// Error(kGeneration) when a pair cannot reach its quota within 100 * n_cov
// sampling attempts, Error(kInvalidArgument) on invalid settings.
SyntheticScene GenerateScene(const SimSettings& cfg);

struct SyntheticDataset {
  // initial_rotations equal the ground truth; see PerturbRotations.
  ViewGraph graph;
  std::vector<Vec3> gt_translations;
  // Inliers of the chosen candidate, per graph edge.
  std::vector<int> inlier_counts;
};

// Angular reprojection error of one correspondence under the relative pose
// (R, t_dir): the smaller of the two single-bearing corrections that make the
// pair coplanar with the baseline, asin(|t.(f_j x R f_k)| / max(|t x f_j|,
// |t x R f_k|)). Cheirality is ignored.
double AngularReprojectionError(const Mat3& relative_rotation,
                                const Vec3& t_dir, const Vec3& f_j,
                                const Vec3& f_k);

// For every camera pair with >= n_cov common points, scores num_candidates
// perturbed relative poses by inlier count and keeps the best one's inliers
// as the edge observations and its rotation as rel_rotation. Pairs with
// fewer than min_inliers inliers are dropped. Throws Error(kGeneration) if the
// remaining edges do not connect all cameras.
SyntheticDataset BuildEdges(const SyntheticScene& scene, const SimSettings& cfg);

// GenerateScene followed by BuildEdges.
SyntheticDataset GenerateDataset(const SimSettings& cfg);

// Left-multiplies each rotation by a random rotation of angle
// U(0, max_deg) degrees about a uniform axis. Deterministic in seed.
std::vector<Rotation> PerturbRotations(const std::vector<Rotation>& rotations,
                                       double max_deg, uint64_t seed);

}  // namespace roba
