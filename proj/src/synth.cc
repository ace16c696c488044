#include "roba/synth.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Geometry>

#include "json.hpp"
#include "roba/error.h"
#include "roba/random.h"
#include "roba/units.h"

namespace roba {
namespace {

// Neighboring cameras are nominally 1 unit apart.
constexpr double kNeighborDistance = 1.0 + 1e-9;
constexpr int kAttemptsPerPoint = 100;
constexpr double kZeroBaseline = 1e-12;

// Random stream indices derived from the master seed.
constexpr uint64_t kSceneStream = 0;
constexpr uint64_t kEdgeStream = 1;

struct Intrinsics {
  double f, cx, cy, w, h;

  bool Project(const Vec3& x_cam, Eigen::Vector2d* pixel) const {
    if (x_cam.z() <= 0.0) return false;
    const Eigen::Vector2d p(f * x_cam.x() / x_cam.z() + cx,
                            f * x_cam.y() / x_cam.z() + cy);
    if (!(p.x() >= 0.0 && p.x() < w && p.y() >= 0.0 && p.y() < h)) {
      return false;
    }
    *pixel = p;
    return true;
  }

  Vec3 Bearing(const Eigen::Vector2d& p) const {
    return Vec3((p.x() - cx) / f, (p.y() - cy) / f, 1.0).normalized();
  }
};

Intrinsics MakeIntrinsics(const SimSettings& cfg) {
  return {cfg.focal, 0.5 * cfg.image_w, 0.5 * cfg.image_h,
          static_cast<double>(cfg.image_w), static_cast<double>(cfg.image_h)};
}

// Camera centers on a circle of chord length 1 between neighbors.
std::vector<Vec3> CameraCenters(const SimSettings& cfg) {
  auto ring = [](int count, int index) {
    const double radius = 1.0 / (2.0 * std::sin(kPi / count));
    const double phi = 2.0 * kPi * index / count;
    return Vec3(radius * std::cos(phi), radius * std::sin(phi), 0.0);
  };
  std::vector<Vec3> centers(cfg.n, Vec3::Zero());
  for (int i = 0; i < cfg.n; ++i) {
    switch (cfg.layout) {
      case Layout::kCircle:
        centers[i] = ring(cfg.n, i);
        break;
      case Layout::kPureRotation:
        break;
      case Layout::kMixed:
        centers[i] = ring(cfg.groups, i / cfg.group_size);
        break;
    }
  }
  return centers;
}

// Appends the point and its noisy observations in every camera that sees it.
void AddPoint(const Vec3& x, const Intrinsics& intrinsics, double sigma,
              Rng& rng, SyntheticScene& scene) {
  const int index = static_cast<int>(scene.points.size());
  scene.points.push_back(x);
  for (size_t i = 0; i < scene.gt_rotations.size(); ++i) {
    const Vec3 x_cam = scene.gt_rotations[i] * x + scene.gt_translations[i];
    Eigen::Vector2d clean;
    if (!intrinsics.Project(x_cam, &clean)) continue;
    Eigen::Vector2d noisy = clean;
    if (sigma > 0.0) {
      noisy.x() += rng.Normal(0.0, sigma);
      noisy.y() += rng.Normal(0.0, sigma);
    }
    if (!(noisy.x() >= 0.0 && noisy.x() < intrinsics.w && noisy.y() >= 0.0 &&
          noisy.y() < intrinsics.h)) {
      continue;
    }
    CameraObservation obs;
    obs.point = index;
    obs.pixel = noisy;
    obs.bearing = sigma > 0.0 ? intrinsics.Bearing(noisy) : x_cam.normalized();
    scene.observations[i].push_back(obs);
  }
}

bool Sees(const SyntheticScene& scene, const Intrinsics& intrinsics, int i,
          const Vec3& x) {
  Eigen::Vector2d pixel;
  return intrinsics.Project(scene.gt_rotations[i] * x + scene.gt_translations[i],
                            &pixel);
}

// Unit vector orthogonal to v, uniformly distributed on that circle.
Vec3 RandomOrthogonal(const Vec3& v, Rng& rng) {
  while (true) {
    const Vec3 u = rng.UnitVector();
    const Vec3 w = u - u.dot(v) * v;
    if (w.norm() > 1e-6) return w.normalized();
  }
}

}  // namespace

const char* LayoutName(Layout layout) {
  switch (layout) {
    case Layout::kCircle:
      return "circle";
    case Layout::kPureRotation:
      return "pure_rotation";
    case Layout::kMixed:
      return "mixed";
  }
  return "unknown";
}

Layout ParseLayout(const std::string& name) {
  if (name == "circle") return Layout::kCircle;
  if (name == "pure_rotation") return Layout::kPureRotation;
  if (name == "mixed") return Layout::kMixed;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown layout '" + name +
                  "' (expected circle, pure_rotation or mixed)");
}

void ValidateSimSettings(const SimSettings& cfg) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "invalid settings: " + what);
  };
  if (cfg.n < 2) fail("n must be >= 2");
  if (cfg.n_cov < kMinEdgeObservations) {
    fail("n_cov must be >= " + std::to_string(kMinEdgeObservations));
  }
  if (!(cfg.sigma >= 0.0)) fail("sigma must be >= 0");
  if (!(cfg.d_min > 0.0)) fail("d_min must be > 0");
  if (!(cfg.d_min <= cfg.d_max)) fail("d_min must be <= d_max");
  if (cfg.layout == Layout::kMixed) {
    if (cfg.groups < 2 || cfg.group_size < 1) {
      fail("mixed layout needs groups >= 2 and group_size >= 1");
    }
    if (cfg.groups * cfg.group_size != cfg.n) {
      fail("mixed layout needs n = groups * group_size");
    }
  }
  if (!(cfg.rot_perturb_max >= 0.0 && cfg.rot_perturb_max < 90.0)) {
    fail("rot_perturb_max must lie in [0, 90)");
  }
  if (cfg.image_w <= 0 || cfg.image_h <= 0) fail("image size must be > 0");
  if (!(cfg.focal > 0.0)) fail("focal must be > 0");
  if (!(cfg.inlier_threshold > 0.0)) fail("inlier_threshold must be > 0");
  if (!(cfg.candidate_perturb_max >= 0.0 && cfg.candidate_perturb_max < 180.0)) {
    fail("candidate_perturb_max must lie in [0, 180)");
  }
  if (cfg.num_candidates < 1) fail("num_candidates must be >= 1");
  if (cfg.min_inliers < kMinEdgeObservations) {
    fail("min_inliers must be >= " + std::to_string(kMinEdgeObservations));
  }
}

std::string SerializeSimSettings(const SimSettings& cfg) {
  nlohmann::json doc;
  doc["n"] = cfg.n;
  doc["n_cov"] = cfg.n_cov;
  doc["sigma"] = cfg.sigma;
  doc["d_min"] = cfg.d_min;
  doc["d_max"] = cfg.d_max;
  doc["layout"] = LayoutName(cfg.layout);
  if (cfg.layout == Layout::kMixed) {
    doc["groups"] = cfg.groups;
    doc["group_size"] = cfg.group_size;
  }
  doc["rot_perturb_max"] = cfg.rot_perturb_max;
  doc["image_w"] = cfg.image_w;
  doc["image_h"] = cfg.image_h;
  doc["focal"] = cfg.focal;
  doc["seed"] = cfg.seed;
  doc["inlier_threshold"] = cfg.inlier_threshold;
  doc["candidate_perturb_max"] = cfg.candidate_perturb_max;
  doc["num_candidates"] = cfg.num_candidates;
  doc["min_inliers"] = cfg.min_inliers;
  doc["rng"] = "mt19937_64";
  return doc.dump(2) + "\n";
}

Vec3 SyntheticScene::CameraCenter(int i) const {
  return -(gt_rotations[i].Inverse() * gt_translations[i]);
}

std::vector<std::pair<int, int>> SyntheticScene::CommonObservations(
    int j, int k) const {
  const std::vector<CameraObservation>& a = observations[j];
  const std::vector<CameraObservation>& b = observations[k];
  std::vector<std::pair<int, int>> common;
  size_t ia = 0;
  size_t ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia].point < b[ib].point) {
      ++ia;
    } else if (b[ib].point < a[ia].point) {
      ++ib;
    } else {
      common.emplace_back(static_cast<int>(ia), static_cast<int>(ib));
      ++ia;
      ++ib;
    }
  }
  return common;
}

SyntheticScene GenerateScene(const SimSettings& cfg) {
  ValidateSimSettings(cfg);
  Rng rng(DeriveSeed(cfg.seed, kSceneStream));
  const Intrinsics intrinsics = MakeIntrinsics(cfg);

  SyntheticScene scene;
  scene.settings = cfg;
  const std::vector<Vec3> centers = CameraCenters(cfg);
  const double max_tilt = DegToRad(cfg.rot_perturb_max);
  for (int i = 0; i < cfg.n; ++i) {
    const Rotation r = RandomRotation(max_tilt, rng);
    scene.gt_rotations.push_back(r);
    scene.gt_translations.push_back(-(r * centers[i]));
  }
  scene.observations.resize(cfg.n);

  for (int j = 0; j < cfg.n; ++j) {
    for (int k = j + 1; k < cfg.n; ++k) {
      if ((centers[j] - centers[k]).norm() > kNeighborDistance) continue;
      int count = static_cast<int>(scene.CommonObservations(j, k).size());
      const int max_attempts = kAttemptsPerPoint * cfg.n_cov;
      int attempts = 0;
      while (count < cfg.n_cov) {
        if (attempts >= max_attempts) {
          throw Error(ErrorKind::kGeneration,
                      "cameras " + std::to_string(j) + " and " +
                          std::to_string(k) + " reached only " +
                          std::to_string(count) + " of " +
                          std::to_string(cfg.n_cov) + " common points after " +
                          std::to_string(max_attempts) + " attempts");
        }
        const int source = (attempts % 2 == 0) ? j : k;
        ++attempts;
        const double u = rng.Uniform(0.0, intrinsics.w);
        const double v = rng.Uniform(0.0, intrinsics.h);
        const double depth = cfg.d_min == cfg.d_max
                                 ? cfg.d_min
                                 : rng.Uniform(cfg.d_min, cfg.d_max);
        const Vec3 ray = scene.gt_rotations[source].Inverse() *
                         Vec3((u - intrinsics.cx) / intrinsics.f,
                              (v - intrinsics.cy) / intrinsics.f, 1.0);
        const Vec3& origin = centers[source];
        if (ray.z() <= 1e-9) continue;
        const Vec3 x = origin + ((depth - origin.z()) / ray.z()) * ray;
        if (!Sees(scene, intrinsics, j, x) || !Sees(scene, intrinsics, k, x)) {
          continue;
        }
        AddPoint(x, intrinsics, cfg.sigma, rng, scene);
        const int last = static_cast<int>(scene.points.size()) - 1;
        const auto& oj = scene.observations[j];
        const auto& ok = scene.observations[k];
        if (!oj.empty() && oj.back().point == last && !ok.empty() &&
            ok.back().point == last) {
          ++count;
        }
      }
    }
  }
  return scene;
}

double AngularReprojectionError(const Mat3& relative_rotation,
                                const Vec3& t_dir, const Vec3& f_j,
                                const Vec3& f_k) {
  const Vec3 rf_k = relative_rotation * f_k;
  const double nee = std::abs(t_dir.dot(f_j.cross(rf_k)));
  const double denom = std::max(t_dir.cross(f_j).norm(), t_dir.cross(rf_k).norm());
  if (denom <= 0.0) return 0.0;
  return std::asin(std::min(1.0, nee / denom));
}

SyntheticDataset BuildEdges(const SyntheticScene& scene, const SimSettings& cfg) {
  ValidateSimSettings(cfg);
  const int n = static_cast<int>(scene.gt_rotations.size());
  Rng rng(DeriveSeed(cfg.seed, kEdgeStream));
  const double max_perturb = DegToRad(cfg.candidate_perturb_max);

  std::vector<EdgeInput> edges;
  std::vector<int> inlier_counts;
  std::vector<char> inlier;
  std::vector<char> best_inlier;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const std::vector<std::pair<int, int>> common =
          scene.CommonObservations(j, k);
      if (static_cast<int>(common.size()) < cfg.n_cov) continue;

      const Rotation r_jk = scene.gt_rotations[j] * scene.gt_rotations[k].Inverse();
      const Vec3 t_jk =
          scene.gt_translations[j] - r_jk * scene.gt_translations[k];
      const bool zero_baseline = t_jk.norm() < kZeroBaseline;
      const Vec3 t_hat = zero_baseline ? Vec3::UnitZ() : t_jk.normalized();

      int best_count = -1;
      Rotation best_rotation;
      inlier.assign(common.size(), 0);
      for (int c = 0; c < cfg.num_candidates; ++c) {
        const Rotation candidate = RandomRotation(max_perturb, rng) * r_jk;
        Vec3 t_candidate;
        if (zero_baseline) {
          t_candidate = rng.UnitVector();
        } else {
          const Vec3 axis = RandomOrthogonal(t_hat, rng);
          const double angle = rng.Uniform(0.0, max_perturb);
          t_candidate = ExpMap(angle * axis) * t_hat;
        }
        int count = 0;
        for (size_t i = 0; i < common.size(); ++i) {
          const Vec3& f_j = scene.observations[j][common[i].first].bearing;
          const Vec3& f_k = scene.observations[k][common[i].second].bearing;
          inlier[i] = AngularReprojectionError(candidate.matrix(), t_candidate,
                                               f_j, f_k) <= cfg.inlier_threshold;
          count += inlier[i];
        }
        if (count > best_count) {
          best_count = count;
          best_rotation = candidate;
          best_inlier = inlier;
        }
      }
      if (best_count < cfg.min_inliers) continue;

      EdgeInput edge;
      edge.j = j;
      edge.k = k;
      for (size_t i = 0; i < common.size(); ++i) {
        if (!best_inlier[i]) continue;
        edge.observations.bearings_j.push_back(
            scene.observations[j][common[i].first].bearing);
        edge.observations.bearings_k.push_back(
            scene.observations[k][common[i].second].bearing);
      }
      edge.rel_rotation = best_rotation;
      edges.push_back(std::move(edge));
      inlier_counts.push_back(best_count);
    }
  }

  if (edges.empty()) {
    throw Error(ErrorKind::kGeneration, "no camera pair produced an edge");
  }
  GraphOptions options;
  options.min_covisible = cfg.min_inliers;
  try {
    SyntheticDataset out{
        ViewGraph::Create(n, std::move(edges), scene.gt_rotations,
                          scene.gt_rotations, options),
        scene.gt_translations, std::move(inlier_counts)};
    return out;
  } catch (const Error& e) {
    throw Error(ErrorKind::kGeneration,
                std::string("edge construction failed: ") + e.what());
  }
}

SyntheticDataset GenerateDataset(const SimSettings& cfg) {
  return BuildEdges(GenerateScene(cfg), cfg);
}

std::vector<Rotation> PerturbRotations(const std::vector<Rotation>& rotations,
                                       double max_deg, uint64_t seed) {
  if (!(max_deg >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "max_deg must be >= 0");
  }
  if (max_deg == 0.0) return rotations;
  Rng rng(seed);
  const double max_angle = DegToRad(max_deg);
  std::vector<Rotation> out;
  out.reserve(rotations.size());
  for (const Rotation& r : rotations) {
    out.push_back(RandomRotation(max_angle, rng) * r);
  }
  return out;
}

}  // namespace roba
