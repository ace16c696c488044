#include "roba/synth.h"

#include <cmath>
#include <map>
#include <optional>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "roba/error.h"
#include "roba/optimizer.h"
#include "roba/random.h"
#include "roba/units.h"

namespace roba {
namespace {

SimSettings Small(Layout layout = Layout::kCircle) {
  SimSettings cfg;
  cfg.layout = layout;
  cfg.n = 8;
  cfg.seed = 4;
  if (layout == Layout::kMixed) {
    cfg.n = 12;
    cfg.groups = 4;
    cfg.group_size = 3;
  }
  return cfg;
}

TEST(SimSettings, Validation) {
  EXPECT_NO_THROW(ValidateSimSettings(SimSettings{}));
  SimSettings cfg;
  cfg.d_min = 6.0;
  try {
    ValidateSimSettings(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("d_min"), std::string::npos);
  }
  cfg = {};
  cfg.sigma = -1.0;
  EXPECT_THROW(ValidateSimSettings(cfg), Error);
  cfg = {};
  cfg.n = 1;
  EXPECT_THROW(ValidateSimSettings(cfg), Error);
  cfg = {};
  cfg.layout = Layout::kMixed;
  cfg.n = 99;
  EXPECT_THROW(ValidateSimSettings(cfg), Error);
}

TEST(Layout, NamesRoundTrip) {
  for (Layout l : {Layout::kCircle, Layout::kPureRotation, Layout::kMixed}) {
    EXPECT_EQ(ParseLayout(LayoutName(l)), l);
  }
  EXPECT_THROW(ParseLayout("spiral"), Error);
}

TEST(GenerateScene, FourCameraCircleGeometry) {
  SimSettings cfg;
  cfg.n = 4;
  cfg.seed = 1;
  const SyntheticScene scene = GenerateScene(cfg);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(scene.CameraCenter(i).norm(), std::sqrt(2.0) / 2.0, 1e-12);
    EXPECT_NEAR(scene.CameraCenter(i).z(), 0.0, 1e-12);
    EXPECT_NEAR((scene.CameraCenter(i) - scene.CameraCenter((i + 1) % 4)).norm(),
                1.0, 1e-12);
  }
}

TEST(GenerateScene, AttitudeWithinScatter) {
  SimSettings cfg = Small();
  const SyntheticScene scene = GenerateScene(cfg);
  for (const Rotation& r : scene.gt_rotations) {
    EXPECT_LE(GeodesicDistance(r, Rotation()),
              DegToRad(cfg.rot_perturb_max) + 1e-12);
  }
}

TEST(GenerateScene, NeighborsShareQuota) {
  for (Layout layout : {Layout::kCircle, Layout::kPureRotation, Layout::kMixed}) {
    const SimSettings cfg = Small(layout);
    const SyntheticScene scene = GenerateScene(cfg);
    for (int j = 0; j < cfg.n; ++j) {
      for (int k = j + 1; k < cfg.n; ++k) {
        const double dist = (scene.CameraCenter(j) - scene.CameraCenter(k)).norm();
        if (dist > 1.0 + 1e-9) continue;
        EXPECT_GE(static_cast<int>(scene.CommonObservations(j, k).size()),
                  cfg.n_cov)
            << LayoutName(layout) << " " << j << "," << k;
      }
    }
  }
}

TEST(GenerateScene, ObservationsValid) {
  SimSettings cfg = Small();
  const SyntheticScene scene = GenerateScene(cfg);
  for (const auto& cam : scene.observations) {
    for (size_t i = 0; i < cam.size(); ++i) {
      EXPECT_NEAR(cam[i].bearing.norm(), 1.0, 1e-15);
      EXPECT_GE(cam[i].pixel.x(), 0.0);
      EXPECT_LT(cam[i].pixel.x(), cfg.image_w);
      EXPECT_GE(cam[i].pixel.y(), 0.0);
      EXPECT_LT(cam[i].pixel.y(), cfg.image_h);
      if (i > 0) EXPECT_LT(cam[i - 1].point, cam[i].point);
    }
  }
}

TEST(GenerateScene, PointDepthRange) {
  SimSettings cfg = Small();
  const SyntheticScene scene = GenerateScene(cfg);
  for (const Vec3& x : scene.points) {
    EXPECT_GE(std::abs(x.z()), cfg.d_min - 1e-12);
    EXPECT_LE(std::abs(x.z()), cfg.d_max + 1e-12);
  }
}

TEST(GenerateScene, NoiselessBearingsHitTheirPoints) {
  for (Layout layout : {Layout::kCircle, Layout::kPureRotation, Layout::kMixed}) {
    SimSettings cfg = Small(layout);
    cfg.sigma = 0.0;
    const SyntheticScene scene = GenerateScene(cfg);
    for (size_t c = 0; c < scene.observations.size(); ++c) {
      for (const CameraObservation& obs : scene.observations[c]) {
        const Vec3 x_cam = scene.gt_rotations[c] * scene.points[obs.point] +
                           scene.gt_translations[c];
        EXPECT_LT(obs.bearing.cross(x_cam.normalized()).norm(), 1e-15);
        EXPECT_GT(obs.bearing.dot(x_cam), 0.0);
      }
    }
  }
}

TEST(GenerateScene, Deterministic) {
  SimSettings cfg = Small();
  const SyntheticScene a = GenerateScene(cfg);
  const SyntheticScene b = GenerateScene(cfg);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
  EXPECT_EQ(SerializeGraph(GenerateDataset(cfg).graph),
            SerializeGraph(GenerateDataset(cfg).graph));
  cfg.seed = 5;
  EXPECT_NE(GenerateScene(cfg).points.front(), a.points.front());
}

TEST(GenerateScene, InfeasibleQuotaFails) {
  SimSettings cfg = Small();
  cfg.n = 3;
  cfg.rot_perturb_max = 0.0;
  // Frusta 0.03 units wide at depth 1, centers 1 unit apart: no overlap.
  cfg.focal = 20000.0;
  cfg.d_min = cfg.d_max = 1.0;
  try {
    GenerateScene(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGeneration);
  }
}

TEST(AngularReprojectionError, ZeroOnCoplanarAndSmallAngleScale) {
  const Vec3 t = Vec3::UnitX();
  const Vec3 f = Vec3(0.1, 0.2, 1.0).normalized();
  EXPECT_EQ(AngularReprojectionError(Mat3::Identity(), t, f, f), 0.0);
  // Tilt f_k out of the epipolar plane by a small angle about the plane's
  // in-plane direction orthogonal to f.
  const Vec3 normal = t.cross(f).normalized();
  const Vec3 tilted = (f + 1e-4 * normal).normalized();
  const double err = AngularReprojectionError(Mat3::Identity(), t, f, tilted);
  EXPECT_NEAR(err, 1e-4, 2e-6);
}

TEST(BuildEdges, NoiselessExactCandidatesKeepEveryPoint) {
  SimSettings cfg = Small();
  cfg.sigma = 0.0;
  cfg.candidate_perturb_max = 0.0;
  const SyntheticScene scene = GenerateScene(cfg);
  const SyntheticDataset ds = BuildEdges(scene, cfg);
  for (int e = 0; e < ds.graph.num_edges(); ++e) {
    const Edge& edge = ds.graph.edge(e);
    const int common = static_cast<int>(scene.CommonObservations(edge.j, edge.k).size());
    EXPECT_EQ(edge.observations.size(), common);
    EXPECT_EQ(ds.inlier_counts[e], common);
  }
}

TEST(BuildEdges, EdgesRespectMinimumAndCarryRelRotation) {
  const SimSettings cfg = Small();
  const SyntheticDataset ds = GenerateDataset(cfg);
  ASSERT_EQ(ds.inlier_counts.size(), static_cast<size_t>(ds.graph.num_edges()));
  for (int e = 0; e < ds.graph.num_edges(); ++e) {
    EXPECT_GE(ds.graph.edge(e).observations.size(), cfg.min_inliers);
    EXPECT_TRUE(ds.graph.edge(e).rel_rotation.has_value());
  }
  EXPECT_TRUE(ds.graph.gt_rotations().has_value());
  EXPECT_EQ(ds.gt_translations.size(), static_cast<size_t>(cfg.n));
}

TEST(BuildEdges, StricterThresholdNeverAddsInliers) {
  SimSettings cfg = Small();
  const SyntheticScene scene = GenerateScene(cfg);
  std::map<std::pair<int, int>, int> previous;
  bool first = true;
  for (double threshold : {5e-2, 2e-2, 1e-2, 5e-3}) {
    cfg.inlier_threshold = threshold;
    std::optional<SyntheticDataset> built;
    try {
      built = BuildEdges(scene, cfg);
    } catch (const Error&) {
      break;  // too strict to stay connected
    }
    const SyntheticDataset& ds = *built;
    std::map<std::pair<int, int>, int> current;
    for (int e = 0; e < ds.graph.num_edges(); ++e) {
      const Edge& edge = ds.graph.edge(e);
      current[{edge.j, edge.k}] = ds.inlier_counts[e];
      if (!first) {
        auto it = previous.find({edge.j, edge.k});
        ASSERT_NE(it, previous.end());
        EXPECT_LE(ds.inlier_counts[e], it->second);
      }
    }
    previous = std::move(current);
    first = false;
  }
}

TEST(BuildEdges, RelativeRotationErrorsAreLowSingleDigit) {
  SimSettings cfg;
  cfg.seed = 11;
  const SyntheticDataset ds = GenerateDataset(cfg);
  const GraphStats stats = ComputeGraphStats(ds.graph);
  ASSERT_TRUE(stats.mean_rel_rot_error.has_value());
  EXPECT_GT(*stats.mean_rel_rot_error, 0.1);
  EXPECT_LT(*stats.mean_rel_rot_error, 10.0);
}

TEST(BuildEdges, PureRotationIsComplete) {
  SimSettings cfg = Small(Layout::kPureRotation);
  const SyntheticDataset ds = GenerateDataset(cfg);
  EXPECT_EQ(ComputeGraphStats(ds.graph).edge_density, 1.0);
}

TEST(GenerateDataset, NoiselessZeroCostAtTruth) {
  for (Layout layout : {Layout::kCircle, Layout::kPureRotation, Layout::kMixed}) {
    SimSettings cfg = Small(layout);
    cfg.sigma = 0.0;
    const SyntheticDataset ds = GenerateDataset(cfg);
    const double lambda_sum =
        TotalCost(*ds.graph.gt_rotations(), ds.graph, /*use_sqrt=*/false);
    EXPECT_LE(lambda_sum, 1e-10 * ds.graph.num_edges()) << LayoutName(layout);
  }
}

TEST(GenerateDataset, PlanarSceneZeroCostAtTruth) {
  SimSettings cfg = Small();
  cfg.sigma = 0.0;
  cfg.d_min = cfg.d_max = 5.0;
  const SyntheticDataset ds = GenerateDataset(cfg);
  EXPECT_LE(TotalCost(*ds.graph.gt_rotations(), ds.graph, false),
            1e-10 * ds.graph.num_edges());
}

TEST(PerturbRotations, Properties) {
  Rng rng(3);
  std::vector<Rotation> rots;
  for (int i = 0; i < 50; ++i) rots.push_back(RandomRotation(kPi, rng));
  const auto same = PerturbRotations(rots, 0.0, 9);
  for (size_t i = 0; i < rots.size(); ++i) EXPECT_EQ(same[i], rots[i]);
  const auto a = PerturbRotations(rots, 10.0, 9);
  const auto b = PerturbRotations(rots, 10.0, 9);
  for (size_t i = 0; i < rots.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_LE(GeodesicDistance(a[i], rots[i]), DegToRad(10.0) + 1e-12);
  }
  EXPECT_THROW(PerturbRotations(rots, -1.0, 9), Error);
}

TEST(SerializeSimSettings, ContainsFields) {
  SimSettings cfg;
  cfg.layout = Layout::kMixed;
  const std::string text = SerializeSimSettings(cfg);
  for (const char* key : {"\"n\"", "\"n_cov\"", "\"sigma\"", "\"layout\"",
                          "\"groups\"", "\"seed\"", "\"inlier_threshold\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

}  // namespace
}  // namespace roba
