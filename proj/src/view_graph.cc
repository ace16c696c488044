#include "roba/view_graph.h"

#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "roba/error.h"
#include "roba/stats.h"
#include "roba/units.h"

namespace roba {
namespace {

std::string EdgeName(size_t index, int j, int k) {
  return "edge " + std::to_string(index) + " (" + std::to_string(j) + ", " +
         std::to_string(k) + ")";
}

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int Find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void Union(int a, int b) { parent_[Find(a)] = Find(b); }

 private:
  std::vector<int> parent_;
};

void CheckConnected(int num_cameras, const std::vector<Edge>& edges) {
  DisjointSets sets(num_cameras);
  for (const Edge& e : edges) sets.Union(e.j, e.k);
  const int root = sets.Find(0);
  std::vector<int> detached;
  for (int i = 0; i < num_cameras; ++i) {
    if (sets.Find(i) != root) detached.push_back(i);
  }
  if (detached.empty()) return;
  std::string list;
  for (size_t i = 0; i < detached.size() && i < 10; ++i) {
    if (i > 0) list += ", ";
    list += std::to_string(detached[i]);
  }
  if (detached.size() > 10) list += ", ...";
  throw Error(ErrorKind::kDisconnectedGraph,
              "view graph is disconnected: " + std::to_string(detached.size()) +
                  " camera(s) not connected to camera 0: " + list);
}

}  // namespace

ViewGraph ViewGraph::Create(int num_cameras, std::vector<EdgeInput> inputs,
                            std::vector<Rotation> initial_rotations,
                            std::optional<std::vector<Rotation>> gt_rotations,
                            const GraphOptions& options) {
  if (num_cameras < 2) {
    throw Error(ErrorKind::kInvalidGraph, "a view graph needs >= 2 cameras");
  }
  if (inputs.empty()) {
    throw Error(ErrorKind::kInvalidGraph, "edge list is empty");
  }
  if (options.min_covisible < kMinEdgeObservations) {
    throw Error(ErrorKind::kInvalidArgument,
                "min_covisible must be >= " +
                    std::to_string(kMinEdgeObservations));
  }
  if (static_cast<int>(initial_rotations.size()) != num_cameras) {
    throw Error(ErrorKind::kInvalidGraph,
                "expected " + std::to_string(num_cameras) +
                    " initial rotations, got " +
                    std::to_string(initial_rotations.size()));
  }
  if (gt_rotations && static_cast<int>(gt_rotations->size()) != num_cameras) {
    throw Error(ErrorKind::kInvalidGraph,
                "expected " + std::to_string(num_cameras) +
                    " ground-truth rotations, got " +
                    std::to_string(gt_rotations->size()));
  }

  auto edges = std::make_shared<std::vector<Edge>>();
  edges->reserve(inputs.size());
  std::set<std::pair<int, int>> seen;
  for (size_t index = 0; index < inputs.size(); ++index) {
    EdgeInput& in = inputs[index];
    const std::string name = EdgeName(index, in.j, in.k);
    if (in.j < 0 || in.k >= num_cameras || in.j >= in.k) {
      throw Error(ErrorKind::kInvalidGraph,
                  name + ": camera indices must satisfy 0 <= j < k < n");
    }
    if (!seen.emplace(in.j, in.k).second) {
      throw Error(ErrorKind::kInvalidGraph, name + ": duplicate camera pair");
    }
    if (in.observations.size() < options.min_covisible) {
      throw Error(ErrorKind::kInsufficientObservations,
                  name + ": " + std::to_string(in.observations.size()) +
                      " observations, need at least " +
                      std::to_string(options.min_covisible));
    }
    Edge edge;
    edge.j = in.j;
    edge.k = in.k;
    try {
      edge.moments = PrecomputeMoments(in.observations);
    } catch (const Error& e) {
      throw Error(e.kind(), name + ": " + e.what());
    }
    edge.observations = std::move(in.observations);
    edge.rel_rotation = in.rel_rotation;
    edges->push_back(std::move(edge));
  }
  CheckConnected(num_cameras, *edges);

  ViewGraph graph;
  graph.num_cameras_ = num_cameras;
  graph.edges_ = std::move(edges);
  graph.initial_rotations_ = std::move(initial_rotations);
  graph.gt_rotations_ = std::move(gt_rotations);
  return graph;
}

ViewGraph ViewGraph::WithInitialRotations(
    std::vector<Rotation> rotations) const {
  if (static_cast<int>(rotations.size()) != num_cameras_) {
    throw Error(ErrorKind::kInvalidArgument,
                "expected " + std::to_string(num_cameras_) + " rotations, got " +
                    std::to_string(rotations.size()));
  }
  ViewGraph copy = *this;
  copy.initial_rotations_ = std::move(rotations);
  return copy;
}

GraphStats ComputeGraphStats(const ViewGraph& graph) {
  GraphStats stats;
  const double n = graph.num_cameras();
  stats.n_edges = graph.num_edges();
  stats.edge_density = stats.n_edges / (0.5 * n * (n - 1.0));

  if (!graph.gt_rotations()) return stats;
  const std::vector<Rotation>& gt = *graph.gt_rotations();
  std::vector<double> errors;
  for (const Edge& e : graph.edges()) {
    if (!e.rel_rotation) continue;
    const Rotation gt_rel = gt[e.j] * gt[e.k].Inverse();
    errors.push_back(RadToDeg(GeodesicDistance(gt_rel, *e.rel_rotation)));
  }
  if (!errors.empty()) {
    stats.mean_rel_rot_error = Mean(errors);
    stats.median_rel_rot_error = Median(errors);
  }
  return stats;
}

}  // namespace roba
