#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roba/epipolar.h"
#include "roba/so3.h"

namespace roba {

struct GraphOptions {
  // Minimum observations per edge (inclusive).
  int min_covisible = 10;
};

// Input description of one edge. rel_rotation, when present, is an external
// estimate of R_j R_k^T (e.g. the input to rotation averaging).
struct EdgeInput {
  int j = 0;
  int k = 0;
  EdgeObservations observations;
  std::optional<Rotation> rel_rotation;
};

struct Edge {
  int j = 0;
  int k = 0;
  EdgeObservations observations;
  EdgeMoments moments;
  std::optional<Rotation> rel_rotation;
};

// Cameras, covisibility edges with their precomputed moments, initial and
// optional ground-truth rotations. Immutable once built; copies share the
// edge storage.
//
// Invariants, checked by Create:
//   0 <= j < k < n for every edge, no duplicate pairs, at least one edge,
//   every edge has >= min_covisible unit-norm observations,
//   the edges connect all n cameras.
class ViewGraph {
 public:
  static ViewGraph Create(int num_cameras, std::vector<EdgeInput> edges,
                          std::vector<Rotation> initial_rotations,
                          std::optional<std::vector<Rotation>> gt_rotations =
                              std::nullopt,
                          const GraphOptions& options = {});

  int num_cameras() const { return num_cameras_; }
  int num_edges() const { return static_cast<int>(edges_->size()); }
  const std::vector<Edge>& edges() const { return *edges_; }
  const Edge& edge(int index) const { return (*edges_)[index]; }

  const std::vector<Rotation>& initial_rotations() const {
    return initial_rotations_;
  }
  const std::optional<std::vector<Rotation>>& gt_rotations() const {
    return gt_rotations_;
  }

  // Same edges, different starting point. Throws on a size mismatch.
  ViewGraph WithInitialRotations(std::vector<Rotation> rotations) const;

 private:
  ViewGraph() = default;

  int num_cameras_ = 0;
  std::shared_ptr<const std::vector<Edge>> edges_;
  std::vector<Rotation> initial_rotations_;
  std::optional<std::vector<Rotation>> gt_rotations_;
};

struct GraphStats {
  int n_edges = 0;
  // n_edges / C(n, 2).
  double edge_density = 0.0;
  // Degrees; only when ground truth and per-edge rel_rotation are present.
  std::optional<double> mean_rel_rot_error;
  std::optional<double> median_rel_rot_error;
};

GraphStats ComputeGraphStats(const ViewGraph& graph);

// JSON interchange format (see docs/graph_format.md).
inline constexpr int kGraphFormatVersion = 1;

std::string SerializeGraph(const ViewGraph& graph);
ViewGraph ParseGraph(std::string_view text, const GraphOptions& options = {});

// Throws Error(kIo) on file-system failures and Error(kParse) /
// Error(kInvalidGraph) / Error(kInsufficientObservations) /
// Error(kDisconnectedGraph) on bad content.
ViewGraph LoadGraph(const std::filesystem::path& path,
                    const GraphOptions& options = {});
// Atomic write (temporary file + rename).
void SaveGraph(const ViewGraph& graph, const std::filesystem::path& path);

// Standalone rotation list in the same quaternion encoding.
std::string SerializeRotations(const std::vector<Rotation>& rotations);
std::vector<Rotation> ParseRotations(std::string_view text);
std::vector<Rotation> LoadRotations(const std::filesystem::path& path);
void SaveRotations(const std::vector<Rotation>& rotations,
                   const std::filesystem::path& path);

}  // namespace roba
