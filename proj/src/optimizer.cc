#include "roba/optimizer.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <thread>

#include "roba/epipolar.h"
#include "roba/error.h"

namespace roba {
namespace {

// Consecutive small relative changes required by convergence_tol.
constexpr int kConvergencePatience = 5;

struct EdgeDelta {
  double cost = 0.0;
  Vec3 dj = Vec3::Zero();
  Vec3 dk = Vec3::Zero();
};

// Runs fn(begin, end) over [0, count) split into contiguous chunks.
template <typename Fn>
void ParallelRanges(int count, int num_threads, const Fn& fn) {
  const int workers = std::clamp(num_threads, 1, std::max(1, count / 64));
  if (workers == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const int begin = std::min(count, w * chunk);
    const int end = std::min(count, begin + chunk);
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min(count, chunk));
}

}  // namespace

void ValidateConfig(const OptimizerConfig& cfg) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, what);
  };
  if (!(cfg.alpha_initial > 0.0) || !(cfg.alpha_reduced > 0.0)) {
    fail("step sizes must be > 0");
  }
  if (!(cfg.delta > 0.0)) fail("delta must be > 0");
  if (!(cfg.epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    fail("beta1 and beta2 must lie in [0, 1)");
  }
  if (cfg.n_iterations < 0) fail("n_iterations must be >= 0");
  if (cfg.switch_on_increases < 0) fail("switch_on_increases must be >= 0");
  if (cfg.convergence_tol && !(*cfg.convergence_tol > 0.0)) {
    fail("convergence_tol must be > 0");
  }
  if (cfg.num_threads < 1) fail("num_threads must be >= 1");
}

OptimizerState InitialState(const std::vector<Rotation>& rotations,
                            const OptimizerConfig& cfg, double initial_cost) {
  const int n = static_cast<int>(rotations.size());
  OptimizerState state;
  state.s.resize(3 * n);
  for (int i = 0; i < n; ++i) state.s.segment<3>(3 * i) = LogMap(rotations[i]);
  state.m = Eigen::VectorXd::Zero(3 * n);
  state.v = Eigen::VectorXd::Zero(3 * n);
  state.alpha = cfg.alpha_initial;
  state.previous_cost = initial_cost;
  return state;
}

std::vector<Rotation> StateRotations(const OptimizerState& state) {
  const int n = static_cast<int>(state.s.size() / 3);
  std::vector<Rotation> rotations;
  rotations.reserve(n);
  for (int i = 0; i < n; ++i) {
    rotations.push_back(ExpMap(state.s.segment<3>(3 * i)));
  }
  return rotations;
}

double TotalCost(const std::vector<Rotation>& rotations, const ViewGraph& graph,
                 bool use_sqrt) {
  if (static_cast<int>(rotations.size()) != graph.num_cameras()) {
    throw Error(ErrorKind::kInvalidArgument,
                "rotation count does not match the graph");
  }
  double total = 0.0;
  for (const Edge& e : graph.edges()) {
    const Mat3 rel = rotations[e.j].matrix() * rotations[e.k].matrix().transpose();
    total += EdgeCost(rel, e.moments, use_sqrt);
  }
  return total;
}

CostGradient CostAndGradient(const std::vector<Rotation>& rotations,
                             const ViewGraph& graph,
                             const OptimizerConfig& cfg) {
  const int n = graph.num_cameras();
  if (static_cast<int>(rotations.size()) != n) {
    throw Error(ErrorKind::kInvalidArgument,
                "rotation count does not match the graph");
  }
  const double delta = cfg.delta;

  // perturbed[i][a] = Exp(Log(R_i) + delta e_a).
  std::vector<std::array<Mat3, 3>> perturbed(n);
  for (int i = 0; i < n; ++i) {
    const RotationVector u = LogMap(rotations[i]);
    for (int a = 0; a < 3; ++a) {
      RotationVector ua = u;
      ua[a] += delta;
      perturbed[i][a] = ExpMap(ua).matrix();
    }
  }

  const std::vector<Edge>& edges = graph.edges();
  const int num_edges = static_cast<int>(edges.size());
  std::vector<EdgeDelta> deltas(num_edges);
  const bool exact = !cfg.approximate_gradient;
  const bool use_sqrt = cfg.use_sqrt;
  ParallelRanges(num_edges, cfg.num_threads, [&](int begin, int end) {
    for (int index = begin; index < end; ++index) {
      const Edge& e = edges[index];
      const Mat3& rj = rotations[e.j].matrix();
      const Mat3 rk_t = rotations[e.k].matrix().transpose();
      EdgeDelta& d = deltas[index];
      d.cost = EdgeCost(rj * rk_t, e.moments, use_sqrt);
      for (int a = 0; a < 3; ++a) {
        d.dj[a] = EdgeCost(perturbed[e.j][a] * rk_t, e.moments, use_sqrt) - d.cost;
      }
      if (exact) {
        for (int a = 0; a < 3; ++a) {
          d.dk[a] = EdgeCost(rj * perturbed[e.k][a].transpose(), e.moments,
                             use_sqrt) -
                    d.cost;
        }
      } else {
        d.dk = -d.dj;
      }
    }
  });

  CostGradient out;
  out.gradient = Eigen::VectorXd::Zero(3 * n);
  for (int index = 0; index < num_edges; ++index) {
    const Edge& e = edges[index];
    out.cost += deltas[index].cost;
    out.gradient.segment<3>(3 * e.j) += deltas[index].dj;
    out.gradient.segment<3>(3 * e.k) += deltas[index].dk;
  }
  out.gradient /= delta;
  out.evaluations = static_cast<int64_t>(num_edges) * (exact ? 7 : 4);
  return out;
}

void AdamStep(OptimizerState& state, const Eigen::VectorXd& gradient,
              const OptimizerConfig& cfg) {
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  state.m = b1 * state.m + (1.0 - b1) * gradient;
  state.v = b2 * state.v + (1.0 - b2) * gradient.cwiseProduct(gradient);
  const Eigen::VectorXd m_hat = state.m / (1.0 - std::pow(b1, state.t));
  const Eigen::VectorXd v_hat = state.v / (1.0 - std::pow(b2, state.t));
  state.s -= state.alpha *
             m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + cfg.epsilon).matrix());
}

void RecordCost(OptimizerState& state, double cost, const OptimizerConfig& cfg) {
  if (cost > state.previous_cost) {
    ++state.increase_streak;
  } else {
    state.increase_streak = 0;
  }
  state.previous_cost = cost;
  if (!state.switched && cfg.switch_on_increases > 0 &&
      state.increase_streak >= cfg.switch_on_increases) {
    state.switched = true;
    state.alpha = cfg.alpha_reduced;
  }
}

OptimizeResult Optimize(const ViewGraph& graph, const OptimizerConfig& cfg) {
  ValidateConfig(cfg);
  OptimizeResult result;
  const std::vector<Rotation>& start = graph.initial_rotations();
  result.initial_cost = TotalCost(start, graph, cfg.use_sqrt);
  result.total_evaluations = graph.num_edges();

  OptimizerState state = InitialState(start, cfg, result.initial_cost);
  std::vector<Rotation> rotations = start;
  int small_changes = 0;
  while (state.t < cfg.n_iterations) {
    ++state.t;
    const CostGradient cg = CostAndGradient(rotations, graph, cfg);
    result.evaluations_per_iteration = cg.evaluations;
    result.total_evaluations += cg.evaluations;

    IterationRecord record;
    record.t = state.t;
    record.cost = cg.cost;
    record.alpha = state.alpha;
    record.gradient_norm = cg.gradient.norm();
    result.trace.records.push_back(record);
    if (cfg.record_snapshots) result.trace.snapshots.push_back(rotations);

    const double previous_cost = state.previous_cost;
    AdamStep(state, cg.gradient, cfg);
    rotations = StateRotations(state);
    RecordCost(state, cg.cost, cfg);

    if (cfg.convergence_tol) {
      const double change = std::abs(cg.cost - previous_cost);
      const bool small = cg.cost == 0.0 || change / cg.cost < *cfg.convergence_tol;
      small_changes = small ? small_changes + 1 : 0;
      if (small_changes >= kConvergencePatience) {
        result.converged_early = true;
        break;
      }
    }
  }
  result.final_cost = TotalCost(rotations, graph, cfg.use_sqrt);
  result.total_evaluations += graph.num_edges();
  result.rotations = std::move(rotations);
  return result;
}

}  // namespace roba
