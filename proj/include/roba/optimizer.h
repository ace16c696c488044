#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "roba/so3.h"
#include "roba/view_graph.h"

namespace roba {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double alpha_initial = 0.01;
  double alpha_reduced = 0.001;
  double epsilon = 1e-8;
  int n_iterations = 100;
  // Forward-difference step in the rotation-vector chart, radians.
  double delta = 1e-4;
  // Edge cost sqrt(lambda_min) when set, lambda_min otherwise.
  bool use_sqrt = true;
  // Approximate camera k's per-edge cost change by the negated change from
  // perturbing camera j (4 edge evaluations per edge instead of 7).
  bool approximate_gradient = true;
  // Successive cost increases that trigger the permanent switch to
  // alpha_reduced. 0 disables switching.
  int switch_on_increases = 5;
  // Stop early once |dC| / C stays below this for 5 consecutive iterations.
  std::optional<double> convergence_tol;
  // Worker threads for edge evaluation; results do not depend on it.
  int num_threads = 1;
  // Keep the rotations of every iteration in the trace.
  bool record_snapshots = false;
};

// Throws Error(kInvalidArgument) on non-positive step sizes, delta, epsilon,
// betas outside [0, 1), negative iteration or switch counts.
void ValidateConfig(const OptimizerConfig& cfg);

// Adam state over the stacked rotation vectors s = [u_1; ...; u_n].
struct OptimizerState {
  Eigen::VectorXd s;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int t = 0;
  double alpha = 0.01;
  int increase_streak = 0;
  bool switched = false;
  // Cost seen by the most recent RecordCost call (initially the start cost).
  double previous_cost = 0.0;
};

OptimizerState InitialState(const std::vector<Rotation>& rotations,
                            const OptimizerConfig& cfg, double initial_cost);

// Rotations Exp(u_i) of the current state.
std::vector<Rotation> StateRotations(const OptimizerState& state);

// Sum of edge costs over the edges in index order.
double TotalCost(const std::vector<Rotation>& rotations, const ViewGraph& graph,
                 bool use_sqrt = true);

struct CostGradient {
  double cost = 0.0;
  Eigen::VectorXd gradient;
  // Edge-cost evaluations performed, including the unperturbed ones.
  int64_t evaluations = 0;
};

// Total cost and forward-difference gradient with respect to the stacked
// rotation vectors. Per-edge contributions are reduced in edge order, so the
// result is identical for any cfg.num_threads.
CostGradient CostAndGradient(const std::vector<Rotation>& rotations,
                             const ViewGraph& graph,
                             const OptimizerConfig& cfg);

// One Adam update of m, v and s with the current state.alpha. The caller
// increments state.t first.
void AdamStep(OptimizerState& state, const Eigen::VectorXd& gradient,
              const OptimizerConfig& cfg);

// Feeds the cost of the current iteration to the step-size rule: a cost
// strictly above the previous one extends the increase streak, anything else
// resets it. Once the streak reaches cfg.switch_on_increases, alpha becomes
// alpha_reduced for good.
void RecordCost(OptimizerState& state, double cost, const OptimizerConfig& cfg);

struct IterationRecord {
  int t = 0;
  // Cost at the rotations the gradient was taken at.
  double cost = 0.0;
  // Step size used for this iteration's update.
  double alpha = 0.0;
  double gradient_norm = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  // Rotations matching records[i].cost; only with cfg.record_snapshots.
  std::vector<std::vector<Rotation>> snapshots;
};

struct OptimizeResult {
  std::vector<Rotation> rotations;
  IterationTrace trace;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  // Edge-cost evaluations per gradient computation (4 or 7 per edge).
  int64_t evaluations_per_iteration = 0;
  // All edge-cost evaluations, including the initial and final cost.
  int64_t total_evaluations = 0;
  bool converged_early = false;
};

// Adam-driven rotation refinement starting from graph.initial_rotations().
OptimizeResult Optimize(const ViewGraph& graph, const OptimizerConfig& cfg);

}  // namespace roba
