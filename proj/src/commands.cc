#include "roba/commands.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "roba/error.h"
#include "roba/eval.h"
#include "roba/file_util.h"
#include "roba/random.h"
#include "roba/stats.h"
#include "roba/view_graph.h"

namespace roba {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Stream index for the initial-rotation perturbation of a trial; the scene
// and edge streams of synth use 0 and 1.
constexpr uint64_t kInitStream = 2;

std::string FormatDouble(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Creates the output directory. Returns false after reporting on failure.
bool PrepareOutput(const fs::path& dir, std::ostream& err) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    err << "error: cannot create output directory " << dir.string();
    if (ec) err << ": " << ec.message();
    err << "\n";
    return false;
  }
  return true;
}

json ConfigJson(const OptimizerConfig& cfg) {
  json doc;
  doc["n_iterations"] = cfg.n_iterations;
  doc["alpha_initial"] = cfg.alpha_initial;
  doc["alpha_reduced"] = cfg.alpha_reduced;
  doc["beta1"] = cfg.beta1;
  doc["beta2"] = cfg.beta2;
  doc["epsilon"] = cfg.epsilon;
  doc["delta"] = cfg.delta;
  doc["use_sqrt"] = cfg.use_sqrt;
  doc["approximate_gradient"] = cfg.approximate_gradient;
  doc["switch_on_increases"] = cfg.switch_on_increases;
  if (cfg.convergence_tol) doc["convergence_tol"] = *cfg.convergence_tol;
  return doc;
}

struct TrialOutcome {
  bool ok = false;
  double init_mn1 = 0.0;
  double final_mn1 = 0.0;
  std::string error;
};

TrialOutcome RunTrial(const MonteCarloCommand& cmd, int trial) {
  TrialOutcome outcome;
  try {
    SimSettings sim = cmd.sim;
    sim.seed = TrialSeed(cmd.sim.seed, trial);
    const SyntheticDataset ds = GenerateDataset(sim);
    const std::vector<Rotation>& gt = *ds.graph.gt_rotations();
    const ViewGraph graph = ds.graph.WithInitialRotations(PerturbRotations(
        gt, cmd.init_perturb, TrialInitSeed(cmd.sim.seed, trial)));
    OptimizerConfig cfg = cmd.optimizer;
    if (cmd.jobs > 1) cfg.num_threads = 1;
    const OptimizeResult result = Optimize(graph, cfg);
    outcome.init_mn1 = MeanL1Error(graph.initial_rotations(), gt);
    outcome.final_mn1 = MeanL1Error(result.rotations, gt);
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

void AddSimOptions(CLI::App* app, SimSettings* sim, std::string* layout) {
  app->add_option("--n", sim->n, "Number of cameras")->capture_default_str();
  app->add_option("--n-cov", sim->n_cov,
                  "Minimum common points per neighboring pair")
      ->capture_default_str();
  app->add_option("--sigma", sim->sigma, "Pixel noise stddev")
      ->capture_default_str();
  app->add_option("--d-min", sim->d_min, "Minimum point distance from the xy-plane")
      ->capture_default_str();
  app->add_option("--d-max", sim->d_max, "Maximum point distance from the xy-plane")
      ->capture_default_str();
  app->add_option("--layout", *layout, "circle | pure_rotation | mixed")
      ->capture_default_str();
  app->add_option("--groups", sim->groups, "Mixed layout: number of locations")
      ->capture_default_str();
  app->add_option("--group-size", sim->group_size,
                  "Mixed layout: cameras per location")
      ->capture_default_str();
  app->add_option("--rot-perturb", sim->rot_perturb_max,
                  "Camera attitude scatter (deg)")
      ->capture_default_str();
  app->add_option("--inlier-threshold", sim->inlier_threshold,
                  "Angular inlier threshold (rad)")
      ->capture_default_str();
  app->add_option("--candidate-perturb", sim->candidate_perturb_max,
                  "Candidate pose perturbation (deg)")
      ->capture_default_str();
  app->add_option("--candidates", sim->num_candidates,
                  "Candidate poses per camera pair")
      ->capture_default_str();
  app->add_option("--min-inliers", sim->min_inliers, "Minimum inliers per edge")
      ->capture_default_str();
  app->add_option("--seed", sim->seed, "Master random seed")->capture_default_str();
}

struct OptimizerFlags {
  bool no_sqrt = false;
  bool no_switch = false;
  bool exact_gradient = false;
  double tol = 0.0;
};

void AddOptimizerOptions(CLI::App* app, OptimizerConfig* cfg,
                         OptimizerFlags* flags) {
  app->add_option("--iters", cfg->n_iterations, "Iterations")->capture_default_str();
  app->add_option("--alpha", cfg->alpha_initial, "Initial step size")
      ->capture_default_str();
  app->add_option("--alpha-reduced", cfg->alpha_reduced,
                  "Step size after the switch")
      ->capture_default_str();
  app->add_option("--delta", cfg->delta, "Finite-difference step (rad)")
      ->capture_default_str();
  app->add_flag("--no-sqrt", flags->no_sqrt,
                "Use lambda_min instead of sqrt(lambda_min) per edge");
  app->add_flag("--no-switch", flags->no_switch, "Keep the initial step size");
  app->add_flag("--exact-gradient", flags->exact_gradient,
                "Perturb both cameras of every edge (7 evaluations per edge)");
  app->add_option("--tol", flags->tol,
                  "Stop when the relative cost change stays below this for 5 "
                  "iterations (0 = off)")
      ->capture_default_str();
  app->add_option("--threads", cfg->num_threads, "Edge evaluation threads")
      ->capture_default_str();
}

void ApplyFlags(const OptimizerFlags& flags, OptimizerConfig* cfg) {
  if (flags.no_sqrt) cfg->use_sqrt = false;
  if (flags.no_switch) cfg->switch_on_increases = 0;
  if (flags.exact_gradient) cfg->approximate_gradient = false;
  if (flags.tol > 0.0) cfg->convergence_tol = flags.tol;
}

}  // namespace

uint64_t TrialSeed(uint64_t master, int trial) {
  return DeriveSeed(master, static_cast<uint64_t>(trial));
}

uint64_t TrialInitSeed(uint64_t master, int trial) {
  return DeriveSeed(TrialSeed(master, trial), kInitStream);
}

std::string TraceToCsv(const IterationTrace& trace,
                       const std::vector<double>* mn1) {
  std::string csv = "iter,cost,alpha,grad_norm";
  if (mn1) csv += ",mn1";
  csv += "\n";
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const IterationRecord& r = trace.records[i];
    csv += std::to_string(r.t) + "," + FormatDouble(r.cost) + "," +
           FormatDouble(r.alpha) + "," + FormatDouble(r.gradient_norm);
    if (mn1) csv += "," + FormatDouble((*mn1)[i]);
    csv += "\n";
  }
  return csv;
}

int RunSynth(const SynthCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    ValidateSimSettings(cmd.sim);
    if (cmd.trials < 1) throw Error(ErrorKind::kInvalidArgument, "trials must be >= 1");
    if (!(cmd.init_perturb >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "init-perturb must be >= 0");
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!PrepareOutput(cmd.out, err)) return kExitUsage;

  int failures = 0;
  for (int trial = 1; trial <= cmd.trials; ++trial) {
    try {
      SimSettings sim = cmd.sim;
      sim.seed = TrialSeed(cmd.sim.seed, trial);
      const SyntheticDataset ds = GenerateDataset(sim);
      const ViewGraph graph = ds.graph.WithInitialRotations(
          PerturbRotations(*ds.graph.gt_rotations(), cmd.init_perturb,
                           TrialInitSeed(cmd.sim.seed, trial)));
      const std::string stem = "trial_" + std::to_string(trial);
      SaveGraph(graph, cmd.out / (stem + ".graph.json"));

      const GraphStats stats = ComputeGraphStats(graph);
      json sidecar = json::parse(SerializeSimSettings(sim));
      sidecar["master_seed"] = cmd.sim.seed;
      sidecar["trial"] = trial;
      sidecar["init_perturb"] = cmd.init_perturb;
      sidecar["n_edges"] = stats.n_edges;
      sidecar["edge_density"] = stats.edge_density;
      if (stats.mean_rel_rot_error) {
        sidecar["mean_rel_rot_error"] = *stats.mean_rel_rot_error;
        sidecar["median_rel_rot_error"] = *stats.median_rel_rot_error;
      }
      WriteFileAtomic(cmd.out / (stem + ".settings.json"), sidecar.dump(2) + "\n");
      out << stem << ": " << stats.n_edges << " edges, density "
          << stats.edge_density << "\n";
    } catch (const std::exception& e) {
      err << "trial " << trial << " failed: " << e.what() << "\n";
      ++failures;
    }
  }
  return failures > 0 ? kExitRuntime : kExitOk;
}

int RunOptimize(const OptimizeCommand& cmd, std::ostream& out, std::ostream& err) {
  std::optional<ViewGraph> graph;
  try {
    ValidateConfig(cmd.optimizer);
    GraphOptions options;
    options.min_covisible = cmd.min_covisible;
    graph = LoadGraph(cmd.graph, options);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!PrepareOutput(cmd.out, err)) return kExitUsage;

  try {
    OptimizerConfig cfg = cmd.optimizer;
    const bool has_gt = graph->gt_rotations().has_value();
    if (has_gt) cfg.record_snapshots = true;
    const OptimizeResult result = Optimize(*graph, cfg);

    std::vector<double> mn1;
    if (has_gt) {
      for (const auto& snapshot : result.trace.snapshots) {
        mn1.push_back(MeanL1Error(snapshot, *graph->gt_rotations()));
      }
    }
    SaveRotations(result.rotations, cmd.out / "rotations.json");
    WriteFileAtomic(cmd.out / "trace.csv",
                    TraceToCsv(result.trace, has_gt ? &mn1 : nullptr));

    json summary;
    summary["graph"] = cmd.graph.string();
    summary["n"] = graph->num_cameras();
    summary["n_edges"] = graph->num_edges();
    summary["iterations"] = result.trace.records.size();
    summary["initial_cost"] = result.initial_cost;
    summary["final_cost"] = result.final_cost;
    summary["evaluations_per_iteration"] = result.evaluations_per_iteration;
    summary["total_evaluations"] = result.total_evaluations;
    summary["converged_early"] = result.converged_early;
    summary["config"] = ConfigJson(cmd.optimizer);
    if (has_gt) {
      summary["initial_mn1"] =
          MeanL1Error(graph->initial_rotations(), *graph->gt_rotations());
      summary["final_mn1"] = MeanL1Error(result.rotations, *graph->gt_rotations());
    }
    WriteFileAtomic(cmd.out / "summary.json", summary.dump(2) + "\n");

    out << "iterations " << result.trace.records.size() << ", cost "
        << result.initial_cost << " -> " << result.final_cost
        << ", edge-cost evaluations per iteration "
        << result.evaluations_per_iteration << " ("
        << (graph->num_edges() > 0
                ? result.evaluations_per_iteration / graph->num_edges()
                : 0)
        << " per edge)\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int RunEvaluate(const EvaluateCommand& cmd, std::ostream& out, std::ostream& err) {
  std::optional<ViewGraph> graph;
  std::vector<Rotation> estimates;
  try {
    GraphOptions options;
    options.min_covisible = cmd.min_covisible;
    graph = LoadGraph(cmd.graph, options);
    estimates = LoadRotations(cmd.rotations);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!graph->gt_rotations()) {
    err << "error: " << cmd.graph.string() << " has no ground-truth rotations\n";
    return kExitUsage;
  }
  if (static_cast<int>(estimates.size()) != graph->num_cameras()) {
    err << "error: " << estimates.size() << " rotations for a graph with "
        << graph->num_cameras() << " cameras\n";
    return kExitUsage;
  }
  if (!PrepareOutput(cmd.out, err)) return kExitUsage;
  try {
    const ErrorReport report = ComputeErrorReport(estimates, *graph->gt_rotations());
    WriteFileAtomic(cmd.out / "report.json", ReportToJson(report));
    WriteFileAtomic(cmd.out / "report.csv", ReportToCsv(report));
    out << "mn1 " << report.mn1 << "  md1 " << report.md1 << "  mn2 "
        << report.mn2 << "  md2 " << report.md2 << " (deg)\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int RunMonteCarlo(const MonteCarloCommand& cmd, std::ostream& out,
                  std::ostream& err) {
  try {
    ValidateSimSettings(cmd.sim);
    ValidateConfig(cmd.optimizer);
    if (cmd.trials < 1) throw Error(ErrorKind::kInvalidArgument, "trials must be >= 1");
    if (cmd.jobs < 1) throw Error(ErrorKind::kInvalidArgument, "jobs must be >= 1");
    if (!(cmd.init_perturb >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "init-perturb must be >= 0");
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!PrepareOutput(cmd.out, err)) return kExitUsage;

  std::vector<TrialOutcome> outcomes(cmd.trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < cmd.trials; i = next++) {
      outcomes[i] = RunTrial(cmd, i + 1);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < std::min(cmd.jobs, cmd.trials); ++w) pool.emplace_back(worker);
    worker();
  }

  std::string csv = "trial,init_mn1,final_mn1,improved\n";
  std::vector<double> init_errors;
  std::vector<double> final_errors;
  int better = 0;
  int failures = 0;
  for (int i = 0; i < cmd.trials; ++i) {
    const TrialOutcome& o = outcomes[i];
    if (!o.ok) {
      ++failures;
      err << "trial " << i + 1 << " failed: " << o.error << "\n";
      csv += std::to_string(i + 1) + ",,,failed\n";
      continue;
    }
    const bool improved = o.final_mn1 < o.init_mn1;
    better += improved;
    init_errors.push_back(o.init_mn1);
    final_errors.push_back(o.final_mn1);
    csv += std::to_string(i + 1) + "," + FormatDouble(o.init_mn1) + "," +
           FormatDouble(o.final_mn1) + "," + (improved ? "1" : "0") + "\n";
  }
  const double fraction_better = static_cast<double>(better) / cmd.trials;
  csv += "median," + FormatDouble(Median(init_errors)) + "," +
         FormatDouble(Median(final_errors)) + "," + FormatDouble(fraction_better) +
         "\n";
  try {
    WriteFileAtomic(cmd.out / "summary.csv", csv);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  out << cmd.trials - failures << "/" << cmd.trials
      << " trials completed; median mn1 " << Median(init_errors) << " -> "
      << Median(final_errors) << " deg; better in " << 100.0 * fraction_better
      << "%\n";
  return failures > 0 ? kExitRuntime : kExitOk;
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Camera rotation refinement on epipolar view graphs"};
  app.set_config("--config", "", "TOML/INI config file; flags override it");
  app.require_subcommand(1);

  SynthCommand synth;
  std::string synth_layout = "circle";
  CLI::App* synth_app =
      app.add_subcommand("synth", "Generate synthetic view-graph datasets");
  AddSimOptions(synth_app, &synth.sim, &synth_layout);
  synth_app->add_option("--trials", synth.trials, "Number of datasets")
      ->capture_default_str();
  synth_app->add_option("--init-perturb", synth.init_perturb,
                        "Initial-rotation perturbation (deg)")
      ->capture_default_str();
  synth_app->add_option("--out", synth.out, "Output directory")->capture_default_str();

  OptimizeCommand optimize;
  OptimizerFlags optimize_flags;
  CLI::App* optimize_app =
      app.add_subcommand("optimize", "Refine the initial rotations of a graph");
  optimize_app->add_option("graph", optimize.graph, "Graph JSON file")->required();
  AddOptimizerOptions(optimize_app, &optimize.optimizer, &optimize_flags);
  optimize_app->add_option("--min-covisible", optimize.min_covisible,
                           "Minimum observations per edge")
      ->capture_default_str();
  optimize_app->add_option("--out", optimize.out, "Output directory")
      ->capture_default_str();

  EvaluateCommand evaluate;
  CLI::App* evaluate_app = app.add_subcommand(
      "evaluate", "Compare rotations with the graph's ground truth");
  evaluate_app->add_option("rotations", evaluate.rotations, "Rotations JSON file")
      ->required();
  evaluate_app->add_option("graph", evaluate.graph, "Graph JSON file")->required();
  evaluate_app->add_option("--min-covisible", evaluate.min_covisible,
                           "Minimum observations per edge")
      ->capture_default_str();
  evaluate_app->add_option("--out", evaluate.out, "Output directory")
      ->capture_default_str();

  MonteCarloCommand montecarlo;
  std::string montecarlo_layout = "circle";
  OptimizerFlags montecarlo_flags;
  CLI::App* montecarlo_app = app.add_subcommand(
      "montecarlo", "Generate, perturb, optimize and evaluate repeatedly");
  AddSimOptions(montecarlo_app, &montecarlo.sim, &montecarlo_layout);
  AddOptimizerOptions(montecarlo_app, &montecarlo.optimizer, &montecarlo_flags);
  montecarlo_app->add_option("--trials", montecarlo.trials, "Number of trials")
      ->capture_default_str();
  montecarlo_app->add_option("--init-perturb", montecarlo.init_perturb,
                             "Initial-rotation perturbation (deg)")
      ->capture_default_str();
  montecarlo_app->add_option("--jobs", montecarlo.jobs, "Concurrent trials")
      ->capture_default_str();
  montecarlo_app->add_option("--out", montecarlo.out, "Output directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_app->parsed()) {
      synth.sim.layout = ParseLayout(synth_layout);
      return RunSynth(synth, out, err);
    }
    if (optimize_app->parsed()) {
      ApplyFlags(optimize_flags, &optimize.optimizer);
      return RunOptimize(optimize, out, err);
    }
    if (evaluate_app->parsed()) return RunEvaluate(evaluate, out, err);
    montecarlo.sim.layout = ParseLayout(montecarlo_layout);
    ApplyFlags(montecarlo_flags, &montecarlo.optimizer);
    return RunMonteCarlo(montecarlo, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kInvalidArgument ? kExitUsage : kExitRuntime;
  }
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("roba");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace roba
