#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "roba/optimizer.h"
#include "roba/synth.h"

namespace roba {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct SynthCommand {
  SimSettings sim;
  int trials = 1;
  // Initial rotations are ground truth perturbed by U(0, init_perturb) deg.
  double init_perturb = 5.0;
  std::filesystem::path out = ".";
};

struct OptimizeCommand {
  std::filesystem::path graph;
  OptimizerConfig optimizer;
  int min_covisible = 10;
  std::filesystem::path out = ".";
};

struct EvaluateCommand {
  std::filesystem::path rotations;
  std::filesystem::path graph;
  int min_covisible = 10;
  std::filesystem::path out = ".";
};

struct MonteCarloCommand {
  SimSettings sim;
  OptimizerConfig optimizer;
  int trials = 10;
  double init_perturb = 5.0;
  // Trials run concurrently on this many threads.
  int jobs = 1;
  std::filesystem::path out = ".";
};

// Seeds for trial k (1-based) of a sweep with the given master seed. Shared
// by synth and montecarlo so both see the same datasets.
uint64_t TrialSeed(uint64_t master, int trial);
uint64_t TrialInitSeed(uint64_t master, int trial);

// Each returns a process exit code and writes artifacts atomically.
int RunSynth(const SynthCommand& cmd, std::ostream& out, std::ostream& err);
int RunOptimize(const OptimizeCommand& cmd, std::ostream& out, std::ostream& err);
int RunEvaluate(const EvaluateCommand& cmd, std::ostream& out, std::ostream& err);
int RunMonteCarlo(const MonteCarloCommand& cmd, std::ostream& out,
                  std::ostream& err);

// Trace CSV: iter,cost,alpha,grad_norm, plus mn1 when per-iteration errors
// are given (one per record).
std::string TraceToCsv(const IterationTrace& trace,
                       const std::vector<double>* mn1 = nullptr);

// Parses argv and dispatches to a subcommand.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace roba
