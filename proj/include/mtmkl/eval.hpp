#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtmkl/dataset.hpp"
#include "mtmkl/solver.hpp"
#include "mtmkl/synthetic.hpp"
#include "mtmkl/task_similarity.hpp"

namespace mtmkl {

/// Mann-Whitney AUC: P(score of a positive > score of a negative), ties 1/2.
/// Throws InfeasibleConfig unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC curve from (0,0) to (1,1), one point per distinct score threshold.
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels);

enum class Method { kIndividual, kUnion, kVanillaMtl, kMtMkl };

struct MethodSpec {
  Method kind = Method::kMtMkl;
  /// Norm exponent of the kernel weights (Vanilla MTL: sets the frozen uniform value).
  double p = 2.0;

  std::string label() const;
};

/// Individual, Union, Vanilla MTL and MT-MKL for p = 1, 2, 3.
std::vector<MethodSpec> default_methods();

struct EvalReport {
  std::string method;
  double p = 0.0;
  double C = 0.0;
  std::vector<double> task_auc;
  std::vector<std::vector<RocPoint>> task_roc;
  double mean_auc = 0.0;
  /// Final kernel weights (empty for Individual).
  std::vector<double> theta;
  std::vector<std::pair<std::string, std::string>> config;
  /// Every training run behind this report, model selection included.
  std::vector<TrainReport> runs;
};

/// Per-task AUC and ROC of `scores` on `data`.
EvalReport evaluate_scores(const std::string& method, const MultiTaskDataset& data,
                           std::span<const double> scores);

struct BaselineConfig {
  std::vector<double> C_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  /// Share of each task's training examples per class held out for choosing C.
  double validation_fraction = 0.25;
  double rho = 1.0;
  HierarchyCoupling coupling = HierarchyCoupling::kPseudoInverse;
  SolverConfig solver;
  std::vector<MethodSpec> methods = default_methods();
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
};

/// (fit, validation) indices. Per task and class, round(fraction * count)
/// examples of a seeded shuffle go to validation, at least one and never all.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const MultiTaskDataset& data,
                                                                               double fraction,
                                                                               std::uint64_t seed);

/// Trains every method: C picked by mean per-task validation AUC (ties to the
/// smaller C), then refit on all of `train` and scored on `test`.
std::vector<EvalReport> run_baselines(const MultiTaskDataset& train, const MultiTaskDataset& test,
                                      const TaskTree& tree, const BaselineConfig& config);

struct BenchmarkResult {
  std::vector<std::uint64_t> seeds;
  /// per_seed[s][k]: method k on seed s.
  std::vector<std::vector<EvalReport>> per_seed;

  /// Mean over seeds of the mean AUC of method k.
  double mean_auc(std::size_t method) const;
};

BenchmarkResult run_benchmark(const SyntheticSpec& spec, std::span<const std::uint64_t> seeds,
                              const BaselineConfig& config);

/// Tab-separated, header row first.
///   summary: method p C mean_auc
///   tasks:   method task metric value
///   roc:     method task fpr tpr
void write_summary_tsv(std::ostream& out, std::span<const EvalReport> reports);
void write_task_tsv(std::ostream& out, std::span<const EvalReport> reports);
void write_roc_tsv(std::ostream& out, std::span<const EvalReport> reports);
/// method mean_auc std_auc seeds, across replicates.
void write_benchmark_summary_tsv(std::ostream& out, const BenchmarkResult& result);

}  // namespace mtmkl
