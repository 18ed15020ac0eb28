#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtmkl/dataset.hpp"
#include "mtmkl/loss.hpp"
#include "mtmkl/matrix_io.hpp"
#include "mtmkl/task_similarity.hpp"

namespace mtmkl {

enum class SweepOrder { kSequential, kShuffled };
enum class StopRule { kRelativeChange, kDualityGap, kEither };

struct SolverConfig {
  double C = 1.0;
  double p = 2.0;
  double epsilon = 1e-4;
  std::size_t max_epochs = 1000;
  SweepOrder sweep_order = SweepOrder::kShuffled;
  /// Epochs between complete-dual gap evaluations (the stopping epoch and
  /// the last epoch are always evaluated).
  std::size_t gap_check_interval = 5;
  StopRule stop_rule = StopRule::kEither;
  /// false freezes theta at its initial value (Vanilla MTL).
  bool learn_theta = true;
  /// Debug: multiply each inner product of the coordinate-step numerator by
  /// theta_m a second time, as the update formula reads when taken literally.
  bool literal_numerator = false;
  std::uint64_t seed = 1;
  Loss loss{LossKind::kHinge};

  /// Throws InfeasibleConfig when C <= 0, p < 1 or epsilon <= 0.
  void validate() const;
};

SweepOrder parse_sweep_order(const std::string& name);
StopRule parse_stop_rule(const std::string& name);
std::string to_string(SweepOrder order);
std::string to_string(StopRule rule);

/// Kernel m: one task similarity acting on one feature view.
struct KernelTerm {
  std::size_t view = 0;
  TaskSimilarity similarity;
};

/// Pairs similarities with views: one view -> every kernel uses it; as many
/// views as similarities -> one-to-one; one similarity -> replicated per view.
std::vector<KernelTerm> assign_kernels(std::vector<TaskSimilarity> similarities, std::size_t num_views);

/// A dataset bound to kernels, with the read-only caches the solver needs.
/// The dataset must outlive the problem.
class Problem {
 public:
  Problem(const MultiTaskDataset& data, std::vector<KernelTerm> kernels);

  const MultiTaskDataset& data() const { return *data_; }
  const std::vector<KernelTerm>& kernels() const { return kernels_; }
  std::size_t num_kernels() const { return kernels_.size(); }
  std::size_t num_tasks() const { return data_->num_tasks(); }
  std::size_t size() const { return data_->size(); }
  const FeatureVector& features(std::size_t m, std::size_t i) const {
    return data_->features(kernels_[m].view, i);
  }
  std::size_t dimension(std::size_t m) const { return data_->view(kernels_[m].view).dim; }
  const Matrix& Q(std::size_t m) const { return kernels_[m].similarity.Q; }
  const Matrix& Qinv(std::size_t m) const { return kernels_[m].similarity.Qinv; }

  /// k~_m(x_i, x_i) = qinv_{m tau(i) tau(i)} * k_m(x_i, x_i).
  double kernel_diagonal(std::size_t m, std::size_t i) const { return diagonal_[m * size() + i]; }

  struct Coupling {
    std::size_t task;
    double weight;
  };
  /// Tasks t with qinv_{m s t} != 0.
  const std::vector<Coupling>& coupled_tasks(std::size_t m, std::size_t s) const {
    return coupled_[m * num_tasks() + s];
  }

 private:
  const MultiTaskDataset* data_;
  std::vector<KernelTerm> kernels_;
  std::vector<double> diagonal_;
  std::vector<std::vector<Coupling>> coupled_;
};

/// W, theta and alpha, kept consistent with
///   w_mt = theta_m * sum_i qinv_{m tau(i) t} alpha_i y_i phi_m(x_i).
struct ModelState {
  /// Per kernel a (dim_m x T) matrix whose column t is w_mt.
  std::vector<Matrix> W;
  std::vector<double> theta;
  std::vector<double> alpha;
  double primal_objective = 0.0;
};

/// theta = 0-wise init: uniform theta_m = (1/M)^(1/p), W = 0, alpha = 0.
ModelState initial_state(const Problem& problem, const SolverConfig& config);

/// Closed-form kernel weights from r_m = tr(W_m Q_m W_m^T):
///   theta_m = r_m^(1/(p+1)) / (sum_k r_k^(p/(p+1)))^(1/p).
/// All-zero r gives the uniform initial weights. r_m < -1e-8 throws.
std::vector<double> theta_step(std::span<const double> r, double p);

/// r_m = sum_{s,t} q_{mst} <w_ms, w_mt> for every kernel.
std::vector<double> regularizer_terms(const ModelState& state, const Problem& problem);

std::vector<double> theta_step(const ModelState& state, const Problem& problem, double p);

/// sum_m <w_{m tau(i)}, phi_m(x_i)>.
double decision_value(const ModelState& state, const Problem& problem, std::size_t i);

/// Box-clipped optimal step for alpha_i. Zero curvature gives d = 0.
double coordinate_update(std::size_t i, const ModelState& state, const Problem& problem,
                         const SolverConfig& config);

/// alpha_i += d and w_mt += d theta_m qinv_{m tau(i) t} y_i phi_m(x_i).
void apply_alpha_update(ModelState& state, std::size_t i, double d, const Problem& problem);

/// w_mt *= theta_new_m / theta_old_m; throws NumericalError if theta_old_m <= 0.
void apply_theta_rescale(ModelState& state, std::span<const double> theta_new);

/// Everything computed from one pass over W and the data.
struct Objectives {
  double primal = 0.0;
  double dual_partial = 0.0;
  double dual_complete = 0.0;
  double loss_sum = 0.0;
  std::vector<double> r;      // tr(W_m Q_m W_m^T)
  std::vector<double> norms;  // ||A*_m(alpha)||^2_{Qinv_m} = r_m / theta_m^2
  double gap() const { return primal - dual_complete; }
};

Objectives evaluate_objectives(const ModelState& state, const Problem& problem, const SolverConfig& config);
double primal_objective(const ModelState& state, const Problem& problem, const SolverConfig& config);
double dual_objective_partial(const ModelState& state, const Problem& problem, const SolverConfig& config);
double dual_objective_complete(const ModelState& state, const Problem& problem, const SolverConfig& config);
double duality_gap_complete(const ModelState& state, const Problem& problem, const SolverConfig& config);

/// W recomputed from alpha and theta from scratch.
std::vector<Matrix> rebuild_weights(std::span<const double> alpha, std::span<const double> theta,
                                    const Problem& problem);

enum class TrainStatus { kConvergedGap, kConvergedRelativeChange, kMaxEpochs };
std::string to_string(TrainStatus status);

struct EpochRecord {
  std::size_t epoch = 0;
  /// Primal after the alpha sweep, before the theta decision.
  double primal = 0.0;
  bool theta_step = false;
  /// Complete-dual gap after the epoch; NaN when not evaluated.
  double gap = 0.0;
};

struct TrainReport {
  TrainStatus status = TrainStatus::kMaxEpochs;
  std::size_t epochs = 0;
  double initial_primal = 0.0;
  double primal = 0.0;
  double dual_partial = 0.0;
  double dual_complete = 0.0;
  double gap = 0.0;
  std::vector<EpochRecord> trajectory;
  /// Initial weights followed by the result of every executed theta step.
  std::vector<std::vector<double>> theta_trajectory;
  double sweep_seconds = 0.0;
  double objective_seconds = 0.0;
  double theta_seconds = 0.0;

  bool converged() const { return status != TrainStatus::kMaxEpochs; }
};

/// True iff every theta step happened at an epoch whose primal is strictly
/// below the previous epoch's (initial primal for epoch 1).
bool theta_steps_gated(const TrainReport& report);

struct TrainResult {
  ModelState state;
  TrainReport report;
};

/// Alternates one alpha sweep with a primal-gated theta step until the
/// configured stop rule fires or max_epochs is reached. Hinge loss only.
TrainResult train(const Problem& problem, const SolverConfig& config);

}  // namespace mtmkl
