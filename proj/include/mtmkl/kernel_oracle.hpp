#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mtmkl/dataset.hpp"
#include "mtmkl/matrix_io.hpp"
#include "mtmkl/solver.hpp"

namespace mtmkl {

/// Precomputed multi-task kernels K~_m[i,j] = qinv_{m tau(i) tau(j)} k_m(x_i, x_j).
struct MultitaskKernelSet {
  std::vector<Matrix> kernels;
  std::vector<int> labels;
  std::vector<std::size_t> tasks;

  std::size_t size() const { return labels.size(); }
};

/// Linear base kernel of one view: K[i,j] = <phi(x_i), phi(x_j)>.
Matrix linear_kernel(const View& view);

MultitaskKernelSet build_multitask_kernels(std::span<const Matrix> base_kernels, std::span<const Matrix> qinvs,
                                           std::span<const int> labels, std::span<const std::size_t> tasks);

/// Base linear kernels of every kernel term of `problem`, turned into K~_m.
MultitaskKernelSet build_multitask_kernels(const Problem& problem);

/// sum_{i,j} alpha_i alpha_j y_i y_j K~_m[i,j].
double norm_term(const MultitaskKernelSet& kernels, std::size_t m, std::span<const double> alpha);

struct OracleResult {
  std::vector<double> alpha;
  std::vector<double> theta;
  double objective = 0.0;  // primal
  double dual_partial = 0.0;
  double dual_complete = 0.0;
  std::size_t epochs = 0;
  bool converged = false;
  double gap() const { return objective - dual_complete; }
};

/// Kernel-space reference solver: dual coordinate ascent on
/// sum_m theta_m K~_m with a theta step after every sweep. Supports hinge and
/// logistic losses; bias-free (no sum alpha_i y_i = 0 constraint).
/// Negative curvature along a coordinate throws NumericalError.
OracleResult oracle_train(const MultitaskKernelSet& kernels, const SolverConfig& config);

/// Objectives of (alpha, theta) on the kernel set.
OracleResult oracle_evaluate(const MultitaskKernelSet& kernels, std::span<const double> alpha,
                             std::span<const double> theta, const SolverConfig& config);

}  // namespace mtmkl
