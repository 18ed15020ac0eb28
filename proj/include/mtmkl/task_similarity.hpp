#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtmkl/matrix_io.hpp"

namespace mtmkl {

/// One task-coupling hypothesis: the regularizer-side matrix Q and the
/// kernel-side matrix Qinv (its inverse, or Moore-Penrose pseudo-inverse).
struct TaskSimilarity {
  Matrix Q;
  Matrix Qinv;
  std::size_t rank = 0;
  std::string label;

  std::size_t num_tasks() const { return static_cast<std::size_t>(Q.rows()); }
};

struct PseudoInverse {
  Matrix inverse;
  std::size_t rank = 0;
};

/// Relative eigenvalue cutoff used for rank decisions.
inline constexpr double kRankTolerance = 1e-10;

/// Spectral pseudo-inverse of a symmetric matrix: eigenvalues with
/// |s| <= kRankTolerance * max|s| are treated as zero.
PseudoInverse pseudo_inverse(const Matrix& symmetric);

/// Soft assignment of tasks to clusters (rows = clusters, cols = tasks).
struct ClusterSpec {
  Matrix assignments;
  double rho = 1.0;
  double lambda = 0.0;
};

/// Rooted tree given as a parent-index list (parent of the root is -1).
/// Leaves, ordered by node id, are the tasks 0..T-1; every inner node is one
/// cluster grouping its descendant leaves.
class TaskTree {
 public:
  explicit TaskTree(std::vector<long> parents);

  /// Complete binary tree with 2^depth leaves in heap order.
  static TaskTree complete_binary(unsigned depth);

  std::size_t num_nodes() const { return parents_.size(); }
  std::size_t num_tasks() const { return leaves_.size(); }
  const std::vector<long>& parents() const { return parents_; }
  const std::vector<std::size_t>& inner_nodes() const { return inner_; }
  const std::vector<std::size_t>& leaves() const { return leaves_; }
  const std::vector<std::size_t>& children(std::size_t node) const { return children_[node]; }
  /// Task ids of the leaves below `node`, ascending.
  std::vector<std::size_t> descendant_tasks(std::size_t node) const;
  /// Task id for a leaf node.
  std::size_t task_of_leaf(std::size_t node) const;
  std::size_t root() const { return root_; }

 private:
  std::vector<long> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> inner_;
  std::vector<std::size_t> leaves_;
  std::vector<long> leaf_task_;
  std::size_t root_ = 0;
};

/// How a hierarchy cluster becomes a (Q, Qinv) pair.
enum class HierarchyCoupling {
  /// Q = G^m, Qinv = pseudo-inverse of G^m (zero outside the cluster).
  kPseudoInverse,
  /// Q = I + G^m, Qinv = (I + G^m)^-1.
  kRidge,
};

TaskSimilarity q_identity(std::size_t tasks);
TaskSimilarity q_uniform(std::size_t tasks);
TaskSimilarity q_frustratingly_easy();
TaskSimilarity q_graph_laplacian(const Matrix& adjacency);
TaskSimilarity q_clustering(const ClusterSpec& spec, std::size_t tasks);
std::vector<TaskSimilarity> q_hierarchical(const TaskTree& tree, double rho,
                                           HierarchyCoupling coupling = HierarchyCoupling::kPseudoInverse);
std::vector<TaskSimilarity> q_smooth(const Matrix& similarity, const std::vector<double>& sigmas);

/// L = D - A.
Matrix graph_laplacian(const Matrix& adjacency);
/// Connected components of the graph with edges where A(s,t) > 0.
std::size_t connected_components(const Matrix& adjacency);
/// G_{s,t} = sum_m rho_m^t delta_st - rho_m^s rho_m^t / (rho + sum_r rho_m^r).
Matrix cluster_coupling(const Matrix& assignments, double rho);

/// Residuals of the TaskSimilarity invariants.
struct SimilarityCheck {
  double asymmetry = 0.0;        // max over Q and Qinv
  double min_qinv_eigen = 0.0;   // relative to spectral norm
  double penrose_residual = 0.0; // |Q Qinv - I| (full rank) or |Q Qinv Q - Q|
};
SimilarityCheck check_similarity(const TaskSimilarity& s);

/// Parses a task-structure config (see README) into M similarity pairs.
std::vector<TaskSimilarity> load_task_structure(const std::string& json_text);
std::vector<TaskSimilarity> load_task_structure_file(const std::string& path);

}  // namespace mtmkl
