#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtmkl/dataset.hpp"
#include "mtmkl/matrix_io.hpp"
#include "mtmkl/task_similarity.hpp"

namespace mtmkl {

/// Hierarchical sign-flip benchmark: a mean-difference vector mutated down a
/// complete binary tree, one Gaussian two-class problem per leaf.
struct SyntheticSpec {
  std::size_t dim = 100;
  double sigma = 20.0;
  std::size_t flips = 5;
  /// 2^depth tasks.
  unsigned depth = 5;
  std::size_t n_train_per_class = 10;
  std::size_t n_test_per_class = 1000;
  std::uint64_t seed = 1;

  /// Throws InfeasibleConfig unless 1 <= flips <= dim, depth >= 1 and
  /// sigma > 0.
  void validate() const;
};

struct SyntheticData {
  MultiTaskDataset train;
  MultiTaskDataset test;
  /// mu_d of every task (leaf order).
  std::vector<std::vector<double>> mu;
  /// <mu_s, mu_t>.
  Matrix true_similarity;
  TaskTree tree;
};

/// Deterministic in the spec; every tree edge and every task draw from their
/// own RNG substream.
SyntheticData generate(const SyntheticSpec& spec);

/// The complete binary tree whose leaves are the generated tasks.
TaskTree similarity_to_tree_clusters(unsigned depth);

/// Mean vector of every tree node, root = all ones.
std::vector<std::vector<double>> mutate_means(const SyntheticSpec& spec, const TaskTree& tree);

/// Parent-index list on one line.
void write_tree(std::ostream& out, const TaskTree& tree);
TaskTree read_tree_file(const std::string& path);

/// Uniform random strings over `alphabet`.
std::vector<std::string> random_sequences(std::size_t count, std::size_t length, std::uint64_t seed,
                                          const std::string& alphabet = "ACGT");

}  // namespace mtmkl
