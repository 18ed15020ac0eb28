#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtmkl/dataset.hpp"
#include "mtmkl/feature_map.hpp"
#include "mtmkl/matrix_io.hpp"
#include "mtmkl/solver.hpp"

namespace mtmkl {

/// Everything needed to score new inputs: f_t(x) = sum_m <w_mt, phi_m(x)>.
struct Model {
  double p = 2.0;
  double C = 1.0;
  std::size_t num_tasks = 0;
  std::vector<double> theta;
  std::vector<std::size_t> kernel_views;
  std::vector<std::string> kernel_labels;
  std::vector<FeatureMap> maps;
  /// Per kernel (dim x T).
  std::vector<Matrix> weights;
};

Model make_model(const ModelState& state, const Problem& problem, const SolverConfig& config,
                 std::vector<FeatureMap> maps);

/// Score of already mapped views (one FeatureVector per view) for `task`.
double predict(const Model& model, const std::vector<FeatureVector>& views, std::size_t task);
/// Maps raw cells with the model's feature maps, then scores.
double predict(const Model& model, const std::vector<RawInput>& raw, std::size_t task);
double predict(const ModelState& state, const Problem& problem, std::size_t i);
/// Scores for every example of `data`, each with its own task.
std::vector<double> predict_dataset(const Model& model, const MultiTaskDataset& data);

/// Text model file, format "mtmkl-model 1":
///   header, p, C, tasks, kernels, theta (17 significant digits), one line per
///   feature map, one line per kernel (view + label), then one line per
///   (kernel, task) with the non-zero weights as index:value pairs.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

}  // namespace mtmkl
