#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mtmkl/feature_map.hpp"
#include "mtmkl/feature_vector.hpp"

namespace mtmkl {

/// One line of a dataset file before feature maps are applied.
struct RawExample {
  int label = 1;
  std::size_t task = 0;
  std::vector<RawInput> cells;

  friend bool operator==(const RawExample&, const RawExample&) = default;
};

/// Text form of a multi-task dataset:
///
///   <label> <task_id> | <view0> | <view1> | ...
///
/// where a view cell is whitespace-separated `index:value` pairs (zero-based
/// indices) or a single raw string token. '#' starts a comment. Every example
/// must have the same number of view cells.
struct RawDataset {
  std::vector<RawExample> examples;

  std::size_t num_views() const { return examples.empty() ? 0 : examples.front().cells.size(); }

  friend bool operator==(const RawDataset&, const RawDataset&) = default;
};

RawDataset read_raw_dataset(std::istream& in);
RawDataset read_raw_dataset_file(const std::string& path);
void write_raw_dataset(std::ostream& out, const RawDataset& data);

/// All examples of one view, mapped into a feature space of dimension `dim`.
struct View {
  std::size_t dim = 0;
  std::vector<FeatureVector> rows;
};

/// Labelled examples with task assignment tau(i) and M feature views.
/// Immutable after construction.
class MultiTaskDataset {
 public:
  MultiTaskDataset() = default;
  /// Validates labels in {-1,+1}, task ids < num_tasks, equal row counts and
  /// row extents <= view dim. num_tasks = 0 infers max(task)+1.
  MultiTaskDataset(std::vector<int> labels, std::vector<std::size_t> task_of,
                   std::size_t num_tasks, std::vector<View> views);

  std::size_t size() const { return labels_.size(); }
  std::size_t num_tasks() const { return num_tasks_; }
  std::size_t num_views() const { return views_.size(); }

  int label(std::size_t i) const { return labels_[i]; }
  std::size_t task(std::size_t i) const { return task_of_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::size_t>& tasks() const { return task_of_; }
  const View& view(std::size_t m) const { return views_[m]; }
  const FeatureVector& features(std::size_t m, std::size_t i) const { return views_[m].rows[i]; }

  /// I_t: indices of examples belonging to task t, ascending.
  const std::vector<std::size_t>& task_indices(std::size_t t) const { return index_sets_[t]; }

  /// Examples at `indices` (in that order); keeps T and view dimensions.
  MultiTaskDataset subset(std::span<const std::size_t> indices) const;
  /// Same examples in a single task (for the Union baseline).
  MultiTaskDataset collapse_tasks() const;
  /// Only task t, renumbered as task 0 of 1.
  MultiTaskDataset single_task(std::size_t t) const;

 private:
  std::vector<int> labels_;
  std::vector<std::size_t> task_of_;
  std::size_t num_tasks_ = 0;
  std::vector<View> views_;
  std::vector<std::vector<std::size_t>> index_sets_;
};

/// Applies maps[m] to cell m of every example. View dims come from the maps,
/// or from the largest observed extent when a map leaves it open.
MultiTaskDataset featurize(const RawDataset& raw, std::span<const FeatureMap> maps,
                           std::size_t num_tasks = 0);

/// Numeric views of `data` as a RawDataset (stored entries written verbatim).
RawDataset to_raw(const MultiTaskDataset& data);

}  // namespace mtmkl
