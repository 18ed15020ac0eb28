#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mtmkl {

using FeatureIndex = std::uint32_t;

/// A single example in one view: either a contiguous dense array or sorted,
/// duplicate-free (index, value) pairs.
class FeatureVector {
 public:
  FeatureVector() = default;

  static FeatureVector dense(std::vector<double> values);
  /// Sorts by index and sums duplicated indices.
  static FeatureVector sparse(std::vector<std::pair<FeatureIndex, double>> entries);

  bool is_dense() const { return dense_; }
  /// Stored entries (dense: dimension).
  std::size_t stored() const { return values_.size(); }
  /// Smallest dimension able to hold every stored index.
  std::size_t extent() const;

  /// Index of the k-th stored entry.
  FeatureIndex index_at(std::size_t k) const {
    return dense_ ? static_cast<FeatureIndex>(k) : indices_[k];
  }
  double value_at(std::size_t k) const { return values_[k]; }

  /// <this, w>; entries beyond w.size() contribute zero.
  double dot(std::span<const double> w) const;
  /// w += scale * this; entries beyond w.size() are dropped.
  void add_to(std::span<double> w, double scale) const;
  double squared_norm() const;

  friend double dot(const FeatureVector& a, const FeatureVector& b);
  friend bool operator==(const FeatureVector& a, const FeatureVector& b) = default;

 private:
  bool dense_ = false;
  std::vector<FeatureIndex> indices_;
  std::vector<double> values_;
};

}  // namespace mtmkl
