#include "mtmkl/feature_vector.hpp"

#include <algorithm>

namespace mtmkl {

FeatureVector FeatureVector::dense(std::vector<double> values) {
  FeatureVector v;
  v.dense_ = true;
  v.values_ = std::move(values);
  return v;
}

FeatureVector FeatureVector::sparse(std::vector<std::pair<FeatureIndex, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  FeatureVector v;
  v.indices_.reserve(entries.size());
  v.values_.reserve(entries.size());
  for (const auto& [index, value] : entries) {
    if (!v.indices_.empty() && v.indices_.back() == index) {
      v.values_.back() += value;
    } else {
      v.indices_.push_back(index);
      v.values_.push_back(value);
    }
  }
  return v;
}

std::size_t FeatureVector::extent() const {
  if (dense_) return values_.size();
  return indices_.empty() ? 0 : static_cast<std::size_t>(indices_.back()) + 1;
}

double FeatureVector::dot(std::span<const double> w) const {
  double s = 0.0;
  if (dense_) {
    const std::size_t n = std::min(values_.size(), w.size());
    for (std::size_t k = 0; k < n; ++k) s += values_[k] * w[k];
  } else {
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if (indices_[k] >= w.size()) break;
      s += values_[k] * w[indices_[k]];
    }
  }
  return s;
}

void FeatureVector::add_to(std::span<double> w, double scale) const {
  if (dense_) {
    const std::size_t n = std::min(values_.size(), w.size());
    for (std::size_t k = 0; k < n; ++k) w[k] += scale * values_[k];
  } else {
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if (indices_[k] >= w.size()) break;
      w[indices_[k]] += scale * values_[k];
    }
  }
}

double FeatureVector::squared_norm() const {
  double s = 0.0;
  for (double x : values_) s += x * x;
  return s;
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  if (a.dense_) return b.dot(a.values_);
  if (b.dense_) return a.dot(b.values_);
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices_.size() && j < b.indices_.size()) {
    if (a.indices_[i] == b.indices_[j]) {
      s += a.values_[i++] * b.values_[j++];
    } else if (a.indices_[i] < b.indices_[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

}  // namespace mtmkl
