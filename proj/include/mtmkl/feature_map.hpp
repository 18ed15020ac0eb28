#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mtmkl/feature_vector.hpp"

namespace mtmkl {

/// One raw cell of a dataset line: numeric (index, value) pairs or a string.
using NumericInput = std::vector<std::pair<FeatureIndex, double>>;
using RawInput = std::variant<NumericInput, std::string>;

enum class FeatureMapKind { kPassthrough, kHashedSpectrum };

/// Explicit feature map phi_m for one view.
///
/// passthrough: numeric cells are used as given. With `dim > 0` the output is a
/// dense array of that dimension, otherwise the sparse pairs are kept.
///
/// hashed-spectrum: counts every length-k substring, bucketed by
/// FNV-1a-64(kmer) & (2^bits - 1). Collisions are part of the map.
struct FeatureMap {
  FeatureMapKind kind = FeatureMapKind::kPassthrough;
  std::size_t dim = 0;
  unsigned k = 3;
  unsigned bits = 16;
  std::string alphabet = "ACGT";

  static FeatureMap passthrough(std::size_t dim = 0);
  static FeatureMap hashed_spectrum(unsigned k, unsigned bits, std::string alphabet = "ACGT");

  /// Feature-space dimension, or 0 when it is inferred from data.
  std::size_t dimension() const;

  FeatureVector apply(const RawInput& input) const;

  /// Single-line descriptor, e.g. "passthrough dim=100" or
  /// "spectrum k=3 bits=16 alphabet=ACGT". parse(describe()) == *this.
  std::string describe() const;
  static FeatureMap parse(std::string_view descriptor);

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

FeatureVector feature_map_apply(const FeatureMap& map, const RawInput& input);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace mtmkl
