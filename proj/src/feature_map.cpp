#include "mtmkl/feature_map.hpp"

#include <sstream>
#include <unordered_map>

#include "mtmkl/error.hpp"

namespace mtmkl {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

FeatureMap FeatureMap::passthrough(std::size_t dim) {
  FeatureMap m;
  m.kind = FeatureMapKind::kPassthrough;
  m.dim = dim;
  return m;
}

FeatureMap FeatureMap::hashed_spectrum(unsigned k, unsigned bits, std::string alphabet) {
  if (k == 0) throw InfeasibleConfig("spectrum map needs k >= 1");
  if (bits == 0 || bits > 30) throw InfeasibleConfig("spectrum map needs 1 <= bits <= 30");
  if (alphabet.empty()) throw InfeasibleConfig("spectrum map needs a non-empty alphabet");
  FeatureMap m;
  m.kind = FeatureMapKind::kHashedSpectrum;
  m.k = k;
  m.bits = bits;
  m.alphabet = std::move(alphabet);
  return m;
}

std::size_t FeatureMap::dimension() const {
  return kind == FeatureMapKind::kHashedSpectrum ? (std::size_t{1} << bits) : dim;
}

FeatureVector FeatureMap::apply(const RawInput& input) const {
  if (kind == FeatureMapKind::kPassthrough) {
    const auto* numeric = std::get_if<NumericInput>(&input);
    if (numeric == nullptr) throw ParseError("passthrough view got a string cell");
    if (dim == 0) return FeatureVector::sparse(*numeric);
    std::vector<double> values(dim, 0.0);
    for (const auto& [index, value] : *numeric) {
      if (index >= dim) {
        throw ParseError("feature index " + std::to_string(index) + " outside dense dimension " +
                         std::to_string(dim));
      }
      values[index] += value;
    }
    return FeatureVector::dense(std::move(values));
  }

  const auto* text = std::get_if<std::string>(&input);
  if (text == nullptr) {
    // an empty cell is read as numeric; it is the empty string here
    if (std::get<NumericInput>(input).empty()) return FeatureVector::sparse({});
    throw ParseError("spectrum view got a numeric cell");
  }
  for (std::size_t pos = 0; pos < text->size(); ++pos) {
    if (alphabet.find((*text)[pos]) == std::string::npos) {
      throw ParseError("symbol '" + std::string(1, (*text)[pos]) + "' at position " +
                       std::to_string(pos) + " is not in alphabet " + alphabet);
    }
  }
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::unordered_map<FeatureIndex, double> counts;
  const std::string_view view(*text);
  for (std::size_t pos = 0; pos + k <= view.size(); ++pos) {
    counts[static_cast<FeatureIndex>(fnv1a64(view.substr(pos, k)) & mask)] += 1.0;
  }
  return FeatureVector::sparse(NumericInput(counts.begin(), counts.end()));
}

std::string FeatureMap::describe() const {
  std::ostringstream out;
  if (kind == FeatureMapKind::kPassthrough) {
    out << "passthrough dim=" << dim;
  } else {
    out << "spectrum k=" << k << " bits=" << bits << " alphabet=" << alphabet;
  }
  return out.str();
}

FeatureMap FeatureMap::parse(std::string_view descriptor) {
  std::istringstream in{std::string(descriptor)};
  std::string kind_name;
  in >> kind_name;
  FeatureMap map;
  if (kind_name == "passthrough" || kind_name == "dense" || kind_name == "sparse") {
    map.kind = FeatureMapKind::kPassthrough;
  } else if (kind_name == "spectrum") {
    map.kind = FeatureMapKind::kHashedSpectrum;
  } else {
    throw ParseError("unknown feature map '" + kind_name + "'");
  }
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("feature map field without '=': " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "dim") {
        map.dim = std::stoul(value);
      } else if (key == "k") {
        map.k = static_cast<unsigned>(std::stoul(value));
      } else if (key == "bits") {
        map.bits = static_cast<unsigned>(std::stoul(value));
      } else if (key == "alphabet") {
        map.alphabet = value;
      } else {
        throw ParseError("unknown feature map field '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad value in feature map field '" + field + "'");
    }
  }
  if (map.kind == FeatureMapKind::kHashedSpectrum) {
    return hashed_spectrum(map.k, map.bits, map.alphabet);
  }
  return map;
}

FeatureVector feature_map_apply(const FeatureMap& map, const RawInput& input) {
  return map.apply(input);
}

}  // namespace mtmkl
