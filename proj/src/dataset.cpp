#include <algorithm>

#include "popa/classify.hpp"
#include "popa/error.hpp"

namespace popa {

void Dataset::add(std::span<const double> x, std::string label) {
  if (feature_dim == 0 && labels.empty()) feature_dim = x.size();
  if (x.size() != feature_dim) {
    throw Error(ErrorCode::DimensionMismatch, "instance has " + std::to_string(x.size()) +
                                                  " features, dataset has " +
                                                  std::to_string(feature_dim));
  }
  values.insert(values.end(), x.begin(), x.end());
  labels.push_back(std::move(label));
}

void Dataset::append(const Dataset& other) {
  if (other.empty()) return;
  if (empty() && feature_dim == 0) feature_dim = other.feature_dim;
  if (other.feature_dim != feature_dim) {
    throw Error(ErrorCode::DimensionMismatch, "cannot append datasets of different width");
  }
  values.insert(values.end(), other.values.begin(), other.values.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(feature_dim);
  out.values.reserve(indices.size() * feature_dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::vector<std::string> Dataset::label_set() const {
  std::vector<std::string> names = labels;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

EncodedLabels encode_labels(const Dataset& data) {
  EncodedLabels enc;
  enc.names = data.label_set();
  enc.codes.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    enc.codes[i] = static_cast<std::uint32_t>(
        std::lower_bound(enc.names.begin(), enc.names.end(), data.labels[i]) - enc.names.begin());
  }
  return enc;
}

}  // namespace popa
