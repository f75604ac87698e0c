#include <cmath>
#include <numeric>

#include "popa/classify.hpp"
#include "popa/error.hpp"

namespace popa {

namespace {

// Pegasos on one label pair. The bias is an extra constant feature of value 1
// and is regularized along with the weights.
LinearSeparator train_pair(const Dataset& data, const EncodedLabels& enc, std::uint32_t pos,
                           std::uint32_t neg, const SvmParams& params, std::uint64_t seed) {
  const std::size_t dim = data.feature_dim;
  std::vector<std::uint32_t> members;
  for (std::uint32_t i = 0; i < enc.codes.size(); ++i) {
    if (enc.codes[i] == pos || enc.codes[i] == neg) members.push_back(i);
  }

  std::vector<double> w(dim + 1, 0.0);
  const double lambda = params.lambda;
  const double radius2 = 1.0 / lambda;
  Rng rng(seed);
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span(members));
    for (std::uint32_t i : members) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double y = enc.codes[i] == pos ? 1.0 : -1.0;
      auto x = data.row(i);
      double score = w[dim];
      for (std::size_t j = 0; j < dim; ++j) score += w[j] * x[j];

      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      if (y * score < 1.0) {
        for (std::size_t j = 0; j < dim; ++j) w[j] += eta * y * x[j];
        w[dim] += eta * y;
      }
      double norm2 = 0.0;
      for (double v : w) norm2 += v * v;
      if (norm2 > radius2) {
        const double scale = std::sqrt(radius2 / norm2);
        for (double& v : w) v *= scale;
      }
    }
  }

  LinearSeparator sep;
  sep.positive = pos;
  sep.negative = neg;
  sep.bias = w[dim];
  w.pop_back();
  sep.weights = std::move(w);
  return sep;
}

}  // namespace

TrainedModel train_svm_ovo(const Dataset& data, const SvmParams& params, std::uint64_t seed,
                           Execution exec) {
  if (!(params.lambda > 0.0) || params.epochs == 0) {
    throw Error(ErrorCode::InvalidArgument, "svm lambda and epochs must be positive");
  }
  const EncodedLabels enc = encode_labels(data);
  const std::size_t n_labels = enc.names.size();
  if (n_labels < 2) throw Error(ErrorCode::SingleClass, "one-vs-one needs at least two labels");

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t a = 0; a < n_labels; ++a) {
    for (std::uint32_t b = a + 1; b < n_labels; ++b) pairs.emplace_back(a, b);
  }

  std::vector<LinearSeparator> separators(pairs.size());
  const auto n_pairs = static_cast<std::int64_t>(pairs.size());
  auto fit = [&](std::int64_t p) {
    separators[p] = train_pair(data, enc, pairs[p].first, pairs[p].second, params,
                               derive_seed(seed, static_cast<std::uint64_t>(p)));
  };
  if (exec == Execution::Serial) {
    for (std::int64_t p = 0; p < n_pairs; ++p) fit(p);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t p = 0; p < n_pairs; ++p) fit(p);
  }

  TrainedModel model;
  model.labels = enc.names;
  model.feature_dim = data.feature_dim;
  model.seed = seed;
  model.payload = SvmPayload{params, std::move(separators)};
  return model;
}

}  // namespace popa
