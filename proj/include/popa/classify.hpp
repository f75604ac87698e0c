#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "popa/kernels.hpp"
#include "popa/rng.hpp"

namespace popa {

/// Labelled instances, row-major. Labels are opaque strings; every model
/// orders them by plain std::string comparison, which is also the tie-break
/// order.
struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<double> values;
  std::vector<std::string> labels;

  Dataset() = default;
  explicit Dataset(std::size_t dim) : feature_dim(dim) {}

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * feature_dim, feature_dim};
  }

  void add(std::span<const double> x, std::string label);
  void append(const Dataset& other);
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Sorted distinct labels.
  std::vector<std::string> label_set() const;
};

/// Sorted label table plus each instance's position in it.
struct EncodedLabels {
  std::vector<std::string> names;
  std::vector<std::uint32_t> codes;
};
EncodedLabels encode_labels(const Dataset& data);

using LabelCounts = std::map<std::string, std::size_t>;

/// 1 - sum (c_i / n)^2. Throws EmptyCounts when the total is zero.
double gini(const LabelCounts& counts);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;  // x <= threshold goes left
  double impurity_decrease = 0.0;
};

/// Exhaustive CART split over the candidate features, thresholds at midpoints
/// of consecutive distinct values. Candidates are compared exactly (integer
/// arithmetic on the class counts); ties go to the lower feature index, then
/// the lower threshold. nullopt when the node is pure or nothing separates.
std::optional<Split> best_split(const Dataset& data,
                                std::span<const std::size_t> candidate_features);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  // Leaf only: (label index, count) sorted by label index, and the majority
  // label with ties going to the smaller index.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
  std::uint32_t majority = 0;

  bool leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Preorder node list, root at 0. Label indices refer to the sorted label set
/// of the training data.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct TreeParams {
  std::size_t max_depth = 16;
  std::size_t min_leaf = 1;
  std::size_t mtry = 1;
};

DecisionTree train_tree(const Dataset& data, const TreeParams& params, Rng& rng);

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t mtry = 0;  // 0 = ceil(sqrt(feature_dim))
  std::size_t max_depth = 16;
  std::size_t min_leaf = 1;

  bool operator==(const ForestParams&) const = default;
};

struct SvmParams {
  double lambda = 1e-3;
  std::size_t epochs = 50;

  bool operator==(const SvmParams&) const = default;
};

enum class Algorithm { Forest, KNN, SVM };

/// Algorithm plus its hyperparameters; the CLI names are rf, knn1, knn3,
/// knn5 and svm.
struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::Forest;
  ForestParams forest;
  std::size_t k = 1;
  SvmParams svm;

  std::string name() const;
  static AlgorithmSpec from_name(std::string_view name);
  /// key=value hyperparameter lines (no trailing newline per entry).
  std::vector<std::pair<std::string, std::string>> hyperparams() const;

  bool operator==(const AlgorithmSpec&) const = default;
};

struct ForestPayload {
  ForestParams params;
  std::vector<DecisionTree> trees;
  bool operator==(const ForestPayload&) const = default;
};

struct KnnPayload {
  std::size_t k = 1;
  std::vector<double> points;
  std::vector<std::uint32_t> point_labels;

  bool operator==(const KnnPayload&) const = default;
};

struct LinearSeparator {
  std::uint32_t positive = 0;  // label index voted for when w.x + b >= 0
  std::uint32_t negative = 0;
  std::vector<double> weights;
  double bias = 0.0;
  bool operator==(const LinearSeparator&) const = default;
};

struct SvmPayload {
  SvmParams params;
  std::vector<LinearSeparator> separators;
  bool operator==(const SvmPayload&) const = default;
};

struct TrainedModel {
  std::vector<std::string> labels;  // sorted
  std::size_t feature_dim = 0;
  std::uint64_t seed = 0;
  std::variant<ForestPayload, KnnPayload, SvmPayload> payload;

  Algorithm algorithm() const { return static_cast<Algorithm>(payload.index()); }
  bool operator==(const TrainedModel&) const = default;
};

TrainedModel train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed,
                          Execution exec = Execution::Parallel);
TrainedModel train_knn(const Dataset& data, std::size_t k);
TrainedModel train_svm_ovo(const Dataset& data, const SvmParams& params, std::uint64_t seed,
                           Execution exec = Execution::Parallel);
TrainedModel train(const Dataset& data, const AlgorithmSpec& spec, std::uint64_t seed,
                   Execution exec = Execution::Parallel);

/// Per-tree seed: derive_seed(seed, tree_index), i.e. splitmix64 of
/// seed ^ splitmix64(tree_index).
std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);

struct Prediction {
  std::string label;
  std::map<std::string, double> scores;
};

Prediction predict(const TrainedModel& model, std::span<const double> x);

/// Index into model.labels of the predicted label.
std::uint32_t predict_index(const TrainedModel& model, std::span<const double> x);

/// One predicted label index per row of `queries`.
std::vector<std::uint32_t> predict_batch(const TrainedModel& model, const Dataset& queries,
                                         Execution exec = Execution::Parallel);

// `#popa-model v1` text format. Doubles use the shortest round-trip form, so
// the bytes depend only on the model.
inline constexpr std::string_view kModelMagic = "#popa-model v1";

void write_model(std::ostream& out, const TrainedModel& model);
std::string write_model(const TrainedModel& model);
TrainedModel read_model(std::istream& in);
TrainedModel read_model(std::string_view text);

}  // namespace popa
