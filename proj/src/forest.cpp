#include <algorithm>
#include <cmath>
#include <numeric>

#include "popa/classify.hpp"
#include "popa/error.hpp"

namespace popa {

double gini(const LabelCounts& counts) {
  std::size_t total = 0;
  for (const auto& [label, c] : counts) total += c;
  if (total == 0) throw Error(ErrorCode::EmptyCounts, "gini of an empty node");
  double sum_sq = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
  return derive_seed(forest_seed, static_cast<std::uint64_t>(tree_index));
}

namespace {

using i128 = __int128;

// Column-wise ranks of every feature value among that feature's distinct
// values. Built once per training call and shared read-only by all trees.
struct RankedData {
  std::size_t dim = 0;
  std::size_t n = 0;
  std::size_t n_labels = 0;
  std::vector<std::vector<std::uint32_t>> rank;  // [feature][instance]
  std::vector<std::vector<double>> distinct;     // [feature][rank]
  std::vector<std::uint32_t> y;

  RankedData(const Dataset& data, const EncodedLabels& enc)
      : dim(data.feature_dim), n(data.size()), n_labels(enc.names.size()), y(enc.codes) {
    rank.resize(dim);
    distinct.resize(dim);
    std::vector<std::uint32_t> order(n);
    for (std::size_t f = 0; f < dim; ++f) {
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return data.values[a * dim + f] < data.values[b * dim + f];
      });
      auto& r = rank[f];
      auto& d = distinct[f];
      r.resize(n);
      for (std::uint32_t i : order) {
        const double v = data.values[i * dim + f];
        if (d.empty() || d.back() != v) d.push_back(v);
        r[i] = static_cast<std::uint32_t>(d.size() - 1);
      }
    }
  }
};

// Weighted Gini score of a split, sum_L(l_c^2)/n_L + sum_R(r_c^2)/n_R, kept
// as an exact fraction. Larger is better; it differs from the impurity
// decrease only by terms that are constant within a node.
struct SplitScore {
  i128 num = 0;
  i128 den = 1;
};

bool better(const SplitScore& a, const SplitScore& b) { return a.num * b.den > b.num * a.den; }
bool equal(const SplitScore& a, const SplitScore& b) { return a.num * b.den == b.num * a.den; }

struct Candidate {
  std::size_t feature = 0;
  std::uint32_t left_rank = 0;  // instances with rank <= left_rank go left
  double threshold = 0.0;
  SplitScore score;
  std::int64_t n_left = 0;
  std::int64_t n_right = 0;
};

class SplitFinder {
 public:
  SplitFinder(const RankedData& data, std::span<const std::uint32_t> weight)
      : data_(data), weight_(weight), left_(data.n_labels), right_(data.n_labels) {}

  // Best split of `node` over `features`; instances are indices into data.
  std::optional<Candidate> find(std::span<const std::uint32_t> node,
                                std::span<const std::size_t> features,
                                std::span<const std::int64_t> class_counts,
                                std::int64_t total, std::size_t min_leaf) {
    std::optional<Candidate> best;
    for (std::size_t f : features) {
      scan_feature(node, f, class_counts, total, static_cast<std::int64_t>(min_leaf), best);
    }
    return best;
  }

 private:
  void sort_by_rank(std::span<const std::uint32_t> node, std::size_t f) {
    const auto& rank = data_.rank[f];
    const std::size_t n_distinct = data_.distinct[f].size();
    sorted_.resize(node.size());
    if (n_distinct < 8 * node.size()) {
      bucket_.assign(n_distinct + 1, 0);
      for (std::uint32_t i : node) ++bucket_[rank[i] + 1];
      for (std::size_t r = 1; r <= n_distinct; ++r) bucket_[r] += bucket_[r - 1];
      for (std::uint32_t i : node) sorted_[bucket_[rank[i]]++] = i;
    } else {
      keys_.resize(node.size());
      for (std::size_t p = 0; p < node.size(); ++p) {
        keys_[p] = (static_cast<std::uint64_t>(rank[node[p]]) << 32) | node[p];
      }
      std::sort(keys_.begin(), keys_.end());
      for (std::size_t p = 0; p < node.size(); ++p) {
        sorted_[p] = static_cast<std::uint32_t>(keys_[p] & 0xFFFFFFFFu);
      }
    }
  }

  void scan_feature(std::span<const std::uint32_t> node, std::size_t f,
                    std::span<const std::int64_t> class_counts, std::int64_t total,
                    std::int64_t min_leaf, std::optional<Candidate>& best) {
    const auto& rank = data_.rank[f];
    if (node.empty()) return;
    sort_by_rank(node, f);
    if (rank[sorted_.front()] == rank[sorted_.back()]) return;

    std::fill(left_.begin(), left_.end(), 0);
    std::copy(class_counts.begin(), class_counts.end(), right_.begin());
    i128 sum_left = 0;
    i128 sum_right = 0;
    for (std::int64_t c : class_counts) sum_right += static_cast<i128>(c) * c;
    std::int64_t n_left = 0;

    for (std::size_t p = 0; p + 1 < sorted_.size(); ++p) {
      const std::uint32_t i = sorted_[p];
      const std::uint32_t c = data_.y[i];
      const std::int64_t w = weight_[i];
      sum_left += static_cast<i128>(2 * left_[c] + w) * w;
      sum_right += static_cast<i128>(w - 2 * right_[c]) * w;
      left_[c] += w;
      right_[c] -= w;
      n_left += w;

      const std::uint32_t r = rank[i];
      const std::uint32_t r_next = rank[sorted_[p + 1]];
      if (r == r_next) continue;
      const std::int64_t n_right = total - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;

      SplitScore score{sum_left * n_right + sum_right * n_left,
                       static_cast<i128>(n_left) * n_right};
      const bool take = !best || better(score, best->score) ||
                        (equal(score, best->score) && f < best->feature);
      if (take) {
        const double a = data_.distinct[f][r];
        const double b = data_.distinct[f][r_next];
        best = Candidate{f, r, (a + b) / 2.0, score, n_left, n_right};
      }
    }
  }

  const RankedData& data_;
  std::span<const std::uint32_t> weight_;
  std::vector<std::int64_t> left_;
  std::vector<std::int64_t> right_;
  std::vector<std::uint32_t> sorted_;
  std::vector<std::uint32_t> bucket_;
  std::vector<std::uint64_t> keys_;
};

class TreeBuilder {
 public:
  TreeBuilder(const RankedData& data, std::span<const std::uint32_t> weight,
              const TreeParams& params, Rng& rng)
      : data_(data), weight_(weight), params_(params), rng_(rng), finder_(data, weight) {
    features_.resize(data.dim);
  }

  DecisionTree build(std::vector<std::uint32_t> instances) {
    instances_ = std::move(instances);
    build_node(0, instances_.size(), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t build_node(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto self = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    std::vector<std::int64_t> counts(data_.n_labels, 0);
    std::int64_t total = 0;
    for (std::size_t p = begin; p < end; ++p) {
      const std::uint32_t i = instances_[p];
      counts[data_.y[i]] += weight_[i];
      total += weight_[i];
    }
    const auto distinct_labels = std::count_if(counts.begin(), counts.end(),
                                               [](std::int64_t c) { return c > 0; });

    std::optional<Candidate> split;
    const auto min_leaf = static_cast<std::int64_t>(params_.min_leaf);
    if (distinct_labels > 1 && depth < params_.max_depth && total >= 2 * min_leaf) {
      // Fresh feature draw per node, without replacement.
      std::iota(features_.begin(), features_.end(), std::size_t{0});
      const std::size_t mtry = std::min(params_.mtry, data_.dim);
      for (std::size_t m = 0; m < mtry; ++m) {
        std::swap(features_[m], features_[m + rng_.below(data_.dim - m)]);
      }
      split = finder_.find(std::span(instances_).subspan(begin, end - begin),
                           std::span(features_).first(mtry), counts, total, params_.min_leaf);
    }

    if (!split) {
      TreeNode& leaf = tree_.nodes[self];
      std::int64_t best = -1;
      for (std::uint32_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) continue;
        leaf.counts.emplace_back(c, static_cast<std::uint32_t>(counts[c]));
        if (counts[c] > best) {
          best = counts[c];
          leaf.majority = c;
        }
      }
      return self;
    }

    const auto& rank = data_.rank[split->feature];
    const std::uint32_t cut = split->left_rank;
    auto mid = std::partition(instances_.begin() + begin, instances_.begin() + end,
                              [&](std::uint32_t i) { return rank[i] <= cut; });
    const auto middle = static_cast<std::size_t>(mid - instances_.begin());

    const std::uint32_t left = build_node(begin, middle, depth + 1);
    const std::uint32_t right = build_node(middle, end, depth + 1);
    TreeNode& node = tree_.nodes[self];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return self;
  }

  const RankedData& data_;
  std::span<const std::uint32_t> weight_;
  TreeParams params_;
  Rng& rng_;
  SplitFinder finder_;
  std::vector<std::size_t> features_;
  std::vector<std::uint32_t> instances_;
  DecisionTree tree_;
};

std::size_t default_mtry(std::size_t dim) {
  auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(dim, 1));
}

}  // namespace

std::optional<Split> best_split(const Dataset& data,
                                std::span<const std::size_t> candidate_features) {
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "best_split on empty data");
  for (std::size_t f : candidate_features) {
    if (f >= data.feature_dim) throw Error(ErrorCode::DimensionMismatch, "feature out of range");
  }
  const EncodedLabels enc = encode_labels(data);
  if (enc.names.size() < 2) return std::nullopt;

  const RankedData ranked(data, enc);
  std::vector<std::uint32_t> weight(data.size(), 1);
  std::vector<std::uint32_t> node(data.size());
  std::iota(node.begin(), node.end(), 0u);
  std::vector<std::int64_t> counts(enc.names.size(), 0);
  for (std::uint32_t c : enc.codes) ++counts[c];
  const auto total = static_cast<std::int64_t>(data.size());

  SplitFinder finder(ranked, weight);
  auto found = finder.find(node, candidate_features, counts, total, 1);
  if (!found) return std::nullopt;

  double parent = 0.0;
  for (std::int64_t c : counts) parent += static_cast<double>(c) * static_cast<double>(c);
  const double n = static_cast<double>(total);
  const double children = static_cast<double>(found->score.num) / static_cast<double>(found->score.den);
  return Split{found->feature, found->threshold, (children - parent / n) / n};
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->leaf()) {
    node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  // Preorder layout: recompute depths with an explicit stack.
  std::size_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0u, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].leaf()) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return deepest;
}

DecisionTree train_tree(const Dataset& data, const TreeParams& params, Rng& rng) {
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "train_tree on empty data");
  if (params.mtry == 0 || params.mtry > data.feature_dim) {
    throw Error(ErrorCode::InvalidArgument, "mtry must be in [1, feature_dim]");
  }
  if (params.max_depth == 0 || params.min_leaf == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_depth and min_leaf must be positive");
  }
  const EncodedLabels enc = encode_labels(data);
  const RankedData ranked(data, enc);
  std::vector<std::uint32_t> weight(data.size(), 1);
  std::vector<std::uint32_t> instances(data.size());
  std::iota(instances.begin(), instances.end(), 0u);
  TreeBuilder builder(ranked, weight, params, rng);
  return builder.build(std::move(instances));
}

TrainedModel train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed,
                          Execution exec) {
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "train_forest on empty data");
  if (params.n_trees == 0 || params.max_depth == 0 || params.min_leaf == 0) {
    throw Error(ErrorCode::InvalidArgument, "forest parameters must be positive");
  }
  ForestParams resolved = params;
  if (resolved.mtry == 0) resolved.mtry = default_mtry(data.feature_dim);
  if (resolved.mtry > data.feature_dim) {
    throw Error(ErrorCode::InvalidArgument, "mtry exceeds feature_dim");
  }
  const EncodedLabels enc = encode_labels(data);
  const RankedData ranked(data, enc);
  const TreeParams tree_params{resolved.max_depth, resolved.min_leaf, resolved.mtry};

  std::vector<DecisionTree> trees(resolved.n_trees);
  auto grow = [&](std::size_t t) {
    Rng rng(tree_seed(seed, t));
    // Bootstrap of n draws, kept as multiplicities.
    std::vector<std::uint32_t> weight(ranked.n, 0);
    for (std::size_t d = 0; d < ranked.n; ++d) ++weight[rng.below(ranked.n)];
    std::vector<std::uint32_t> instances;
    instances.reserve(ranked.n);
    for (std::uint32_t i = 0; i < ranked.n; ++i) {
      if (weight[i] > 0) instances.push_back(i);
    }
    TreeBuilder builder(ranked, weight, tree_params, rng);
    trees[t] = builder.build(std::move(instances));
  };

  const auto n_trees = static_cast<std::int64_t>(resolved.n_trees);
  if (exec == Execution::Serial) {
    for (std::int64_t t = 0; t < n_trees; ++t) grow(static_cast<std::size_t>(t));
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t t = 0; t < n_trees; ++t) grow(static_cast<std::size_t>(t));
  }

  TrainedModel model;
  model.labels = enc.names;
  model.feature_dim = data.feature_dim;
  model.seed = seed;
  model.payload = ForestPayload{resolved, std::move(trees)};
  return model;
}

}  // namespace popa
