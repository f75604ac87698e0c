#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "popa/classify.hpp"
#include "popa/error.hpp"
#include "text_util.hpp"

namespace popa {

std::string AlgorithmSpec::name() const {
  switch (algorithm) {
    case Algorithm::Forest: return "rf";
    case Algorithm::KNN: return "knn" + std::to_string(k);
    case Algorithm::SVM: return "svm";
  }
  return "?";
}

AlgorithmSpec AlgorithmSpec::from_name(std::string_view name) {
  AlgorithmSpec spec;
  if (name == "rf") return spec;
  if (name == "svm") {
    spec.algorithm = Algorithm::SVM;
    return spec;
  }
  if (name.starts_with("knn")) {
    auto k = text::parse_int<std::size_t>(name.substr(3));
    if (k && *k > 0) {
      spec.algorithm = Algorithm::KNN;
      spec.k = *k;
      return spec;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) +
                                              "' (expected rf, knn1, knn3, knn5 or svm)");
}

std::vector<std::pair<std::string, std::string>> AlgorithmSpec::hyperparams() const {
  switch (algorithm) {
    case Algorithm::Forest:
      return {{"n_trees", std::to_string(forest.n_trees)},
              {"mtry", std::to_string(forest.mtry)},
              {"max_depth", std::to_string(forest.max_depth)},
              {"min_leaf", std::to_string(forest.min_leaf)}};
    case Algorithm::KNN:
      return {{"k", std::to_string(k)}};
    case Algorithm::SVM:
      return {{"lambda", text::format_double(svm.lambda)}, {"epochs", std::to_string(svm.epochs)}};
  }
  return {};
}

TrainedModel train(const Dataset& data, const AlgorithmSpec& spec, std::uint64_t seed,
                   Execution exec) {
  switch (spec.algorithm) {
    case Algorithm::Forest: return train_forest(data, spec.forest, seed, exec);
    case Algorithm::KNN: {
      TrainedModel m = train_knn(data, spec.k);
      m.seed = seed;
      return m;
    }
    case Algorithm::SVM: return train_svm_ovo(data, spec.svm, seed, exec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

namespace {

std::uint32_t argmax_smallest(const std::vector<std::uint32_t>& votes) {
  // max_element returns the first maximum, i.e. the canonically smaller label.
  return static_cast<std::uint32_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

void check_dim(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.feature_dim) {
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(x.size()) +
                                                  " features, model expects " +
                                                  std::to_string(model.feature_dim));
  }
}

std::vector<std::uint32_t> knn_votes(const TrainedModel& model, const KnnPayload& knn,
                                     std::span<const Neighbor> neighbors) {
  std::vector<std::uint32_t> votes(model.labels.size(), 0);
  for (const Neighbor& nb : neighbors) ++votes[knn.point_labels[nb.index]];
  return votes;
}

std::vector<std::uint32_t> votes_for(const TrainedModel& model, std::span<const double> x) {
  std::vector<std::uint32_t> votes(model.labels.size(), 0);
  if (const auto* forest = std::get_if<ForestPayload>(&model.payload)) {
    for (const DecisionTree& tree : forest->trees) ++votes[tree.leaf_for(x).majority];
  } else if (const auto* knn = std::get_if<KnnPayload>(&model.payload)) {
    auto neighbors = knn_search_scan(knn->points, model.feature_dim, x, knn->k);
    return knn_votes(model, *knn, neighbors);
  } else {
    const auto& svm = std::get<SvmPayload>(model.payload);
    for (const LinearSeparator& sep : svm.separators) {
      double score = sep.bias;
      for (std::size_t j = 0; j < x.size(); ++j) score += sep.weights[j] * x[j];
      ++votes[score >= 0.0 ? sep.positive : sep.negative];
    }
  }
  return votes;
}

}  // namespace

std::uint32_t predict_index(const TrainedModel& model, std::span<const double> x) {
  check_dim(model, x);
  return argmax_smallest(votes_for(model, x));
}

Prediction predict(const TrainedModel& model, std::span<const double> x) {
  check_dim(model, x);
  const auto votes = votes_for(model, x);
  std::uint32_t total = 0;
  for (auto v : votes) total += v;
  Prediction p;
  p.label = model.labels[argmax_smallest(votes)];
  for (std::size_t c = 0; c < votes.size(); ++c) {
    p.scores[model.labels[c]] = total == 0 ? 0.0 : static_cast<double>(votes[c]) / total;
  }
  return p;
}

std::vector<std::uint32_t> predict_batch(const TrainedModel& model, const Dataset& queries,
                                         Execution exec) {
  if (!queries.empty() && queries.feature_dim != model.feature_dim) {
    throw Error(ErrorCode::DimensionMismatch, "query width differs from model");
  }
  const std::size_t m = queries.size();
  std::vector<std::uint32_t> out(m);
  if (const auto* knn = std::get_if<KnnPayload>(&model.payload)) {
    auto neighbors = knn_search_batch(knn->points, model.feature_dim,
                                      queries.values, knn->k, exec);
    for (std::size_t i = 0; i < m; ++i) out[i] = argmax_smallest(knn_votes(model, *knn, neighbors[i]));
    return out;
  }
  const auto count = static_cast<std::int64_t>(m);
  if (exec == Execution::Serial) {
    for (std::int64_t i = 0; i < count; ++i) out[i] = argmax_smallest(votes_for(model, queries.row(i)));
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) out[i] = argmax_smallest(votes_for(model, queries.row(i)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string_view tag(Algorithm a) {
  switch (a) {
    case Algorithm::Forest: return "forest";
    case Algorithm::KNN: return "knn";
    case Algorithm::SVM: return "svm";
  }
  return "?";
}

void write_vector(std::ostream& out, std::span<const double> v) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) out << ',';
    out << text::format_double(v[j]);
  }
}

}  // namespace

void write_model(std::ostream& out, const TrainedModel& model) {
  out << kModelMagic << '\n'
      << "algorithm=" << tag(model.algorithm()) << '\n'
      << "seed=" << model.seed << '\n'
      << "feature_dim=" << model.feature_dim << '\n'
      << "labels=" << model.labels.size() << '\n';
  for (const auto& l : model.labels) out << "label=" << l << '\n';

  if (const auto* forest = std::get_if<ForestPayload>(&model.payload)) {
    out << "n_trees=" << forest->params.n_trees << '\n'
        << "mtry=" << forest->params.mtry << '\n'
        << "max_depth=" << forest->params.max_depth << '\n'
        << "min_leaf=" << forest->params.min_leaf << '\n';
    for (const DecisionTree& tree : forest->trees) {
      out << "tree=" << tree.nodes.size() << '\n';
      for (const TreeNode& node : tree.nodes) {
        if (node.leaf()) {
          out << "L " << node.majority;
          for (auto [c, n] : node.counts) out << ' ' << c << ':' << n;
        } else {
          out << "N " << node.feature << ' ' << text::format_double(node.threshold) << ' '
              << node.left << ' ' << node.right;
        }
        out << '\n';
      }
    }
  } else if (const auto* knn = std::get_if<KnnPayload>(&model.payload)) {
    out << "k=" << knn->k << '\n' << "points=" << knn->point_labels.size() << '\n';
    for (std::size_t i = 0; i < knn->point_labels.size(); ++i) {
      out << "P " << knn->point_labels[i] << ' ';
      write_vector(out, std::span(knn->points).subspan(i * model.feature_dim, model.feature_dim));
      out << '\n';
    }
  } else {
    const auto& svm = std::get<SvmPayload>(model.payload);
    out << "lambda=" << text::format_double(svm.params.lambda) << '\n'
        << "epochs=" << svm.params.epochs << '\n'
        << "separators=" << svm.separators.size() << '\n';
    for (const LinearSeparator& sep : svm.separators) {
      out << "W " << sep.positive << ' ' << sep.negative << ' ' << text::format_double(sep.bias)
          << ' ';
      write_vector(out, sep.weights);
      out << '\n';
    }
  }
}

std::string write_model(const TrainedModel& model) {
  std::ostringstream out;
  write_model(out, model);
  return out.str();
}

namespace {

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::string line() {
    if (!std::getline(in_, current_)) fail("unexpected end of model");
    ++line_no_;
    return current_;
  }

  std::string value(std::string_view key) {
    const std::string l = line();
    auto kv = text::key_value(l);
    if (!kv || kv->first != key) fail("expected '" + std::string(key) + "='");
    return std::string(kv->second);
  }

  template <typename Int>
  Int integer(std::string_view key) {
    auto v = text::parse_int<Int>(value(key));
    if (!v) fail("bad integer for " + std::string(key));
    return *v;
  }

  double real(std::string_view s) {
    auto v = text::parse_double(s);
    if (!v) fail("bad number '" + std::string(s) + "'");
    return *v;
  }

  template <typename Int>
  Int integer_field(std::string_view s) {
    auto v = text::parse_int<Int>(s);
    if (!v) fail("bad integer '" + std::string(s) + "'");
    return *v;
  }

  std::vector<double> reals(std::string_view s, std::size_t expected) {
    std::vector<double> out;
    for (auto part : text::split(s, ',')) out.push_back(real(part));
    if (out.size() != expected) fail("expected " + std::to_string(expected) + " values");
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::CorruptModel, what, line_no_);
  }

 private:
  std::istream& in_;
  std::string current_;
  std::size_t line_no_ = 0;
};

}  // namespace

TrainedModel read_model(std::istream& in) {
  ModelReader r(in);
  if (r.line() != kModelMagic) r.fail("expected '#popa-model v1'");
  const std::string algorithm = r.value("algorithm");
  TrainedModel model;
  model.seed = r.integer<std::uint64_t>("seed");
  model.feature_dim = r.integer<std::size_t>("feature_dim");
  const auto n_labels = r.integer<std::size_t>("labels");
  for (std::size_t i = 0; i < n_labels; ++i) model.labels.push_back(r.value("label"));
  if (!std::is_sorted(model.labels.begin(), model.labels.end())) r.fail("labels not sorted");
  auto check_label = [&](std::uint32_t c) {
    if (c >= n_labels) r.fail("label index out of range");
    return c;
  };

  if (algorithm == "forest") {
    ForestPayload forest;
    forest.params.n_trees = r.integer<std::size_t>("n_trees");
    forest.params.mtry = r.integer<std::size_t>("mtry");
    forest.params.max_depth = r.integer<std::size_t>("max_depth");
    forest.params.min_leaf = r.integer<std::size_t>("min_leaf");
    for (std::size_t t = 0; t < forest.params.n_trees; ++t) {
      const auto n_nodes = r.integer<std::size_t>("tree");
      if (n_nodes == 0) r.fail("empty tree");
      DecisionTree tree;
      for (std::size_t i = 0; i < n_nodes; ++i) {
        const std::string l = r.line();
        auto parts = text::split(l, ' ');
        TreeNode node;
        if (parts.size() == 5 && parts[0] == "N") {
          node.feature = r.integer_field<std::int32_t>(parts[1]);
          node.threshold = r.real(parts[2]);
          node.left = r.integer_field<std::uint32_t>(parts[3]);
          node.right = r.integer_field<std::uint32_t>(parts[4]);
          if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= model.feature_dim ||
              node.left >= n_nodes || node.right >= n_nodes || node.left <= i || node.right <= i) {
            r.fail("bad internal node");
          }
        } else if (parts.size() >= 3 && parts[0] == "L") {
          node.majority = check_label(r.integer_field<std::uint32_t>(parts[1]));
          for (std::size_t p = 2; p < parts.size(); ++p) {
            auto cn = text::split(parts[p], ':');
            if (cn.size() != 2) r.fail("bad leaf count");
            node.counts.emplace_back(check_label(r.integer_field<std::uint32_t>(cn[0])),
                                     r.integer_field<std::uint32_t>(cn[1]));
          }
        } else {
          r.fail("bad tree node");
        }
        tree.nodes.push_back(std::move(node));
      }
      forest.trees.push_back(std::move(tree));
    }
    model.payload = std::move(forest);
  } else if (algorithm == "knn") {
    KnnPayload knn;
    knn.k = r.integer<std::size_t>("k");
    const auto n_points = r.integer<std::size_t>("points");
    for (std::size_t i = 0; i < n_points; ++i) {
      const std::string l = r.line();
      auto parts = text::split(l, ' ');
      if (parts.size() != 3 || parts[0] != "P") r.fail("bad point");
      knn.point_labels.push_back(check_label(r.integer_field<std::uint32_t>(parts[1])));
      auto v = r.reals(parts[2], model.feature_dim);
      knn.points.insert(knn.points.end(), v.begin(), v.end());
    }
    model.payload = std::move(knn);
  } else if (algorithm == "svm") {
    SvmPayload svm;
    svm.params.lambda = r.real(r.value("lambda"));
    svm.params.epochs = r.integer<std::size_t>("epochs");
    const auto n_sep = r.integer<std::size_t>("separators");
    for (std::size_t i = 0; i < n_sep; ++i) {
      const std::string l = r.line();
      auto parts = text::split(l, ' ');
      if (parts.size() != 5 || parts[0] != "W") r.fail("bad separator");
      LinearSeparator sep;
      sep.positive = check_label(r.integer_field<std::uint32_t>(parts[1]));
      sep.negative = check_label(r.integer_field<std::uint32_t>(parts[2]));
      sep.bias = r.real(parts[3]);
      sep.weights = r.reals(parts[4], model.feature_dim);
      svm.separators.push_back(std::move(sep));
    }
    model.payload = std::move(svm);
  } else {
    r.fail("unknown algorithm '" + algorithm + "'");
  }
  return model;
}

TrainedModel read_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_model(in);
}

}  // namespace popa
