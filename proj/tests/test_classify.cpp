#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "popa/classify.hpp"
#include "popa/eval.hpp"
#include "popa/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace popa;
using namespace popa::oracle;

namespace {

Dataset make_dataset(std::size_t dim, const std::vector<std::pair<std::vector<double>, std::string>>& rows) {
  Dataset d(dim);
  for (const auto& [x, label] : rows) d.add(x, label);
  return d;
}

// One tight cluster per label along the diagonal, far apart; no ties anywhere.
Dataset separable_blobs(std::size_t per_label, const std::vector<std::string>& labels, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d(3);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    for (std::size_t i = 0; i < per_label; ++i) {
      std::vector<double> x(3);
      for (double& v : x) v = 10.0 * static_cast<double>(l) + rng.uniform(-1.0, 1.0);
      d.add(x, labels[l]);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("gini hand cases") {
  CHECK(gini({{"A", 5}}) == 0.0);
  CHECK(gini({{"A", 1}, {"B", 1}}) == 0.5);
  CHECK(gini({{"A", 3}, {"B", 1}}) == 0.375);
  CHECK_POPA_ERROR(gini({}), ErrorCode::EmptyCounts);
  CHECK_POPA_ERROR(gini({{"A", 0}}), ErrorCode::EmptyCounts);
}

TEST_CASE("gini stays within [0, 1 - 1/L]") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    LabelCounts c;
    const std::size_t labels = 1 + rng.below(6);
    for (std::size_t l = 0; l < labels; ++l) c[std::to_string(l)] = 1 + rng.below(20);
    const double g = gini(c);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 - 1.0 / static_cast<double>(labels) + 1e-12);
  }
}

TEST_CASE("best_split examples") {
  SUBCASE("pure data has no split") {
    auto d = make_dataset(1, {{{0.1}, "A"}, {{0.7}, "A"}});
    std::vector<std::size_t> f{0};
    CHECK_FALSE(best_split(d, f).has_value());
  }
  SUBCASE("one feature, two clusters") {
    auto d = make_dataset(1, {{{0.1}, "A"}, {{0.2}, "A"}, {{0.8}, "B"}, {{0.9}, "B"}});
    std::vector<std::size_t> f{0};
    auto s = best_split(d, f);
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    CHECK(s->threshold == 0.5);
    CHECK(s->impurity_decrease == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("equal decrease picks the lower feature") {
    auto d = make_dataset(2, {{{0.0, 0.0}, "A"}, {{1.0, 1.0}, "B"}});
    std::vector<std::size_t> f{1, 0};
    auto s = best_split(d, f);
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
  }
  SUBCASE("constant features give no split") {
    auto d = make_dataset(2, {{{0.3, 0.3}, "A"}, {{0.3, 0.3}, "B"}});
    std::vector<std::size_t> f{0, 1};
    CHECK_FALSE(best_split(d, f).has_value());
  }
  SUBCASE("candidate outside the feature range") {
    auto d = make_dataset(1, {{{0.0}, "A"}, {{1.0}, "B"}});
    std::vector<std::size_t> f{1};
    CHECK_POPA_ERROR(best_split(d, f), ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("best_split agrees with the exhaustive oracle") {
  Rng rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t dim = 1 + rng.below(3);
    Dataset d = random_grid_dataset(rng, n, dim, 2 + rng.below(5), 1 + rng.below(3));
    std::vector<std::size_t> features;
    for (std::size_t f = 0; f < dim; ++f) {
      if (rng.below(3) != 0) features.push_back(f);
    }
    if (features.empty()) features.push_back(rng.below(dim));
    rng.shuffle(std::span(features));

    auto got = best_split(d, features);
    auto want = oracle_best_split(d, features);
    REQUIRE(got.has_value() == want.has_value());
    if (!want) continue;
    ++compared;
    CHECK(got->feature == want->feature);
    CHECK(got->threshold == want->threshold);
    const double dec = static_cast<double>(want->decrease.num) / static_cast<double>(want->decrease.den);
    CHECK(got->impurity_decrease == doctest::Approx(dec).epsilon(1e-12));
  }
  CHECK(compared >= 200);
}

TEST_CASE("train_tree examples") {
  Rng rng(3);
  SUBCASE("single instance is a single leaf") {
    auto d = make_dataset(2, {{{0.4, 0.6}, "solo"}});
    auto tree = train_tree(d, {16, 1, 1}, rng);
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].leaf());
    CHECK(tree.nodes[0].counts == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0u, 1u}});
  }
  SUBCASE("separable one-dimensional data needs depth one") {
    Dataset d(1);
    for (int i = 0; i < 10; ++i) d.add(std::vector<double>{0.05 * i}, "lo");
    for (int i = 0; i < 10; ++i) d.add(std::vector<double>{0.6 + 0.03 * i}, "hi");
    auto tree = train_tree(d, {16, 1, 1}, rng);
    CHECK(tree.depth() == 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto& leaf = tree.leaf_for(d.row(i));
      CHECK(d.label_set()[leaf.majority] == d.labels[i]);
    }
  }
  SUBCASE("same seed gives the same tree") {
    Rng data_rng(11);
    Dataset d = random_grid_dataset(data_rng, 200, 4, 10, 4);
    Rng a(99), b(99);
    CHECK(train_tree(d, {8, 2, 2}, a) == train_tree(d, {8, 2, 2}, b));
  }
  SUBCASE("structural invariants") {
    Rng data_rng(12);
    Dataset d = random_grid_dataset(data_rng, 300, 3, 7, 3);
    const TreeParams params{5, 3, 2};
    auto tree = train_tree(d, params, rng);
    CHECK(tree.depth() <= params.max_depth);
    for (const auto& node : tree.nodes) {
      if (node.leaf()) {
        std::uint32_t total = 0;
        for (auto [label, c] : node.counts) total += c;
        CHECK(total >= 1);
      } else {
        CHECK(static_cast<std::size_t>(node.feature) < d.feature_dim);
        CHECK(node.left < tree.nodes.size());
        CHECK(node.right < tree.nodes.size());
      }
    }
  }
  SUBCASE("mtry outside [1, dim]") {
    auto d = make_dataset(2, {{{0.0, 0.0}, "A"}});
    CHECK_POPA_ERROR(train_tree(d, {16, 1, 3}, rng), ErrorCode::InvalidArgument);
    CHECK_POPA_ERROR(train_tree(d, {16, 1, 0}, rng), ErrorCode::InvalidArgument);
  }
}

TEST_CASE("forest determinism and execution modes") {
  Rng data_rng(5);
  Dataset d = random_grid_dataset(data_rng, 400, 6, 12, 5);
  ForestParams params;
  params.n_trees = 25;
  const auto a = train_forest(d, params, 42, Execution::Parallel);
  const auto b = train_forest(d, params, 42, Execution::Parallel);
  const auto serial = train_forest(d, params, 42, Execution::Serial);
  CHECK(write_model(a) == write_model(b));
  CHECK(a == serial);
  CHECK(std::get<ForestPayload>(a.payload).params.mtry == 3);
  CHECK(write_model(a) != write_model(train_forest(d, params, 43)));

  for (std::size_t i = 0; i < 50; ++i) {
    auto p = predict(a, d.row(i));
    double sum = 0.0;
    for (auto& [label, s] : p.scores) sum += s;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("single bagged tree beats chance out of bag") {
  Dataset d = separable_blobs(40, {"a", "b", "c"}, 8);
  ForestParams params;
  params.n_trees = 1;
  params.mtry = 1;
  const std::uint64_t seed = 17;
  auto model = train_forest(d, params, seed);

  // Replay the documented bootstrap draw of tree 0.
  Rng rng(tree_seed(seed, 0));
  std::vector<int> drawn(d.size(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) ++drawn[rng.below(d.size())];
  std::size_t oob = 0, correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (drawn[i] > 0) continue;
    ++oob;
    correct += predict(model, d.row(i)).label == d.labels[i];
  }
  REQUIRE(oob > 0);
  CHECK(static_cast<double>(correct) / static_cast<double>(oob) > 1.0 / 3.0);
}

TEST_CASE("tree seeds follow the documented derivation") {
  CHECK(tree_seed(1, 0) == mix64(1 ^ mix64(0)));
  CHECK(tree_seed(12345, 77) == mix64(12345 ^ mix64(77)));
  // First output of the reference splitmix64 generator seeded with 0.
  CHECK(mix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("forest on a pure region scores 1") {
  Dataset d = separable_blobs(30, {"left", "right"}, 4);
  auto model = train_forest(d, {}, 1);
  auto p = predict(model, d.row(0));
  CHECK(p.label == "left");
  CHECK(p.scores.at("left") == 1.0);
}

TEST_CASE("forest fits the synthetic population") {
  PopulationParams pop;
  auto specs = generate_population(pop);
  std::vector<SessionRecording> recs;
  for (const auto& s : specs) recs.push_back(simulate_session(s, 600, 1));
  Dataset d = build_dataset(recs, FeatureMode::Frame);
  auto model = train_forest(d, {}, 1);
  auto predicted = predict_batch(model, d);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += model.labels[predicted[i]] == d.labels[i];
  CHECK(static_cast<double>(correct) / static_cast<double>(d.size()) >= 0.99);
}

TEST_CASE("knn examples") {
  SUBCASE("single point") {
    auto d = make_dataset(2, {{{0.5, 0.5}, "only"}});
    auto m = train_knn(d, 1);
    CHECK(predict(m, std::vector<double>{9.0, -3.0}).label == "only");
  }
  SUBCASE("majority of three") {
    auto d = make_dataset(1, {{{0.0}, "A"}, {{0.1}, "A"}, {{0.2}, "B"}, {{5.0}, "B"}, {{6.0}, "B"}});
    auto m = train_knn(d, 3);
    auto p = predict(m, std::vector<double>{0.05});
    CHECK(p.label == "A");
    CHECK(p.scores.at("A") == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("k above instance count") {
    auto d = make_dataset(1, {{{0.0}, "A"}, {{1.0}, "B"}});
    CHECK_POPA_ERROR(train_knn(d, 5), ErrorCode::KTooLarge);
  }
  SUBCASE("distance tie goes to the smaller index") {
    auto d = make_dataset(1, {{{1.0}, "Z"}, {{-1.0}, "A"}});
    auto m = train_knn(d, 1);
    CHECK(predict(m, std::vector<double>{0.0}).label == "Z");
  }
  SUBCASE("vote tie goes to the smaller label") {
    auto d = make_dataset(1, {{{0.0}, "B"}, {{0.1}, "A"}, {{9.0}, "C"}});
    // All three are neighbors, one vote each.
    auto m = train_knn(d, 3);
    CHECK(predict(m, std::vector<double>{-100.0}).label == "A");
  }
  SUBCASE("self match with duplicates") {
    Rng rng(21);
    Dataset d = random_grid_dataset(rng, 120, 2, 3, 3);
    auto m = train_knn(d, 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      // The first copy of a duplicated point wins, so compare to it.
      std::size_t first = i;
      for (std::size_t j = 0; j < i; ++j) {
        if (std::equal(d.row(j).begin(), d.row(j).end(), d.row(i).begin())) { first = j; break; }
      }
      CHECK(predict(m, d.row(i)).label == d.labels[first]);
    }
  }
}

TEST_CASE("knn agrees with a full-sort oracle") {
  Rng rng(31);
  for (int round = 0; round < 4; ++round) {
    Dataset train = random_grid_dataset(rng, 150, 3, 4, 3);
    for (std::size_t k : {1, 3, 5}) {
      auto model = train_knn(train, k);
      Dataset queries = random_grid_dataset(rng, 40, 3, 5, 1);
      auto batch = predict_batch(model, queries);
      auto serial = predict_batch(model, queries, Execution::Serial);
      CHECK(batch == serial);
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const std::string want = knn_oracle(train, queries.row(q), k);
        CHECK(predict(model, queries.row(q)).label == want);
        CHECK(model.labels[batch[q]] == want);
      }
    }
  }
}

TEST_CASE("scan kernel matches the reference search") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.below(5);
    const std::size_t n = 1 + rng.below(200);
    std::vector<double> points(n * dim), query(dim);
    for (double& v : points) v = static_cast<double>(rng.below(6));
    for (double& v : query) v = static_cast<double>(rng.below(6));
    const std::size_t k = 1 + rng.below(8);
    CHECK(knn_search_scan(points, dim, query, k) == knn_search_reference(points, dim, query, k));
  }
}

TEST_CASE("svm examples") {
  SUBCASE("separable pair is fit exactly") {
    Dataset d(2);
    Rng rng(51);
    for (int i = 0; i < 60; ++i) {
      const double a = rng.uniform(0.0, 1.0);
      d.add(std::vector<double>{a, rng.uniform(0.6, 1.0)}, "up");
      d.add(std::vector<double>{a, rng.uniform(0.0, 0.4)}, "down");
    }
    auto m = train_svm_ovo(d, {}, 1);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(predict(m, d.row(i)).label == d.labels[i]);
  }
  SUBCASE("three labels give three separators") {
    Dataset d = separable_blobs(10, {"a", "b", "c"}, 2);
    auto m = train_svm_ovo(d, {}, 1);
    const auto& svm = std::get<SvmPayload>(m.payload);
    REQUIRE(svm.separators.size() == 3);
    CHECK(svm.separators[0].positive == 0);
    CHECK(svm.separators[0].negative == 1);
    CHECK(svm.separators[2].positive == 1);
    CHECK(svm.separators[2].negative == 2);
  }
  SUBCASE("single label") {
    auto d = make_dataset(1, {{{0.0}, "A"}, {{1.0}, "A"}});
    CHECK_POPA_ERROR(train_svm_ovo(d, {}, 1), ErrorCode::SingleClass);
  }
  SUBCASE("deterministic and execution independent") {
    Dataset d = separable_blobs(15, {"a", "b", "c", "d"}, 3);
    auto a = train_svm_ovo(d, {}, 9);
    CHECK(a == train_svm_ovo(d, {}, 9, Execution::Serial));
    CHECK(write_model(a) == write_model(train_svm_ovo(d, {}, 9)));
  }
}

TEST_CASE("relabelling commutes with prediction") {
  const std::vector<std::string> names{"ann", "bob", "cat", "dan"};
  const std::vector<std::string> renamed{"zed", "amy", "kim", "bo"};
  Dataset d = separable_blobs(20, names, 6);
  Dataset r = d;
  for (auto& l : r.labels) {
    l = renamed[static_cast<std::size_t>(std::find(names.begin(), names.end(), l) - names.begin())];
  }
  Rng rng(61);
  for (auto spec : {AlgorithmSpec::from_name("rf"), AlgorithmSpec::from_name("knn3")}) {
    auto m = train(d, spec, 5);
    auto mr = train(r, spec, 5);
    for (int q = 0; q < 60; ++q) {
      std::vector<double> x(3);
      const double centre = 10.0 * static_cast<double>(rng.below(4));
      for (double& v : x) v = centre + rng.uniform(-1.0, 1.0);
      const std::string a = predict(m, x).label;
      const std::string b = predict(mr, x).label;
      const auto pos = static_cast<std::size_t>(std::find(names.begin(), names.end(), a) - names.begin());
      CHECK(renamed[pos] == b);
    }
  }
}

TEST_CASE("prediction dimension checks") {
  Dataset d = separable_blobs(5, {"a", "b"}, 1);
  for (auto name : {"rf", "knn1", "svm"}) {
    auto m = train(d, AlgorithmSpec::from_name(name), 1);
    CHECK_POPA_ERROR(predict(m, std::vector<double>{1.0}), ErrorCode::DimensionMismatch);
    Dataset wrong(2);
    wrong.add(std::vector<double>{0.0, 0.0}, "a");
    CHECK_POPA_ERROR(predict_batch(m, wrong), ErrorCode::DimensionMismatch);
  }
  Dataset x(3);
  CHECK_POPA_ERROR(x.add(std::vector<double>{1.0}, "a"), ErrorCode::DimensionMismatch);
}

TEST_CASE("algorithm names") {
  for (auto name : {"rf", "knn1", "knn3", "knn5", "svm"}) {
    CHECK(AlgorithmSpec::from_name(name).name() == name);
  }
  CHECK_POPA_ERROR(AlgorithmSpec::from_name("boost"), ErrorCode::InvalidArgument);
}

TEST_CASE("model files round trip") {
  Rng rng(71);
  for (auto name : {"rf", "knn5", "svm"}) {
    for (int trial = 0; trial < 5; ++trial) {
      Dataset d = random_grid_dataset(rng, 60 + rng.below(60), 1 + rng.below(4), 1000, 2 + rng.below(3));
      for (double& v : d.values) v += rng.gaussian() * 1e-3;
      auto spec = AlgorithmSpec::from_name(name);
      spec.forest.n_trees = 7;
      spec.svm.epochs = 3;
      auto m = train(d, spec, rng.next_u64());
      const std::string text = write_model(m);
      auto back = read_model(text);
      CHECK(back == m);
      CHECK(write_model(back) == text);
    }
  }
}

TEST_CASE("corrupt model files") {
  Dataset d = separable_blobs(5, {"a", "b"}, 1);
  const std::string text = write_model(train(d, AlgorithmSpec::from_name("rf"), 1));
  CHECK_POPA_ERROR(read_model(text.substr(0, text.size() / 2)), ErrorCode::CorruptModel);
  CHECK_POPA_ERROR(read_model("#popa-model v1\nalgorithm=nope\n"), ErrorCode::CorruptModel);
  CHECK_POPA_ERROR(read_model(""), ErrorCode::CorruptModel);
}
