#pragma once

// Independent from-scratch oracles for the split search and KNN voting.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "popa/classify.hpp"
#include "popa/rng.hpp"

namespace popa::oracle {

// Weighted Gini decrease as an exact fraction num/den, computed from scratch:
//   sum cL^2/(n nL) + sum cR^2/(n nR) - sum c^2/n^2
// over the common denominator n^2 nL nR.
struct Fraction {
  __int128 num;
  __int128 den;
};

inline bool greater(const Fraction& a, const Fraction& b) { return a.num * b.den > b.num * a.den; }

struct OracleSplit {
  std::size_t feature;
  double threshold;
  Fraction decrease;
};

inline std::optional<OracleSplit> oracle_best_split(const Dataset& d, const std::vector<std::size_t>& features) {
  std::map<std::string, __int128> all;
  for (const auto& l : d.labels) ++all[l];
  if (all.size() < 2) return std::nullopt;
  const __int128 n = static_cast<__int128>(d.size());
  __int128 sq = 0;
  for (auto& [l, c] : all) sq += c * c;

  std::optional<OracleSplit> best;
  std::vector<std::size_t> sorted_features = features;
  std::sort(sorted_features.begin(), sorted_features.end());
  for (std::size_t f : sorted_features) {
    std::set<double> distinct;
    for (std::size_t i = 0; i < d.size(); ++i) distinct.insert(d.row(i)[f]);
    std::vector<double> v(distinct.begin(), distinct.end());
    for (std::size_t t = 0; t + 1 < v.size(); ++t) {
      const double thr = (v[t] + v[t + 1]) / 2.0;
      std::map<std::string, __int128> left, right;
      __int128 nl = 0, nr = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.row(i)[f] <= thr) { ++left[d.labels[i]]; ++nl; } else { ++right[d.labels[i]]; ++nr; }
      }
      __int128 sl = 0, sr = 0;
      for (auto& [l, c] : left) sl += c * c;
      for (auto& [l, c] : right) sr += c * c;
      Fraction dec{sl * n * nr + sr * n * nl - sq * nl * nr, n * n * nl * nr};
      if (!best || greater(dec, best->decrease)) best = OracleSplit{f, thr, dec};
    }
  }
  return best;
}

inline std::string knn_oracle(const Dataset& train, std::span<const double> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < train.feature_dim; ++j) s += (train.row(i)[j] - q[j]) * (train.row(i)[j] - q[j]);
    all.push_back({s, i});
  }
  std::sort(all.begin(), all.end());
  std::map<std::string, int> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[train.labels[all[i].second]];
  std::string best;
  int most = -1;
  for (auto& [l, v] : votes) {
    if (v > most) { most = v; best = l; }
  }
  return best;
}

inline Dataset random_grid_dataset(Rng& rng, std::size_t n, std::size_t dim, std::size_t levels, std::size_t n_labels) {
  Dataset d(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
    d.add(x, std::string(1, static_cast<char>('A' + rng.below(n_labels))));
  }
  return d;
}

}  // namespace popa::oracle
