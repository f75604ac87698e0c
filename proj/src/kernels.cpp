#include "popa/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace popa {

void set_parallel_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

int parallel_jobs() { return omp_get_max_threads(); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

std::vector<Neighbor> knn_search_reference(std::span<const double> points, std::size_t dim,
                                           std::span<const double> query, std::size_t k) {
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  std::vector<Neighbor> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = {squared_distance(points.subspan(i * dim, dim), query),
              static_cast<std::uint32_t>(i)};
  }
  std::sort(all.begin(), all.end(), closer);
  all.resize(std::min(k, n));
  return all;
}

namespace {

// Keeps the k best neighbors sorted ascending by `closer`.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { best_.reserve(k + 1); }

  bool full() const { return best_.size() == k_; }
  double bound() const { return best_.back().dist2; }

  void offer(Neighbor cand) {
    if (full() && !closer(cand, best_.back())) return;
    auto pos = std::upper_bound(best_.begin(), best_.end(), cand, closer);
    best_.insert(pos, cand);
    if (best_.size() > k_) best_.pop_back();
  }

  std::vector<Neighbor> take() { return std::move(best_); }

 private:
  std::size_t k_;
  std::vector<Neighbor> best_;
};

}  // namespace

std::vector<Neighbor> knn_search_scan(std::span<const double> points, std::size_t dim,
                                      std::span<const double> query, std::size_t k) {
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  TopK top(std::min(k, n));
  if (n == 0 || k == 0) return top.take();
  const double* q = query.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = points.data() + i * dim;
    double sum = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = p[j] - q[j];
      sum += d * d;
    }
    top.offer({sum, static_cast<std::uint32_t>(i)});
  }
  return top.take();
}

std::vector<std::vector<Neighbor>> knn_search_batch(std::span<const double> points,
                                                    std::size_t dim,
                                                    std::span<const double> queries,
                                                    std::size_t k, Execution exec) {
  const std::size_t m = dim == 0 ? 0 : queries.size() / dim;
  std::vector<std::vector<Neighbor>> out(m);
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < m; ++i) {
      out[i] = knn_search_reference(points, dim, queries.subspan(i * dim, dim), k);
    }
    return out;
  }
  const auto count = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < count; ++i) {
    out[i] = knn_search_scan(points, dim, queries.subspan(static_cast<std::size_t>(i) * dim, dim), k);
  }
  return out;
}

}  // namespace popa
