#pragma once

// Hot loops of the classifiers. Each parallel kernel has a serial reference
// that computes the same result by the plainest possible route; the tests
// check them against each other and bench/ times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace popa {

enum class Execution { Serial, Parallel };

/// Thread count used by Execution::Parallel (OpenMP). 0 keeps the runtime default.
void set_parallel_jobs(int jobs);
int parallel_jobs();

struct Neighbor {
  double dist2 = 0.0;
  std::uint32_t index = 0;

  bool operator==(const Neighbor&) const = default;
};

/// Total order used for neighbor selection: distance, then instance index.
constexpr bool closer(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

/// Squared euclidean distance, summed in feature order.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Full scan + full sort over all points. Row-major `points`, `dim` columns.
std::vector<Neighbor> knn_search_reference(std::span<const double> points, std::size_t dim,
                                           std::span<const double> query, std::size_t k);

/// Single pass over all points keeping the k best seen so far. Same
/// distances and order as knn_search_reference without the full sort.
std::vector<Neighbor> knn_search_scan(std::span<const double> points, std::size_t dim,
                                      std::span<const double> query, std::size_t k);

/// Batch search: one result per query row. Parallel runs the queries under
/// OpenMP with knn_search_scan; Serial uses knn_search_reference.
std::vector<std::vector<Neighbor>> knn_search_batch(std::span<const double> points,
                                                    std::size_t dim,
                                                    std::span<const double> queries,
                                                    std::size_t k, Execution exec);

}  // namespace popa
