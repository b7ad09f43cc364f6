#pragma once

#include <cstdint>
#include <vector>

#include "ddavs/nd/array.hpp"

namespace ddavs::bank {

struct KMeansResult {
  nd::Array centroids;                   // k x d
  std::vector<std::size_t> assignments;  // per point
  /// Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// K-means++ seeding followed by Lloyd iterations until every centroid moves
/// less than `tol` or `max_iters` is reached. An emptied cluster takes the
/// point farthest from its own centroid.
KMeansResult kmeans_pp(const nd::Array& points, std::size_t k, std::uint64_t seed,
                       std::size_t max_iters = 100, double tol = 1e-9);

double squared_distance(const double* a, const double* b, std::size_t d);

}  // namespace ddavs::bank
