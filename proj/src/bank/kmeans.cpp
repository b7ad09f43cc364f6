#include "ddavs/bank/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ddavs/error.hpp"
#include "ddavs/random.hpp"

namespace ddavs::bank {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

namespace {

// Assigns every point to its nearest centroid (lowest index on ties) and
// returns the resulting inertia; per-point distances land in `dist`.
double assign(const nd::Array& x, const nd::Array& c, std::vector<std::size_t>& a,
              std::vector<double>& dist) {
  const std::size_t n = x.rows(), k = c.rows(), d = x.cols();
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double dd = squared_distance(x.data() + i * d, c.data() + j * d, d);
      if (dd < best) best = dd, a[i] = j;
    }
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

// Gives each empty cluster the farthest point among clusters that can spare one.
void fill_empty(std::vector<std::size_t>& a, std::vector<double>& dist,
                std::vector<std::size_t>& count) {
  std::fill(count.begin(), count.end(), 0);
  for (std::size_t j : a) ++count[j];
  for (std::size_t j = 0; j < count.size(); ++j) {
    if (count[j] > 0) continue;
    std::size_t far = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (count[a[i]] > 1 && (far == a.size() || dist[i] > dist[far])) far = i;
    }
    --count[a[far]];
    a[far] = j;
    count[j] = 1;
    dist[far] = 0.0;
  }
}

}  // namespace

KMeansResult kmeans_pp(const nd::Array& points, std::size_t k, std::uint64_t seed,
                       std::size_t max_iters, double tol) {
  const std::size_t n = points.rows(), d = points.cols();
  if (k == 0) throw ParameterError("k-means needs k >= 1");
  if (!(tol > 0.0)) throw ParameterError("k-means tolerance must be positive");
  if (n < k) {
    throw InsufficientDataError("k-means with k=" + std::to_string(k) + " needs at least " +
                                std::to_string(k) + " points, got " + std::to_string(n));
  }
  Rng rng(seed);
  nd::Array c({k, d});
  std::vector<bool> taken(n, false);
  std::vector<double> dmin(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(n);
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : dmin[i];
      if (total > 0.0) {
        double r = rng.uniform(0.0, total);
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (taken[i] || dmin[i] <= 0.0) continue;
          pick = i;
          r -= dmin[i];
          if (r <= 0.0) break;
        }
      } else {
        // Every remaining point coincides with a chosen centroid.
        pick = n;
        for (std::size_t i = 0; i < n && pick == n; ++i) {
          if (!taken[i]) pick = i;
        }
      }
    }
    taken[pick] = true;
    std::copy_n(points.data() + pick * d, d, c.data() + j * d);
    for (std::size_t i = 0; i < n; ++i) {
      dmin[i] = std::min(dmin[i], squared_distance(points.data() + i * d, c.data() + j * d, d));
    }
  }

  KMeansResult res;
  res.assignments.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<std::size_t> count(k);
  for (std::size_t it = 0; it < max_iters; ++it) {
    res.inertia_history.push_back(assign(points, c, res.assignments, dist));
    fill_empty(res.assignments, dist, count);
    nd::Array next({k, d});
    for (std::size_t i = 0; i < n; ++i) {
      double* row = next.data() + res.assignments[i] * d;
      for (std::size_t t = 0; t < d; ++t) row[t] += points(i, t);
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t t = 0; t < d; ++t) next(j, t) /= static_cast<double>(count[j]);
      shift = std::max(shift, std::sqrt(squared_distance(next.data() + j * d, c.data() + j * d, d)));
    }
    c = std::move(next);
    res.iterations = it + 1;
    if (shift < tol) break;
  }
  res.inertia = assign(points, c, res.assignments, dist);
  fill_empty(res.assignments, dist, count);
  res.centroids = std::move(c);
  return res;
}

}  // namespace ddavs::bank
