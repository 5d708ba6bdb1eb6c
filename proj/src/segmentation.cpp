#include <algorithm>
#include <cmath>

#include "diff3f/error.hpp"
#include "diff3f/matcher.hpp"
#include "diff3f/rng.hpp"

namespace diff3f {

namespace {

std::vector<double> unit_rows(const PointDescriptors& d) {
  std::vector<double> out(d.values.begin(), d.values.end());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double norm2 = 0.0;
    for (std::size_t c = 0; c < d.dim; ++c) norm2 += out[i * d.dim + c] * out[i * d.dim + c];
    if (norm2 <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t c = 0; c < d.dim; ++c) out[i * d.dim + c] *= inv;
  }
  return out;
}

double cosine_to(const double* x, const double* centroid, std::size_t dim) {
  double dot = 0.0, norm2 = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    dot += x[c] * centroid[c];
    norm2 += centroid[c] * centroid[c];
  }
  return norm2 > 0.0 ? dot / std::sqrt(norm2) : 0.0;
}

// Labels by highest cosine; `best_cos` receives each row's winning value.
std::vector<int> assign(const std::vector<double>& rows, std::size_t n, const std::vector<double>& centroids,
                        int k, std::size_t dim, std::vector<double>* best_cos = nullptr) {
  std::vector<int> labels(n, 0);
  if (best_cos) best_cos->assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double cos = cosine_to(rows.data() + i * dim, centroids.data() + static_cast<std::size_t>(c) * dim, dim);
      if (cos > best) {
        best = cos;
        labels[i] = c;
      }
    }
    if (best_cos) (*best_cos)[i] = best;
  }
  return labels;
}

double objective(const std::vector<double>& best_cos) {
  double sum = 0.0;
  for (double c : best_cos) sum += 1.0 - c;
  return sum;
}

// Member means; an empty cluster takes over the worst-fitting point of a
// cluster with more than one member.
std::vector<double> update_centroids(const std::vector<double>& rows, std::vector<int>& labels, int k,
                                     std::size_t dim, const std::vector<double>& best_cos) {
  const std::size_t n = labels.size();
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    std::size_t worst = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (worst == n || best_cos[i] < best_cos[worst]) worst = i;
    }
    if (worst == n) break;
    --counts[static_cast<std::size_t>(labels[worst])];
    labels[worst] = c;
    ++counts[static_cast<std::size_t>(c)];
  }
  std::vector<double> centroids(static_cast<std::size_t>(k) * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = centroids.data() + static_cast<std::size_t>(labels[i]) * dim;
    for (std::size_t c = 0; c < dim; ++c) dst[c] += rows[i * dim + c];
  }
  for (int c = 0; c < k; ++c) {
    const auto count = counts[static_cast<std::size_t>(c)];
    if (count == 0) continue;
    for (std::size_t j = 0; j < dim; ++j) centroids[static_cast<std::size_t>(c) * dim + j] /= static_cast<double>(count);
  }
  return centroids;
}

}  // namespace

SegmentationResult kmeans_fit(const PointDescriptors& descriptors, int k, std::uint64_t seed,
                              int max_iterations) {
  const std::size_t n = descriptors.size();
  const std::size_t dim = descriptors.dim;
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::kKTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  }
  const auto rows = unit_rows(descriptors);

  // k-means++ seeding on the cosine distance 1 - cos.
  Rng rng(seed);
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.uniform_index(n))};
  std::vector<double> dist(n);
  std::vector<char> taken(n, 0);
  taken[chosen[0]] = 1;
  auto update_dist = [&](std::size_t center, bool first) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::max(0.0, 1.0 - cosine_to(rows.data() + i * dim, rows.data() + center * dim, dim));
      dist[i] = first ? d : std::min(dist[i], d);
    }
  };
  update_dist(chosen[0], true);
  while (chosen.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : dist[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || dist[i] <= 0.0) continue;
        pick = i;
        target -= dist[i];
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
    }
    taken[pick] = 1;
    chosen.push_back(pick);
    update_dist(pick, false);
  }

  SegmentationResult result;
  result.k = k;
  result.dim = dim;
  result.centroids.assign(static_cast<std::size_t>(k) * dim, 0.0);
  for (int c = 0; c < k; ++c) {
    std::copy_n(rows.data() + chosen[static_cast<std::size_t>(c)] * dim, dim,
                result.centroids.data() + static_cast<std::size_t>(c) * dim);
  }

  std::vector<double> best_cos;
  auto labels = assign(rows, n, result.centroids, k, dim, &best_cos);
  result.inertia_history.push_back(objective(best_cos));
  bool converged = false;
  for (int it = 0; it < max_iterations; ++it) {
    result.centroids = update_centroids(rows, labels, k, dim, best_cos);
    auto next = assign(rows, n, result.centroids, k, dim, &best_cos);
    result.inertia_history.push_back(objective(best_cos));
    result.iterations = it + 1;
    if (next == labels) {
      converged = true;
      break;
    }
    labels = std::move(next);
  }
  if (!converged) result.centroids = update_centroids(rows, labels, k, dim, best_cos);
  result.labels = std::move(labels);
  return result;
}

std::vector<int> segment_transfer(std::span<const double> centroids, std::size_t dim,
                                  const PointDescriptors& descriptors) {
  if (descriptors.size() == 0) return {};
  if (dim != descriptors.dim || dim == 0 || centroids.size() % dim != 0) {
    throw Error(ErrorCode::kDimMismatch, "centroid dim " + std::to_string(dim) + " vs descriptor dim " +
                                             std::to_string(descriptors.dim));
  }
  const int k = static_cast<int>(centroids.size() / dim);
  const std::vector<double> c(centroids.begin(), centroids.end());
  return assign(unit_rows(descriptors), descriptors.size(), c, k, dim);
}

}  // namespace diff3f
