#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "diff3f/descriptors.hpp"
#include "diff3f/shape.hpp"

namespace diff3f {

// |S| x |T| cosine similarities, computed in double precision. Zero rows
// yield zero similarity. Throws DimMismatch.
Eigen::MatrixXd similarity_matrix(const PointDescriptors& source, const PointDescriptors& target);

struct CorrespondenceResult {
  std::vector<std::uint32_t> source_ids;
  std::vector<std::uint32_t> target_ids;
  std::vector<std::uint32_t> assignment;  // target vertex id per source row
  std::vector<double> score;
};

// Row-wise argmax of the similarity matrix; ties go to the lowest target
// row. Many-to-one assignments are allowed.
CorrespondenceResult match(const PointDescriptors& source, const PointDescriptors& target);

// Source vertex id -> target vertex id.
using GroundTruth = std::map<std::uint32_t, std::uint32_t>;

// Plain text, one "source_index target_index" pair per line, 0-based. Blank
// lines and lines starting with '#' are skipped.
GroundTruth read_ground_truth(const std::filesystem::path& path);

struct EvalOptions {
  std::vector<double> tolerances{0.01, 0.05, 0.10, 0.20};
  // Drop coverage-0 source points from err/acc.
  bool exclude_uncovered = false;
  // Evaluate only the source points that have ground truth instead of
  // failing on the others.
  bool restrict_to_ground_truth = false;
};

struct EvalReport {
  double err = 0.0;
  std::map<double, double> acc;
  std::size_t n = 0;
  std::size_t excluded = 0;
  std::size_t uncovered = 0;
  double diameter = 0.0;
};

// Maximum pairwise distance, exact O(n^2).
double point_set_diameter(std::span<const Vec3> points);

// err = mean |p(pred) - p(gt)|, acc(g) = fraction with distance < g * d where
// d is the diameter of the target points in result.target_ids.
// `source_coverage` (optional, parallel to result.source_ids) marks
// uncovered points. Throws MissingGroundTruth.
EvalReport evaluate(const CorrespondenceResult& result, const GroundTruth& gt, const Shape& target,
                    const EvalOptions& options = {},
                    std::span<const std::uint32_t> source_coverage = {});

struct SegmentationResult {
  int k = 0;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim, raw member means
  // Objective sum(1 - cos(x, c)) after every assignment step.
  std::vector<double> inertia_history;
  int iterations = 0;

  std::span<const double> centroid(int c) const {
    return {centroids.data() + static_cast<std::size_t>(c) * dim, dim};
  }
};

// Lloyd iterations on the cosine objective (spherical k-means) with k-means++
// seeding. Assignment uses cosine similarity, the same rule as
// segment_transfer, so transferring the fitted centroids back onto the same
// descriptors reproduces the labels.
SegmentationResult kmeans_fit(const PointDescriptors& descriptors, int k, std::uint64_t seed,
                              int max_iterations = 100);

// Nearest centroid in cosine distance; ties go to the lowest label.
std::vector<int> segment_transfer(std::span<const double> centroids, std::size_t dim,
                                  const PointDescriptors& descriptors);
inline std::vector<int> segment_transfer(const SegmentationResult& fit,
                                         const PointDescriptors& descriptors) {
  return segment_transfer(fit.centroids, fit.dim, descriptors);
}

}  // namespace diff3f
