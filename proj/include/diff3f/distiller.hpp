#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diff3f/descriptors.hpp"
#include "diff3f/feature_store.hpp"
#include "diff3f/manifest.hpp"
#include "diff3f/renderer.hpp"
#include "diff3f/shape.hpp"

namespace diff3f {

// Weights for the last ceil(T/4) + 1 denoising steps. `window` lists step
// indices from ceil(T/4) down to 0 (0 = final, least noisy step) and
// `weights[i]` belongs to `window[i]`: linearly spaced from 0.1 at the
// noisiest step to 1.0 at step 0. `invert` flips the assignment.
struct TimestepWeights {
  int total_steps = 30;
  std::vector<int> window;
  std::vector<double> weights;
};

TimestepWeights make_timestep_weights(int total_steps, bool invert = false);

// Scales every nonzero pixel vector to unit length; zero vectors stay zero.
FeatureMap normalize_map(const FeatureMap& map);

// Per-pixel sum of w_t * F_t without normalization. Maps must share dims and
// their timesteps must cover the window exactly once each.
FeatureMap weighted_timestep_sum(std::span<const FeatureMap> maps, const TimestepWeights& weights);

// weighted_timestep_sum followed by per-pixel normalization. The result is a
// diffusion map with no timestep.
FeatureMap aggregate_timesteps(std::span<const FeatureMap> maps, const TimestepWeights& weights);

struct FusionConfig {
  double alpha = 0.5;
};

// Per-pixel [alpha * diff || (1 - alpha) * dino], unit-normalized.
FeatureMap fuse(const FeatureMap& diff, const FeatureMap& dino, const FusionConfig& config);

// Bilinear resampling on pixel centers (half-pixel convention) with clamped
// borders. Returns a copy when the size already matches.
FeatureMap resample_bilinear(const FeatureMap& map, std::uint32_t height, std::uint32_t width);

enum class BallWeighting { kUniform, kGaussian };

struct UnprojectOptions {
  double radius = 0.01;
  // kGaussian weights a pixel by exp(-d^2 / (2 (r/2)^2)).
  BallWeighting weighting = BallWeighting::kUniform;
  bool keep_neighbors = false;
};

// One view's contribution to every query point.
struct ViewContribution {
  std::size_t dim = 0;
  std::vector<float> vectors;  // |points| x dim, unit rows where hits > 0
  std::vector<std::uint32_t> hits;
  // Foreground pixel indices (row * W + col) inside each point's ball,
  // ascending; filled only with keep_neighbors.
  std::vector<std::vector<std::uint32_t>> neighbors;
};

// Every foreground pixel contributes its feature at its surface position;
// each query point takes the (weighted) mean of the pixels within the radius.
// Throws ResolutionMismatch if the feature map is not at view resolution.
ViewContribution unproject_view(const ViewBundle& view, const FeatureMap& features,
                                std::span<const Vec3> points, const UnprojectOptions& options);

enum class ViewPooling { kMean, kMax };

// Accumulates view contributions in double precision; `finish` normalizes.
class ViewAccumulator {
 public:
  ViewAccumulator(std::vector<std::uint32_t> point_ids, ViewPooling pooling);

  void add(const ViewContribution& contribution);
  PointDescriptors finish() const;

 private:
  std::vector<std::uint32_t> point_ids_;
  ViewPooling pooling_;
  std::size_t dim_ = 0;
  std::vector<double> accum_;
  std::vector<std::uint32_t> coverage_;
};

PointDescriptors aggregate_views(std::span<const ViewContribution> per_view,
                                 std::vector<std::uint32_t> point_ids,
                                 ViewPooling pooling = ViewPooling::kMean);

// Copies the descriptor of the nearest covered point (Euclidean) into every
// uncovered row. Coverage stays 0. Throws NoCoverage if nothing is covered.
void fill_uncovered(PointDescriptors& descriptors, std::span<const Vec3> positions);

// Raw feature maps for one view as an extractor would deliver them.
struct ViewFeatures {
  std::vector<FeatureMap> diffusion;
  std::optional<FeatureMap> dino;
  std::optional<FeatureMap> fused;
};

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual ViewFeatures features(int view_id, const ViewBundle& view) const = 0;
};

struct SyntheticProviderConfig {
  int dim = 48;
  std::uint64_t seed = 0;
  Eigen::Matrix3d reference_rotation = Eigen::Matrix3d::Identity();
  // Emit per-timestep diffusion maps plus a half-resolution dino map instead
  // of one fused map, to drive the full aggregation path.
  bool emulate_extractor = false;
  int total_steps = 30;
};

class SyntheticProvider final : public FeatureProvider {
 public:
  explicit SyntheticProvider(SyntheticProviderConfig config) : config_(std::move(config)) {}
  ViewFeatures features(int view_id, const ViewBundle& view) const override;

 private:
  SyntheticProviderConfig config_;
};

class ManifestProvider final : public FeatureProvider {
 public:
  explicit ManifestProvider(FeatureManifest manifest) : manifest_(std::move(manifest)) {}
  ViewFeatures features(int view_id, const ViewBundle& view) const override;
  const FeatureManifest& manifest() const { return manifest_; }

 private:
  FeatureManifest manifest_;
};

struct ViewSpec {
  int view_id = 0;
  CameraPose camera;
};

std::vector<ViewSpec> default_views(int n, double distance, int resolution, double fov_y_deg);

struct DistillConfig {
  double r_fraction = 0.01;
  // Absolute ball radius; overrides r_fraction * bbox_diagonal when set.
  std::optional<double> radius;
  FusionConfig fusion;
  int total_steps = 30;
  bool invert_weights = false;
  ViewPooling pooling = ViewPooling::kMean;
  BallWeighting weighting = BallWeighting::kUniform;
  RenderOptions render;
  unsigned jobs = 1;
  bool fill_uncovered = true;
};

struct ViewFailure {
  int view_id = 0;
  std::string reason;
};

struct DistillResult {
  PointDescriptors descriptors;
  std::vector<ViewFailure> failures;
  double radius = 0.0;
};

// Combines one view's raw maps into a single unit-normalized map at the
// given resolution: normalize, aggregate timesteps, resample, fuse.
FeatureMap build_view_features(const ViewFeatures& features, const TimestepWeights& weights,
                               const FusionConfig& fusion, std::uint32_t height, std::uint32_t width);

// Renders each view, lifts its features onto the sampled points and averages
// over views. Views that fail (missing files, bad shapes) are recorded in
// `failures` and skipped. Views are processed in batches of `jobs` and
// reduced in view order, so the output does not depend on scheduling.
DistillResult distill(const Shape& shape, const SamplePlan& plan, std::span<const ViewSpec> views,
                      const FeatureProvider& provider, const DistillConfig& config);

}  // namespace diff3f
