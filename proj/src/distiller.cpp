#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "diff3f/ball_query.hpp"
#include "diff3f/distiller.hpp"
#include "diff3f/error.hpp"
#include "diff3f/parallel.hpp"
#include "diff3f/synthetic.hpp"

namespace diff3f {

namespace {

void normalize_in_place(std::span<double> v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 <= 0.0) return;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

void check_same_dims(const FeatureMap& a, const FeatureMap& b, const char* what) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": feature maps differ in shape");
  }
}

// Weighted sum in double precision, pixel-major.
std::vector<double> timestep_sum(std::span<const FeatureMap> maps, const TimestepWeights& weights) {
  if (maps.empty()) throw Error(ErrorCode::kWindowMismatch, "no timestep maps given");
  for (const auto& m : maps) check_same_dims(maps.front(), m, "aggregate_timesteps");
  if (maps.size() != weights.window.size()) {
    throw Error(ErrorCode::kWindowMismatch, "expected " + std::to_string(weights.window.size()) +
                                                " timestep maps, got " + std::to_string(maps.size()));
  }
  std::vector<double> sum(maps.front().data.size(), 0.0);
  std::set<int> used;
  for (std::size_t k = 0; k < weights.window.size(); ++k) {
    const int step = weights.window[k];
    const FeatureMap* match = nullptr;
    for (const auto& m : maps) {
      if (m.timestep == step) {
        if (match) throw Error(ErrorCode::kWindowMismatch, "timestep " + std::to_string(step) + " given twice");
        match = &m;
      }
    }
    if (!match) throw Error(ErrorCode::kWindowMismatch, "missing timestep " + std::to_string(step));
    const double w = weights.weights[k];
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += w * match->data[i];
  }
  return sum;
}

FeatureMap from_doubles(const FeatureMap& like, FeatureKind kind, const std::vector<double>& values) {
  FeatureMap out(kind, like.height, like.width, like.channels);
  out.view_id = like.view_id;
  out.camera = like.camera;
  for (std::size_t i = 0; i < values.size(); ++i) out.data[i] = static_cast<float>(values[i]);
  return out;
}

std::optional<std::uint32_t> nearest_covered(const PointDescriptors& d, std::span<const Vec3> positions,
                                             std::size_t i) {
  std::optional<std::uint32_t> best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (!d.covered(j)) continue;
    const double d2 = (positions[j] - positions[i]).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<std::uint32_t>(j);
    }
  }
  return best;
}

}  // namespace

TimestepWeights make_timestep_weights(int total_steps, bool invert) {
  if (total_steps < 0) throw Error(ErrorCode::kInvalidArgument, "total steps must be >= 0");
  TimestepWeights w;
  w.total_steps = total_steps;
  const int first = (total_steps + 3) / 4;  // ceil(T / 4)
  for (int s = first; s >= 0; --s) w.window.push_back(s);
  const std::size_t m = w.window.size();
  for (std::size_t i = 0; i < m; ++i) {
    w.weights.push_back(m == 1 ? 1.0 : 0.1 + 0.9 * static_cast<double>(i) / static_cast<double>(m - 1));
  }
  if (invert) std::reverse(w.weights.begin(), w.weights.end());
  return w;
}

FeatureMap normalize_map(const FeatureMap& map) {
  FeatureMap out = map;
  std::vector<double> buffer(map.channels);
  for (std::size_t p = 0; p < map.pixel_count(); ++p) {
    auto px = out.pixel(p);
    for (std::size_t c = 0; c < px.size(); ++c) buffer[c] = px[c];
    normalize_in_place(buffer);
    for (std::size_t c = 0; c < px.size(); ++c) px[c] = static_cast<float>(buffer[c]);
  }
  return out;
}

FeatureMap weighted_timestep_sum(std::span<const FeatureMap> maps, const TimestepWeights& weights) {
  return from_doubles(maps.empty() ? FeatureMap() : maps.front(), FeatureKind::kDiffusion,
                      timestep_sum(maps, weights));
}

FeatureMap aggregate_timesteps(std::span<const FeatureMap> maps, const TimestepWeights& weights) {
  auto sum = timestep_sum(maps, weights);
  const std::size_t channels = maps.front().channels;
  for (std::size_t off = 0; off < sum.size(); off += channels) {
    normalize_in_place(std::span<double>(sum.data() + off, channels));
  }
  return from_doubles(maps.front(), FeatureKind::kDiffusion, sum);
}

FeatureMap fuse(const FeatureMap& diff, const FeatureMap& dino, const FusionConfig& config) {
  if (diff.height != dino.height || diff.width != dino.width) {
    throw Error(ErrorCode::kShapeMismatch, "fuse: diffusion and dino maps differ in resolution");
  }
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fusion alpha must lie in [0, 1]");
  }
  const std::uint32_t channels = diff.channels + dino.channels;
  FeatureMap out(FeatureKind::kFused, diff.height, diff.width, channels);
  out.view_id = diff.view_id;
  out.camera = diff.camera;
  std::vector<double> buffer(channels);
  for (std::size_t p = 0; p < diff.pixel_count(); ++p) {
    const auto a = diff.pixel(p);
    const auto b = dino.pixel(p);
    for (std::size_t c = 0; c < a.size(); ++c) buffer[c] = config.alpha * a[c];
    for (std::size_t c = 0; c < b.size(); ++c) buffer[a.size() + c] = (1.0 - config.alpha) * b[c];
    normalize_in_place(buffer);
    auto px = out.pixel(p);
    for (std::size_t c = 0; c < channels; ++c) px[c] = static_cast<float>(buffer[c]);
  }
  return out;
}

FeatureMap resample_bilinear(const FeatureMap& map, std::uint32_t height, std::uint32_t width) {
  if (map.height == height && map.width == width) return map;
  if (map.height == 0 || map.width == 0 || height == 0 || width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot resample an empty feature map");
  }
  FeatureMap out(map.kind, height, width, map.channels);
  out.view_id = map.view_id;
  out.timestep = map.timestep;
  out.camera = map.camera;
  const double sy = static_cast<double>(map.height) / height;
  const double sx = static_cast<double>(map.width) / width;
  for (std::uint32_t r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(map.height - 1));
    const auto y0 = static_cast<std::uint32_t>(std::floor(y));
    const std::uint32_t y1 = std::min(y0 + 1, map.height - 1);
    const double fy = y - y0;
    for (std::uint32_t c = 0; c < width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(map.width - 1));
      const auto x0 = static_cast<std::uint32_t>(std::floor(x));
      const std::uint32_t x1 = std::min(x0 + 1, map.width - 1);
      const double fx = x - x0;
      const auto p00 = map.pixel(static_cast<std::size_t>(y0) * map.width + x0);
      const auto p01 = map.pixel(static_cast<std::size_t>(y0) * map.width + x1);
      const auto p10 = map.pixel(static_cast<std::size_t>(y1) * map.width + x0);
      const auto p11 = map.pixel(static_cast<std::size_t>(y1) * map.width + x1);
      auto dst = out.pixel(static_cast<std::size_t>(r) * width + c);
      for (std::size_t k = 0; k < map.channels; ++k) {
        const double top = p00[k] + fx * (p01[k] - p00[k]);
        const double bottom = p10[k] + fx * (p11[k] - p10[k]);
        dst[k] = static_cast<float>(top + fy * (bottom - top));
      }
    }
  }
  return out;
}

ViewContribution unproject_view(const ViewBundle& view, const FeatureMap& features,
                                std::span<const Vec3> points, const UnprojectOptions& options) {
  if (features.height != static_cast<std::uint32_t>(view.height()) ||
      features.width != static_cast<std::uint32_t>(view.width())) {
    throw Error(ErrorCode::kResolutionMismatch,
                "feature map is " + std::to_string(features.height) + "x" + std::to_string(features.width) +
                    " but the view is " + std::to_string(view.height()) + "x" + std::to_string(view.width()));
  }
  if (!(options.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ball radius must be positive");

  std::vector<std::uint32_t> pixels;
  std::vector<Vec3> samples;
  for (std::size_t p = 0; p < view.pixel_count(); ++p) {
    if (!view.mask[p]) continue;
    pixels.push_back(static_cast<std::uint32_t>(p));
    samples.push_back(view.position[p]);
  }
  const BallQuery query(samples, options.radius);

  ViewContribution out;
  out.dim = features.channels;
  out.vectors.assign(points.size() * out.dim, 0.0f);
  out.hits.assign(points.size(), 0);
  if (options.keep_neighbors) out.neighbors.resize(points.size());

  const double sigma = 0.5 * options.radius;
  std::vector<std::uint32_t> found;
  std::vector<double> sum(out.dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    found.clear();
    query.query(points[i], found);
    if (found.empty()) continue;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::uint32_t s : found) {
      double w = 1.0;
      if (options.weighting == BallWeighting::kGaussian) {
        w = std::exp(-(samples[s] - points[i]).squaredNorm() / (2.0 * sigma * sigma));
      }
      const auto f = features.pixel(pixels[s]);
      for (std::size_t c = 0; c < out.dim; ++c) sum[c] += w * f[c];
    }
    normalize_in_place(sum);
    float* dst = out.vectors.data() + i * out.dim;
    for (std::size_t c = 0; c < out.dim; ++c) dst[c] = static_cast<float>(sum[c]);
    out.hits[i] = static_cast<std::uint32_t>(found.size());
    if (options.keep_neighbors) {
      auto& nb = out.neighbors[i];
      nb.reserve(found.size());
      for (std::uint32_t s : found) nb.push_back(pixels[s]);
    }
  }
  return out;
}

ViewAccumulator::ViewAccumulator(std::vector<std::uint32_t> point_ids, ViewPooling pooling)
    : point_ids_(std::move(point_ids)), pooling_(pooling), coverage_(point_ids_.size(), 0) {}

void ViewAccumulator::add(const ViewContribution& contribution) {
  if (contribution.hits.size() != point_ids_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "view contribution covers a different point set");
  }
  if (dim_ == 0) {
    dim_ = contribution.dim;
    const double init = pooling_ == ViewPooling::kMax ? -std::numeric_limits<double>::infinity() : 0.0;
    accum_.assign(point_ids_.size() * dim_, init);
  } else if (contribution.dim != dim_) {
    throw Error(ErrorCode::kDimMismatch, "view contribution has dim " + std::to_string(contribution.dim) +
                                             ", expected " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < point_ids_.size(); ++i) {
    if (contribution.hits[i] == 0) continue;
    ++coverage_[i];
    const float* src = contribution.vectors.data() + i * dim_;
    double* dst = accum_.data() + i * dim_;
    if (pooling_ == ViewPooling::kMean) {
      for (std::size_t c = 0; c < dim_; ++c) dst[c] += src[c];
    } else {
      for (std::size_t c = 0; c < dim_; ++c) dst[c] = std::max(dst[c], static_cast<double>(src[c]));
    }
  }
}

PointDescriptors ViewAccumulator::finish() const {
  PointDescriptors out;
  out.point_ids = point_ids_;
  out.dim = dim_;
  out.values.assign(point_ids_.size() * dim_, 0.0f);
  out.coverage = coverage_;
  std::vector<double> row(dim_);
  for (std::size_t i = 0; i < point_ids_.size(); ++i) {
    if (coverage_[i] == 0) continue;
    const double* src = accum_.data() + i * dim_;
    double norm2 = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      row[c] = pooling_ == ViewPooling::kMean ? src[c] / coverage_[i] : src[c];
      norm2 += row[c] * row[c];
    }
    if (!(norm2 > 0.0)) {
      // Contributions cancelled out; treat as unseen so fill can repair it.
      out.coverage[i] = 0;
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t c = 0; c < dim_; ++c) out.values[i * dim_ + c] = static_cast<float>(row[c] * inv);
  }
  return out;
}

PointDescriptors aggregate_views(std::span<const ViewContribution> per_view,
                                 std::vector<std::uint32_t> point_ids, ViewPooling pooling) {
  ViewAccumulator acc(std::move(point_ids), pooling);
  for (const auto& view : per_view) acc.add(view);
  return acc.finish();
}

void fill_uncovered(PointDescriptors& descriptors, std::span<const Vec3> positions) {
  if (positions.size() != descriptors.size()) {
    throw Error(ErrorCode::kShapeMismatch, "positions do not match descriptor rows");
  }
  if (descriptors.size() == 0) return;
  if (std::none_of(descriptors.coverage.begin(), descriptors.coverage.end(),
                   [](std::uint32_t c) { return c > 0; })) {
    throw Error(ErrorCode::kNoCoverage, "no point is covered by any view");
  }
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    if (descriptors.covered(i)) continue;
    const auto source = *nearest_covered(descriptors, positions, i);
    const auto from = descriptors.row(source);
    std::copy(from.begin(), from.end(), descriptors.row(i).begin());
  }
}

ViewFeatures SyntheticProvider::features(int view_id, const ViewBundle& view) const {
  ViewFeatures out;
  if (!config_.emulate_extractor) {
    auto map = synthetic_features(view, config_.dim, config_.seed, config_.reference_rotation);
    map.view_id = view_id;
    out.fused = std::move(map);
    return out;
  }
  const auto weights = make_timestep_weights(config_.total_steps);
  for (int step : weights.window) {
    auto map = synthetic_features(view, config_.dim, config_.seed + 1 + static_cast<std::uint64_t>(step),
                                  config_.reference_rotation);
    // Unnormalized magnitudes, as real activations would be.
    for (auto& v : map.data) v *= 1.0f + 0.5f * static_cast<float>(step);
    map.kind = FeatureKind::kDiffusion;
    map.timestep = step;
    map.view_id = view_id;
    out.diffusion.push_back(std::move(map));
  }
  const int dino_dim = std::max(8, (config_.dim / 2) & ~1);
  auto dino = synthetic_features(view, dino_dim, config_.seed + 7919, config_.reference_rotation);
  dino = resample_bilinear(dino, std::max(1u, dino.height / 2), std::max(1u, dino.width / 2));
  dino.kind = FeatureKind::kDino;
  dino.view_id = view_id;
  out.dino = std::move(dino);
  return out;
}

ViewFeatures ManifestProvider::features(int view_id, const ViewBundle&) const {
  const auto it = std::find_if(manifest_.views.begin(), manifest_.views.end(),
                               [&](const ManifestView& v) { return v.view_id == view_id; });
  if (it == manifest_.views.end()) {
    throw Error(ErrorCode::kInvalidManifest, "manifest has no view " + std::to_string(view_id));
  }
  ViewFeatures out;
  for (const auto& entry : it->diffusion) {
    auto map = read_feature_map(manifest_.resolve(entry.path));
    if (map.timestep && *map.timestep != entry.timestep) {
      throw Error(ErrorCode::kInvalidManifest, "sidecar timestep disagrees with manifest for " +
                                                   entry.path.string());
    }
    map.kind = FeatureKind::kDiffusion;
    map.timestep = entry.timestep;
    map.view_id = view_id;
    out.diffusion.push_back(std::move(map));
  }
  if (it->dino) {
    out.dino = read_feature_map(manifest_.resolve(*it->dino));
    out.dino->kind = FeatureKind::kDino;
    out.dino->timestep.reset();
  }
  if (it->fused) {
    out.fused = read_feature_map(manifest_.resolve(*it->fused));
    out.fused->timestep.reset();
  }
  return out;
}

std::vector<ViewSpec> default_views(int n, double distance, int resolution, double fov_y_deg) {
  const auto cameras = sample_cameras(n, distance, resolution, resolution, fov_y_deg);
  std::vector<ViewSpec> views;
  views.reserve(cameras.size());
  for (std::size_t i = 0; i < cameras.size(); ++i) views.push_back({static_cast<int>(i), cameras[i]});
  return views;
}

FeatureMap build_view_features(const ViewFeatures& features, const TimestepWeights& weights,
                               const FusionConfig& fusion, std::uint32_t height, std::uint32_t width) {
  if (features.fused) {
    return normalize_map(resample_bilinear(normalize_map(*features.fused), height, width));
  }
  if (features.diffusion.empty()) {
    throw Error(ErrorCode::kInvalidManifest, "view has neither diffusion nor fused features");
  }
  std::vector<FeatureMap> normalized;
  normalized.reserve(features.diffusion.size());
  for (const auto& m : features.diffusion) normalized.push_back(normalize_map(m));
  FeatureMap diff = normalize_map(resample_bilinear(aggregate_timesteps(normalized, weights), height, width));
  if (!features.dino) return diff;
  const FeatureMap dino = normalize_map(resample_bilinear(normalize_map(*features.dino), height, width));
  return fuse(diff, dino, fusion);
}

DistillResult distill(const Shape& shape, const SamplePlan& plan, std::span<const ViewSpec> views,
                      const FeatureProvider& provider, const DistillConfig& config) {
  DistillResult result;
  result.radius = config.radius ? *config.radius : config.r_fraction * shape.bbox_diagonal;
  if (!(result.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ball radius must be positive");

  std::vector<Vec3> positions;
  positions.reserve(plan.indices.size());
  for (auto idx : plan.indices) {
    if (idx >= shape.vertices.size()) throw Error(ErrorCode::kInvalidArgument, "sample index out of range");
    positions.push_back(shape.vertices[idx]);
  }

  const auto weights = make_timestep_weights(config.total_steps, config.invert_weights);
  UnprojectOptions unproject;
  unproject.radius = result.radius;
  unproject.weighting = config.weighting;

  ViewAccumulator accumulator(plan.indices, config.pooling);
  const std::size_t batch = resolve_jobs(config.jobs);
  for (std::size_t start = 0; start < views.size(); start += batch) {
    const std::size_t count = std::min(batch, views.size() - start);
    std::vector<std::optional<ViewContribution>> contributions(count);
    std::vector<std::string> errors(count);
    parallel_for(count, config.jobs, [&](std::size_t k) {
      const ViewSpec& spec = views[start + k];
      try {
        const ViewBundle view = render_view(shape, spec.camera, config.render);
        const ViewFeatures raw = provider.features(spec.view_id, view);
        const FeatureMap map = build_view_features(raw, weights, config.fusion,
                                                   static_cast<std::uint32_t>(view.height()),
                                                   static_cast<std::uint32_t>(view.width()));
        contributions[k] = unproject_view(view, map, positions, unproject);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    });
    for (std::size_t k = 0; k < count; ++k) {
      const int view_id = views[start + k].view_id;
      if (!contributions[k]) {
        result.failures.push_back({view_id, errors[k]});
        continue;
      }
      try {
        accumulator.add(*contributions[k]);
      } catch (const Error& e) {
        result.failures.push_back({view_id, e.what()});
      }
    }
  }

  result.descriptors = accumulator.finish();
  if (result.descriptors.dim == 0) {
    throw Error(ErrorCode::kNoCoverage, "no view produced features");
  }
  if (config.fill_uncovered) fill_uncovered(result.descriptors, positions);
  return result;
}

}  // namespace diff3f
