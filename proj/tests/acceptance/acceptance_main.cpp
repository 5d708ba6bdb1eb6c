// Desk-scale acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "diff3f/commands.hpp"
#include "diff3f/distiller.hpp"
#include "diff3f/matcher.hpp"
#include "diff3f/run_config.hpp"

using namespace diff3f;

namespace {

constexpr int kBallInstances = 50;
constexpr std::size_t kBallMaxSize = 500;
constexpr double kBallSeconds = 10.0;
constexpr double kAggregationTol = 1e-6;
constexpr double kUnitNormTol = 1e-5;
constexpr double kFusionTol = 1e-6;
constexpr double kPermutationRecovery = 0.99;
constexpr double kPermutationSigma = 0.05;
constexpr double kRotationTol = 1e-4;
constexpr double kDepthFootprints = 2.0;
constexpr double kReprojectionPx = 0.5;
constexpr double kVisibilityDepthTol = 1e-3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome ball_query_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240101);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < kBallInstances; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(kBallMaxSize);
    const std::size_t n = 1 + rng.uniform_index(kBallMaxSize);
    const double r = 0.005 + 0.1 * rng.uniform();
    ViewBundle view;
    view.camera.height = view.camera.width = 64;
    view.depth.assign(view.pixel_count(), kBackgroundDepth);
    view.mask.assign(view.pixel_count(), 0);
    view.position.assign(view.pixel_count(), Vec3::Zero());
    // Foreground pixels scattered over the image, the rest background.
    std::vector<std::size_t> pixels;
    for (std::size_t p = 0; p < view.pixel_count() && pixels.size() < m; ++p) {
      if (rng.uniform() < 0.2 || view.pixel_count() - p <= m - pixels.size()) pixels.push_back(p);
    }
    for (auto p : pixels) {
      view.mask[p] = 1;
      view.depth[p] = 2.0f;
      view.position[p] = Vec3(rng.uniform(), rng.uniform(), rng.uniform()) * 0.5;
    }
    std::vector<Vec3> points(n);
    for (auto& q : points) q = Vec3(rng.uniform(), rng.uniform(), rng.uniform()) * 0.5;
    FeatureMap features(FeatureKind::kFused, 64, 64, 2);
    for (auto& v : features.data) v = static_cast<float>(rng.normal());
    UnprojectOptions opts{r};
    opts.keep_neighbors = true;
    const auto c = unproject_view(view, features, points, opts);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint32_t> expected;
      for (auto p : pixels) {
        const Vec3 diff = view.position[p] - points[i];
        if (diff.x() * diff.x() + diff.y() * diff.y() + diff.z() * diff.z() <= r * r) {
          expected.push_back(static_cast<std::uint32_t>(p));
        }
      }
      mismatches += c.neighbors[i] != expected;
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < kBallSeconds,
          fmt("%.0f instances, %.0f mismatched neighbor sets, %.2f s", kBallInstances, mismatches, elapsed)};
}

Outcome timestep_aggregation() {
  const auto w = make_timestep_weights(30);
  bool window_ok = w.window.size() == 9;
  for (std::size_t i = 0; window_ok && i < 9; ++i) {
    window_ok = w.window[i] == 8 - static_cast<int>(i) && std::abs(w.weights[i] - (0.1 + 0.9 * i / 8.0)) < 1e-12;
  }
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const std::uint32_t h = 8, wd = 7, ch = 12;
    std::vector<FeatureMap> maps;
    for (int step = 0; step <= 8; ++step) {
      FeatureMap m(FeatureKind::kDiffusion, h, wd, ch);
      m.timestep = step;
      for (auto& v : m.data) v = static_cast<float>(rng.normal());
      maps.push_back(m);
    }
    const auto out = aggregate_timesteps(maps, w);
    for (std::size_t p = 0; p < std::size_t{h} * wd; ++p) {
      std::vector<double> acc(ch, 0.0);
      for (const auto& m : maps) {
        const double weight = 0.1 + 0.9 * (8 - *m.timestep) / 8.0;
        for (std::uint32_t c = 0; c < ch; ++c) acc[c] += weight * m.data[p * ch + c];
      }
      double norm = 0.0;
      for (double v : acc) norm += v * v;
      norm = std::sqrt(norm);
      for (std::uint32_t c = 0; c < ch; ++c) worst = std::max(worst, std::abs(out.data[p * ch + c] - acc[c] / norm));
    }
  }
  return {window_ok && worst <= kAggregationTol,
          std::string("window 8..0 weights 0.1..1.0 ") + (window_ok ? "ok" : "wrong") +
              fmt(", max deviation %.2e", worst)};
}

Outcome normalization_fusion() {
  const Shape mesh = normalize(testing::lumpy_mesh(20, 30));
  DistillConfig cfg;
  const auto r = distill(mesh, all_points(mesh), default_views(16, 2.5, 128, 50), SyntheticProvider({}), cfg);
  double worst_norm = 0.0;
  for (std::size_t i = 0; i < r.descriptors.size(); ++i) {
    double s = 0.0;
    for (float v : r.descriptors.row(i)) s += double(v) * v;
    worst_norm = std::max(worst_norm, std::abs(std::sqrt(s) - 1.0));
  }

  auto pixel = [](std::vector<float> v, FeatureKind kind) {
    FeatureMap m(kind, 1, 1, static_cast<std::uint32_t>(v.size()));
    m.data = std::move(v);
    return m;
  };
  double worst_fuse = 0.0;
  // [0.5 * (1, 0) || 0.5 * (0, 1)] / |.| = (1, 0, 0, 1) / sqrt(2)
  const auto a = fuse(pixel({1, 0}, FeatureKind::kDiffusion), pixel({0, 1}, FeatureKind::kDino), {0.5});
  const double h = std::sqrt(0.5);
  const double expect_a[] = {h, 0, 0, h};
  for (int c = 0; c < 4; ++c) worst_fuse = std::max(worst_fuse, std::abs(a.data[c] - expect_a[c]));
  // [0.5 * (0.6, 0.8) || 0.5 * (1, 0, 0)] = (0.3, 0.4, 0.5, 0, 0), norm sqrt(0.5)
  const auto b = fuse(pixel({0.6f, 0.8f}, FeatureKind::kDiffusion), pixel({1, 0, 0}, FeatureKind::kDino), {0.5});
  const double expect_b[] = {0.3 / h, 0.4 / h, 0.5 / h, 0, 0};
  for (int c = 0; c < 5; ++c) worst_fuse = std::max(worst_fuse, std::abs(b.data[c] - expect_b[c]));
  return {worst_norm <= kUnitNormTol && worst_fuse <= kFusionTol,
          fmt("max |norm - 1| %.2e over %.0f descriptors, max fusion deviation %.2e", worst_norm,
              static_cast<double>(r.descriptors.size()), worst_fuse)};
}

Outcome self_correspondence() {
  const Shape mesh = normalize(testing::lumpy_mesh(25, 40));
  DistillConfig cfg;
  cfg.fill_uncovered = false;
  const auto d = distill(mesh, all_points(mesh), default_views(16, 2.5, 256, 50), SyntheticProvider({}), cfg).descriptors;
  const auto result = match(d, d);
  std::size_t covered = 0, identity = 0;
  GroundTruth gt;
  for (std::size_t i = 0; i < d.size(); ++i) {
    gt[d.point_ids[i]] = d.point_ids[i];
    if (!d.covered(i)) continue;
    ++covered;
    identity += result.assignment[i] == d.point_ids[i];
  }
  EvalOptions opts;
  opts.exclude_uncovered = true;
  const auto report = evaluate(result, gt, mesh, opts, d.coverage);
  return {covered > 0 && identity == covered && report.err == 0.0,
          fmt("%.0f/%.0f covered points map to themselves, err %.3g", identity, covered, report.err) +
              fmt(" (%.0f vertices)", static_cast<double>(mesh.size()))};
}

Outcome permutation_recovery() {
  constexpr std::size_t n = 500, dim = 64;
  Rng rng(4242);
  PointDescriptors a;
  a.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    a.point_ids.push_back(static_cast<std::uint32_t>(i));
    a.coverage.push_back(1);
    std::vector<double> row(dim);
    double s = 0;
    for (auto& v : row) {
      v = rng.normal();
      s += v * v;
    }
    for (double v : row) a.values.push_back(static_cast<float>(v / std::sqrt(s)));
  }
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  PointDescriptors b = a;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      b.values[perm[i] * dim + k] = a.values[i * dim + k] + static_cast<float>(kPermutationSigma * rng.normal());
    }
  }
  const auto r = match(a, b);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += r.assignment[i] == perm[i];
  const double rate = static_cast<double>(hits) / n;
  return {rate >= kPermutationRecovery, fmt("recovered %.1f%% of the permutation", 100.0 * rate)};
}

Outcome rotation_robustness() {
  const Shape mesh = normalize(testing::lumpy_mesh(25, 40, 7));
  const int n_views = 100;
  const auto grid = camera_grid(n_views);
  const double step = 360.0 / grid.azimuths;
  const Shape turned = rotate_about_vertical(mesh, step);
  const auto views = default_views(n_views, 2.5, 256, 50);
  DistillConfig cfg;
  cfg.radius = 0.01 * mesh.bbox_diagonal;
  SyntheticProviderConfig pc;
  const auto base = distill(mesh, all_points(mesh), views, SyntheticProvider(pc), cfg).descriptors;
  pc.reference_rotation = Eigen::AngleAxisd(-step * testing::kPi / 180.0, Vec3::UnitY()).toRotationMatrix();
  const auto moved = distill(turned, all_points(turned), views, SyntheticProvider(pc), cfg).descriptors;
  double worst = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    worst = std::max(worst, static_cast<double>(std::abs(base.values[i] - moved.values[i])));
  }
  const bool same_assignment = match(base, base).assignment == match(moved, moved).assignment;
  return {worst <= kRotationTol && same_assignment,
          fmt("rotation %.0f deg, max descriptor deviation %.2e, ", step, worst) +
              (same_assignment ? "identical assignments" : "assignments differ")};
}

Outcome renderer() {
  const Shape sphere = testing::icosphere(4, 0.5);
  CameraPose cam;
  cam.height = cam.width = 256;
  const ViewBundle view = render_mesh(sphere, cam);
  const std::size_t center = static_cast<std::size_t>(128) * 256 + 128;
  const double footprint = 2.0 / cam.focal_px();
  const double depth_error = view.mask[center] ? std::abs(view.depth[center] - 2.0) : INFINITY;

  double reprojection = testing::max_reprojection_px(view);
  const Shape lumpy = normalize(testing::lumpy_mesh(10, 10, 5));
  std::size_t visibility_errors = 0, checked = 0;
  for (const auto& c : sample_cameras(6, 2.5, 96, 96)) {
    const ViewBundle v = render_mesh(lumpy, c);
    reprojection = std::max(reprojection, testing::max_reprojection_px(v));
    const Vec3 eye = c.position();
    const Vec3 forward = -eye.normalized();
    for (int row = 0; row < 96; ++row) {
      for (int col = 0; col < 96; ++col) {
        const std::size_t i = static_cast<std::size_t>(row) * 96 + col;
        const Vec3 d = c.pixel_ray(col, row);
        const double t = testing::nearest_hit(lumpy, eye, d);
        ++checked;
        if (!v.mask[i]) {
          visibility_errors += std::isfinite(t);
          continue;
        }
        visibility_errors += !(std::abs(t * d.dot(forward) - v.depth[i]) < kVisibilityDepthTol);
      }
    }
  }
  const bool pass = lumpy.faces->size() == 200 && depth_error <= kDepthFootprints * footprint &&
                    reprojection <= kReprojectionPx && visibility_errors == 0;
  return {pass, fmt("center depth error %.2e (limit %.2e), max reprojection %.3f px, ", depth_error,
                    kDepthFootprints * footprint, reprojection) +
                    fmt("%.0f/%.0f pixels disagree with ray casting", visibility_errors, checked)};
}

Outcome metrics() {
  const Shape target = testing::make_shape({{0, 0, 0}, {0.2, 0, 0}, {1, 0, 0}});
  CorrespondenceResult r;
  r.source_ids = {0, 1};
  r.target_ids = {0, 1, 2};
  r.assignment = {0, 0};
  r.score = {1, 1};
  EvalOptions opts;
  opts.tolerances = {0.01};
  const auto hand = evaluate(r, {{0, 0}, {1, 1}}, target, opts);
  const bool hand_ok = hand.diameter == 1.0 && hand.err == 0.1 && hand.acc.at(0.01) == 0.5;

  Rng rng(5);
  const Shape cloud = testing::random_points(300, 9);
  CorrespondenceResult rr;
  GroundTruth gt;
  for (std::uint32_t i = 0; i < 300; ++i) {
    rr.source_ids.push_back(i);
    rr.target_ids.push_back(i);
    rr.assignment.push_back(static_cast<std::uint32_t>(rng.uniform_index(300)));
    rr.score.push_back(0.0);
    gt[i] = i;
  }
  EvalOptions grid;
  grid.tolerances.clear();
  for (int k = 1; k <= 20; ++k) grid.tolerances.push_back(k / 20.0);
  const auto report = evaluate(rr, gt, cloud, grid);
  bool monotone = true;
  double prev = -1.0;
  for (const auto& [g, a] : report.acc) {
    monotone = monotone && a >= prev;
    prev = a;
  }
  return {hand_ok && monotone && report.acc.size() == 20,
          fmt("hand example err %.17g acc %.17g, ", hand.err, hand.acc.at(0.01)) +
              (monotone ? "acc monotone over 20 tolerances" : "acc not monotone")};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome determinism() {
  const testing::TempDir dir("acceptance_det");
  write_ply(dir / "shape.ply", testing::lumpy_mesh(20, 25, 13));
  RunConfig cfg;
  cfg.n_views = 8;
  cfg.resolution = 128;
  cfg.seed = 31;
  cfg.sample_count = 300;
  cmd_distill(cfg, dir / "shape.ply", dir / "a.d3ff");
  cmd_distill(cfg, dir / "shape.ply", dir / "b.d3ff");
  const std::string a = slurp(dir / "a.d3ff"), b = slurp(dir / "b.d3ff");
  const bool same = !a.empty() && a == b && slurp(dir / "a.json") == slurp(dir / "b.json");
  return {same, same ? fmt("%.0f-byte descriptor files identical", static_cast<double>(a.size()))
                     : std::string("descriptor files differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ball_query_oracle", ball_query_oracle},
      {"timestep_aggregation", timestep_aggregation},
      {"normalization_fusion", normalization_fusion},
      {"self_correspondence", self_correspondence},
      {"permutation_recovery", permutation_recovery},
      {"rotation_robustness", rotation_robustness},
      {"renderer", renderer},
      {"metrics", metrics},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
