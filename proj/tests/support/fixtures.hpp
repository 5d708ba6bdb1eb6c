#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>

#include "diff3f/rng.hpp"
#include "diff3f/shape.hpp"

namespace diff3f::testing {

inline constexpr double kPi = 3.14159265358979323846;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("diff3f_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Shape make_shape(std::vector<Vec3> vertices, std::vector<Face> faces = {}) {
  Shape s;
  s.vertices = std::move(vertices);
  if (!faces.empty()) s.faces = std::move(faces);
  s.bbox_diagonal = bbox_diagonal(s.vertices);
  return s;
}

// Icosahedron subdivided `levels` times, projected onto a sphere.
inline Shape icosphere(int levels, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                         {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < levels; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]) / 2.0);
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      mid[key] = idx;
      return idx;
    };
    std::vector<Face> next;
    for (const auto& tri : f) {
      const auto a = midpoint(tri[0], tri[1]);
      const auto b = midpoint(tri[1], tri[2]);
      const auto c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) p = p.normalized() * radius;
  return make_shape(std::move(v), std::move(f));
}

// Closed UV-sphere style surface with `rings` latitude rings of `segments`
// vertices plus two poles, radially perturbed so it has no symmetry.
inline Shape lumpy_mesh(int rings, int segments, std::uint64_t seed = 3) {
  Rng rng(seed);
  const double a = 0.15 * rng.uniform(), b = 0.15 * rng.uniform(), c = 0.1 * rng.uniform();
  auto radius = [&](double theta, double phi) {
    return 0.5 * (1.0 + a * std::sin(2 * theta) * std::cos(phi) + b * std::cos(3 * phi) * std::sin(theta) +
                  c * std::cos(theta + 0.7));
  };
  std::vector<Vec3> v;
  std::vector<Face> f;
  v.push_back({0, radius(0, 0), 0});
  for (int i = 1; i <= rings; ++i) {
    const double theta = kPi * i / (rings + 1);
    for (int j = 0; j < segments; ++j) {
      const double phi = 2 * kPi * j / segments;
      const double r = radius(theta, phi);
      v.push_back({r * std::sin(theta) * std::cos(phi), r * std::cos(theta) * 1.3, r * std::sin(theta) * std::sin(phi)});
    }
  }
  v.push_back({0, -radius(kPi, 0) * 1.3, 0});
  auto idx = [&](int ring, int seg) { return static_cast<std::uint32_t>(1 + (ring - 1) * segments + (seg % segments)); };
  const auto south = static_cast<std::uint32_t>(v.size() - 1);
  for (int j = 0; j < segments; ++j) f.push_back({0, idx(1, j + 1), idx(1, j)});
  for (int i = 1; i < rings; ++i) {
    for (int j = 0; j < segments; ++j) {
      f.push_back({idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)});
      f.push_back({idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)});
    }
  }
  for (int j = 0; j < segments; ++j) f.push_back({south, idx(rings, j), idx(rings, j + 1)});
  return make_shape(std::move(v), std::move(f));
}

inline Shape random_points(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<Vec3> v(n);
  for (auto& p : v) p = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5) * scale;
  return make_shape(std::move(v));
}

// Points spread over a human-like stick figure: cylinder shells for torso,
// head, arms and legs. Roughly 1.8 units tall before normalization.
inline Shape stick_figure(std::size_t n, std::uint64_t seed) {
  struct Cylinder {
    Vec3 a, b;
    double r;
  };
  const std::vector<Cylinder> parts = {
      {{0, 0.95, 0}, {0, 1.45, 0}, 0.16},    // torso
      {{0, 1.62, 0}, {0, 1.7, 0}, 0.11},     // head
      {{-0.1, 0.9, 0}, {-0.13, 0.05, 0}, 0.07},  // left leg
      {{0.1, 0.9, 0}, {0.13, 0.05, 0}, 0.07},    // right leg
      {{-0.2, 1.42, 0}, {-0.75, 1.42, 0}, 0.05}, // left arm
      {{0.2, 1.42, 0}, {0.75, 1.42, 0}, 0.05},   // right arm
  };
  std::vector<double> area;
  double total = 0.0;
  for (const auto& c : parts) {
    const double a = 2 * kPi * c.r * (c.b - c.a).norm();
    area.push_back(a);
    total += a;
  }
  Rng rng(seed);
  std::vector<Vec3> v;
  v.reserve(n);
  while (v.size() < n) {
    double pick = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < parts.size() && pick >= area[k]) pick -= area[k++];
    const auto& c = parts[k];
    // A point on the axis pushed out along a random radial direction.
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    const Vec3 axis = (c.b - c.a).normalized();
    const double s = rng.uniform();
    Vec3 base = c.a + s * (c.b - c.a);
    Vec3 radial = dir - dir.dot(axis) * axis;
    if (radial.norm() < 1e-9) continue;
    v.push_back(base + c.r * radial.normalized());
  }
  return make_shape(std::move(v));
}

}  // namespace diff3f::testing
