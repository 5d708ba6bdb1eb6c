#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace diff3f {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

// Maps normalized coordinates back to the file's coordinates:
//   original = normalized * scale + centroid
struct Normalization {
  Vec3 centroid = Vec3::Zero();
  double scale = 1.0;

  Vec3 to_original(const Vec3& p) const { return p * scale + centroid; }
  Vec3 to_normalized(const Vec3& p) const { return (p - centroid) / scale; }
};

struct Shape {
  std::vector<Vec3> vertices;
  std::optional<std::vector<Face>> faces;
  Normalization normalization;
  double bbox_diagonal = 0.0;

  bool has_faces() const { return faces.has_value() && !faces->empty(); }
  std::size_t size() const { return vertices.size(); }
};

struct SamplePlan {
  std::vector<std::uint32_t> indices;
  std::uint64_t seed = 0;
};

enum class ShapeKind { kAuto, kMesh, kPointCloud };

// Reads OBJ, PLY (ascii or binary little-endian) or OFF, chosen by extension.
// Polygons are fan-triangulated; faces with repeated indices are dropped.
// The returned shape carries raw file coordinates and an identity
// normalization; its bbox_diagonal is that of the raw coordinates.
Shape load_shape(const std::filesystem::path& path,
                 ShapeKind kind = ShapeKind::kAuto);

// Centers the vertex centroid at the origin and scales the longest bounding
// box edge to 1. Composes with any normalization already recorded on the
// input so that `normalization.to_original` always recovers file coordinates.
Shape normalize(const Shape& shape);

// Uniform sampling without replacement (partial Fisher-Yates).
SamplePlan random_sample(const Shape& shape, std::size_t count,
                         std::uint64_t seed);

// Plan covering every vertex in index order.
SamplePlan all_points(const Shape& shape);

Eigen::AlignedBox3d bounding_box(std::span<const Vec3> points);
double bbox_diagonal(std::span<const Vec3> points);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

enum class PlyFormat { kAscii, kBinary };
enum class PlyPrecision { kFloat32, kFloat64 };

struct PlyWriteOptions {
  PlyFormat format = PlyFormat::kBinary;
  PlyPrecision precision = PlyPrecision::kFloat32;
  bool write_faces = true;
};

// Writes a PLY with optional per-vertex uchar red/green/blue.
void write_ply(const std::filesystem::path& path, const Shape& shape,
               std::span<const Rgb> colors = {}, const PlyWriteOptions& options = {});

// Rotation about the vertical (+y) axis through the origin. The result's
// normalization record is reset to identity.
Shape rotate_about_vertical(const Shape& shape, double degrees);

}  // namespace diff3f
