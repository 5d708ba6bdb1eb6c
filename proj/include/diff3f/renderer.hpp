#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "diff3f/camera.hpp"
#include "diff3f/shape.hpp"

namespace diff3f {

inline constexpr float kBackgroundDepth = std::numeric_limits<float>::infinity();

// Geometric images of one shape seen from one camera. All maps are
// row-major with `width` columns. Depth is the positive distance along the
// camera's viewing axis (-z in camera space); background pixels hold
// kBackgroundDepth and have mask 0. Normals are camera-space unit vectors
// oriented toward the camera (n . p_cam <= 0). Positions are the world-space
// surface points imaged by each pixel, meaningful only where mask is set.
struct ViewBundle {
  CameraPose camera;
  std::vector<float> depth;
  std::optional<std::vector<Eigen::Vector3f>> normal;
  std::vector<std::uint8_t> edge;
  std::vector<std::uint8_t> mask;
  std::vector<Vec3> position;

  int height() const { return camera.height; }
  int width() const { return camera.width; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(camera.height) * camera.width; }
  std::size_t foreground_count() const;
};

struct EdgeThresholds {
  double low = 0.05;
  double high = 0.15;
};

enum class NormalMode { kSmooth, kFlat };

struct RenderOptions {
  NormalMode normals = NormalMode::kSmooth;
  int splat_px = 2;
  EdgeThresholds edges;
};

// Z-buffered rasterization sampled at pixel centers with perspective-correct
// interpolation. Triangles are not culled by orientation. Throws NoFaces for
// shapes without faces and InvalidCamera when any vertex is closer to the
// camera plane than the near limit.
ViewBundle render_mesh(const Shape& shape, const CameraPose& camera,
                       const RenderOptions& options = {});

// Each point covers the pixels whose centers lie within splat_px pixels of
// its projection, with a per-pixel depth test (ties keep the lower point
// index). No normal map is produced.
ViewBundle render_pointcloud(const Shape& shape, const CameraPose& camera, int splat_px = 2,
                             const EdgeThresholds& edges = {});

// Dispatches on whether the shape has faces.
ViewBundle render_view(const Shape& shape, const CameraPose& camera,
                       const RenderOptions& options = {});

// Per-view relative depth over the foreground: nearest = 1, farthest = 0,
// background = 0. A constant-depth foreground maps to 1.
std::vector<float> conditioning_depth(const std::vector<float>& depth, int height, int width);

// Canny edges on conditioning_depth: Sobel gradient (scaled by 1/4 so that a
// unit step reads as 1), non-maximum suppression, hysteresis with
// low/high. Only foreground pixels can carry edges, and the silhouette ring
// (foreground pixels with a 4-connected background neighbor) is always
// marked.
std::vector<std::uint8_t> edge_from_depth(const std::vector<float>& depth, int height, int width,
                                          double low, double high);

}  // namespace diff3f
