#include <algorithm>
#include <cmath>
#include <string>

#include "diff3f/error.hpp"
#include "diff3f/renderer.hpp"

namespace diff3f {

namespace {

// Vertices must sit at least this far in front of the camera.
constexpr double kNearLimit = 1e-3;

ViewBundle empty_bundle(const CameraPose& camera) {
  ViewBundle view;
  view.camera = camera;
  const std::size_t n = view.pixel_count();
  view.depth.assign(n, kBackgroundDepth);
  view.mask.assign(n, 0);
  view.position.assign(n, Vec3::Zero());
  return view;
}

std::vector<Vec3> to_camera_space(const Shape& shape, const CameraPose& camera) {
  const Eigen::Matrix3d rotation = camera.world_to_camera_rotation();
  const Vec3 eye = camera.position();
  std::vector<Vec3> cam;
  cam.reserve(shape.vertices.size());
  for (const auto& v : shape.vertices) {
    const Vec3 c = rotation * (v - eye);
    if (!(-c.z() > kNearLimit)) {
      throw Error(ErrorCode::kInvalidCamera,
                  "shape is not entirely in front of the camera (distance " +
                      std::to_string(camera.distance) + ")");
    }
    cam.push_back(c);
  }
  return cam;
}

std::vector<Vec3> vertex_normals(const Shape& shape) {
  std::vector<Vec3> normals(shape.vertices.size(), Vec3::Zero());
  for (const auto& f : *shape.faces) {
    // Unnormalized cross product weights each face by its area.
    const Vec3 n = (shape.vertices[f[1]] - shape.vertices[f[0]])
                       .cross(shape.vertices[f[2]] - shape.vertices[f[0]]);
    for (auto idx : f) normals[idx] += n;
  }
  return normals;
}

}  // namespace

std::size_t ViewBundle::foreground_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

ViewBundle render_mesh(const Shape& shape, const CameraPose& camera, const RenderOptions& options) {
  if (!shape.has_faces()) throw Error(ErrorCode::kNoFaces, "render_mesh requires a mesh with faces");
  camera.validate();
  const auto cam = to_camera_space(shape, camera);
  const int height = camera.height;
  const int width = camera.width;

  std::vector<Eigen::Vector2d> screen(cam.size());
  for (std::size_t i = 0; i < cam.size(); ++i) screen[i] = camera.project_camera(cam[i]);

  ViewBundle view = empty_bundle(camera);
  std::vector<double> zbuffer(view.pixel_count(), std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> face_id(view.pixel_count(), -1);
  std::vector<Vec3> weights(view.pixel_count(), Vec3::Zero());

  const auto& faces = *shape.faces;
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const auto& f = faces[fi];
    const Eigen::Vector2d& a = screen[f[0]];
    const Eigen::Vector2d& b = screen[f[1]];
    const Eigen::Vector2d& c = screen[f[2]];
    const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    if (std::abs(area) < 1e-12) continue;
    const double inv_depth[3] = {-1.0 / cam[f[0]].z(), -1.0 / cam[f[1]].z(), -1.0 / cam[f[2]].z()};

    const int col0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
    const int col1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) - 0.5)));
    const int row0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
    const int row1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) - 0.5)));

    for (int row = row0; row <= row1; ++row) {
      const double py = row + 0.5;
      for (int col = col0; col <= col1; ++col) {
        const double px = col + 0.5;
        // Edge functions; the weight of vertex k is the sub-area opposite it.
        double w0 = (c.x() - b.x()) * (py - b.y()) - (c.y() - b.y()) * (px - b.x());
        double w1 = (a.x() - c.x()) * (py - c.y()) - (a.y() - c.y()) * (px - c.x());
        double w2 = (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
        w0 /= area;
        w1 /= area;
        w2 /= area;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double inv_z = w0 * inv_depth[0] + w1 * inv_depth[1] + w2 * inv_depth[2];
        const double z = 1.0 / inv_z;
        const std::size_t pix = static_cast<std::size_t>(row) * width + col;
        if (!(z < zbuffer[pix])) continue;
        zbuffer[pix] = z;
        face_id[pix] = static_cast<std::int32_t>(fi);
        weights[pix] = Vec3(w0 * inv_depth[0] * z, w1 * inv_depth[1] * z, w2 * inv_depth[2] * z);
      }
    }
  }

  std::vector<Vec3> smooth;
  if (options.normals == NormalMode::kSmooth) smooth = vertex_normals(shape);
  const Eigen::Matrix3d rotation = camera.world_to_camera_rotation();
  std::vector<Eigen::Vector3f> normal_map(view.pixel_count(), Eigen::Vector3f::Zero());

  for (std::size_t pix = 0; pix < view.pixel_count(); ++pix) {
    if (face_id[pix] < 0) continue;
    const auto& f = faces[static_cast<std::size_t>(face_id[pix])];
    const Vec3& w = weights[pix];
    view.mask[pix] = 1;
    view.depth[pix] = static_cast<float>(zbuffer[pix]);
    view.position[pix] =
        w[0] * shape.vertices[f[0]] + w[1] * shape.vertices[f[1]] + w[2] * shape.vertices[f[2]];

    const Vec3 p_cam = w[0] * cam[f[0]] + w[1] * cam[f[1]] + w[2] * cam[f[2]];
    const Vec3 face_n = (cam[f[1]] - cam[f[0]]).cross(cam[f[2]] - cam[f[0]]);
    Vec3 n = face_n;
    if (!smooth.empty()) {
      const Vec3 interp = rotation * (w[0] * smooth[f[0]] + w[1] * smooth[f[1]] + w[2] * smooth[f[2]]);
      if (interp.norm() > 1e-12 * std::max(1.0, face_n.norm())) n = interp;
    }
    n.normalize();
    if (n.dot(p_cam) > 0.0) n = -n;
    normal_map[pix] = n.cast<float>();
  }
  view.normal = std::move(normal_map);
  view.edge = edge_from_depth(view.depth, height, width, options.edges.low, options.edges.high);
  return view;
}

ViewBundle render_pointcloud(const Shape& shape, const CameraPose& camera, int splat_px,
                             const EdgeThresholds& edges) {
  if (splat_px < 1) throw Error(ErrorCode::kInvalidArgument, "splat_px must be >= 1");
  camera.validate();
  const auto cam = to_camera_space(shape, camera);
  const int height = camera.height;
  const int width = camera.width;

  ViewBundle view = empty_bundle(camera);
  std::vector<double> zbuffer(view.pixel_count(), std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> winner(view.pixel_count(), -1);
  const double radius = splat_px;

  for (std::size_t i = 0; i < cam.size(); ++i) {
    const Eigen::Vector2d uv = camera.project_camera(cam[i]);
    const double z = -cam[i].z();
    const int col0 = std::max(0, static_cast<int>(std::floor(uv.x() - radius - 0.5)));
    const int col1 = std::min(width - 1, static_cast<int>(std::ceil(uv.x() + radius - 0.5)));
    const int row0 = std::max(0, static_cast<int>(std::floor(uv.y() - radius - 0.5)));
    const int row1 = std::min(height - 1, static_cast<int>(std::ceil(uv.y() + radius - 0.5)));
    for (int row = row0; row <= row1; ++row) {
      const double dy = row + 0.5 - uv.y();
      for (int col = col0; col <= col1; ++col) {
        const double dx = col + 0.5 - uv.x();
        if (dx * dx + dy * dy > radius * radius) continue;
        const std::size_t pix = static_cast<std::size_t>(row) * width + col;
        if (!(z < zbuffer[pix])) continue;
        zbuffer[pix] = z;
        winner[pix] = static_cast<std::int64_t>(i);
      }
    }
  }

  for (std::size_t pix = 0; pix < view.pixel_count(); ++pix) {
    if (winner[pix] < 0) continue;
    view.mask[pix] = 1;
    view.depth[pix] = static_cast<float>(zbuffer[pix]);
    view.position[pix] = shape.vertices[static_cast<std::size_t>(winner[pix])];
  }
  view.edge = edge_from_depth(view.depth, height, width, edges.low, edges.high);
  return view;
}

ViewBundle render_view(const Shape& shape, const CameraPose& camera, const RenderOptions& options) {
  if (shape.has_faces()) return render_mesh(shape, camera, options);
  return render_pointcloud(shape, camera, options.splat_px, options.edges);
}

}  // namespace diff3f
