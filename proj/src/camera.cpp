#include <cmath>
#include <string>

#include "diff3f/camera.hpp"
#include "diff3f/error.hpp"

namespace diff3f {

namespace {

constexpr double kDegToRad = EIGEN_PI / 180.0;

}  // namespace

Vec3 CameraPose::position() const {
  const double el = elevation_deg * kDegToRad;
  const double az = azimuth_deg * kDegToRad;
  return distance * Vec3(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
}

Eigen::Matrix3d CameraPose::world_to_camera_rotation() const {
  const double el = elevation_deg * kDegToRad;
  const double az = azimuth_deg * kDegToRad;
  // Closed form of look-at(origin) with world up +y; avoids the cross-product
  // route so that rotating the rig about +y is exactly a rotation of the basis.
  const Vec3 back(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  const Vec3 right(std::cos(az), 0.0, -std::sin(az));
  const Vec3 up(-std::sin(el) * std::sin(az), std::cos(el), -std::sin(el) * std::cos(az));
  Eigen::Matrix3d rotation;
  rotation.row(0) = right.transpose();
  rotation.row(1) = up.transpose();
  rotation.row(2) = back.transpose();
  return rotation;
}

Vec3 CameraPose::to_camera(const Vec3& world) const {
  return world_to_camera_rotation() * (world - position());
}

double CameraPose::focal_px() const {
  return 0.5 * height / std::tan(0.5 * fov_y_deg * kDegToRad);
}

Eigen::Vector2d CameraPose::project_camera(const Vec3& cam) const {
  const double depth = -cam.z();
  const double f = focal_px();
  return {0.5 * width + f * cam.x() / depth, 0.5 * height - f * cam.y() / depth};
}

Vec3 CameraPose::pixel_ray(int col, int row) const {
  const double f = focal_px();
  const Vec3 cam((col + 0.5 - 0.5 * width) / f, -(row + 0.5 - 0.5 * height) / f, -1.0);
  return (world_to_camera_rotation().transpose() * cam).normalized();
}

void CameraPose::validate() const {
  if (height < 64 || width < 64) {
    throw Error(ErrorCode::kInvalidCamera, "resolution must be at least 64x64, got " +
                                               std::to_string(height) + "x" +
                                               std::to_string(width));
  }
  if (!(distance > 0.0) || !(fov_y_deg > 0.0 && fov_y_deg < 180.0)) {
    throw Error(ErrorCode::kInvalidCamera, "camera distance and fov must be positive");
  }
}

CameraGrid camera_grid(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "view count must be >= 1");
  int elevations = 1;
  for (int d = 1; d * d <= n; ++d) {
    if (n % d == 0) elevations = d;
  }
  return {elevations, n / elevations};
}

std::vector<CameraPose> sample_cameras(int n, double distance, int height, int width,
                                       double fov_y_deg) {
  CameraGrid grid = camera_grid(n);
  std::vector<int> ring_sizes;
  if (grid.azimuths > 4 * grid.elevations) {
    const int per_ring = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (int remaining = n; remaining > 0; remaining -= per_ring) {
      ring_sizes.push_back(std::min(per_ring, remaining));
    }
  } else {
    ring_sizes.assign(grid.elevations, grid.azimuths);
  }

  std::vector<CameraPose> cameras;
  cameras.reserve(n);
  const int rings = static_cast<int>(ring_sizes.size());
  for (int e = 0; e < rings; ++e) {
    const double elevation = -90.0 + 180.0 * (e + 0.5) / rings;
    for (int a = 0; a < ring_sizes[e]; ++a) {
      CameraPose pose;
      pose.elevation_deg = elevation;
      pose.azimuth_deg = 360.0 * a / ring_sizes[e];
      pose.distance = distance;
      pose.fov_y_deg = fov_y_deg;
      pose.height = height;
      pose.width = width;
      cameras.push_back(pose);
    }
  }
  return cameras;
}

}  // namespace diff3f
