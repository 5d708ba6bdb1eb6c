#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "diff3f/shape.hpp"

namespace diff3f {

// A pinhole camera on a sphere around the origin, looking at the origin with
// +y as up. Azimuth rotates about +y starting from the +z axis; elevation
// lifts the camera toward +y.
//
// Camera space is right-handed with x to the right, y up and the camera
// looking down -z, so visible points have negative camera z. Pixel (col,
// row) has its center at (col + 0.5, row + 0.5); rows grow downward.
struct CameraPose {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
  double distance = 2.5;
  double fov_y_deg = 50.0;
  int height = 512;
  int width = 512;

  Vec3 position() const;
  // Rows are the camera x, y, z axes expressed in world coordinates.
  Eigen::Matrix3d world_to_camera_rotation() const;
  Vec3 to_camera(const Vec3& world) const;
  // Focal length in pixels.
  double focal_px() const;
  // Projects a camera-space point with z < 0 to continuous pixel coordinates.
  Eigen::Vector2d project_camera(const Vec3& cam) const;
  Eigen::Vector2d project(const Vec3& world) const { return project_camera(to_camera(world)); }
  // Unit ray direction (world space) through the center of pixel (col, row).
  Vec3 pixel_ray(int col, int row) const;

  // Throws InvalidCamera when the resolution is below 64 or the geometry is
  // degenerate.
  void validate() const;
};

struct CameraGrid {
  int elevations = 1;
  int azimuths = 1;
};

// Factorization used by sample_cameras: the divisor pair of n closest to
// square, with elevations <= azimuths.
CameraGrid camera_grid(int n);

// Deterministic view-sphere grid, elevation-major. Elevations are spaced
// evenly over the open interval (-90, 90) at cell midpoints, azimuths over
// [0, 360). When n has no balanced factorization (azimuths > 4 * elevations,
// e.g. primes) the grid uses ceil(sqrt(n)) azimuths per ring and the last
// ring takes the remainder, evenly spaced on its own.
std::vector<CameraPose> sample_cameras(int n, double distance = 2.5, int height = 512,
                                       int width = 512, double fov_y_deg = 50.0);

}  // namespace diff3f
