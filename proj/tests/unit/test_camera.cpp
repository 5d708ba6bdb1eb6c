#include "doctest.h"
#include "fixtures.hpp"

#include "diff3f/camera.hpp"
#include "diff3f/error.hpp"

using namespace diff3f;

TEST_CASE("grid of 100 views is 10 x 10 with a 36 degree azimuth step") {
  const auto grid = camera_grid(100);
  CHECK(grid.elevations == 10);
  CHECK(grid.azimuths == 10);
  const auto cams = sample_cameras(100);
  REQUIRE(cams.size() == 100);
  CHECK(cams[1].azimuth_deg - cams[0].azimuth_deg == doctest::Approx(36.0));
  CHECK(cams[0].elevation_deg == doctest::Approx(-81.0));
  CHECK(cams[99].elevation_deg == doctest::Approx(81.0));
  for (const auto& c : cams) {
    CHECK(c.elevation_deg > -90.0);
    CHECK(c.elevation_deg < 90.0);
    CHECK(c.azimuth_deg >= 0.0);
    CHECK(c.azimuth_deg < 360.0);
  }
  // Elevation-major order.
  CHECK(cams[9].elevation_deg == cams[0].elevation_deg);
  CHECK(cams[10].elevation_deg > cams[9].elevation_deg);
}

TEST_CASE("single view sits at the origin of both angles") {
  const auto cams = sample_cameras(1);
  REQUIRE(cams.size() == 1);
  CHECK(cams[0].elevation_deg == 0.0);
  CHECK(cams[0].azimuth_deg == 0.0);
}

TEST_CASE("four views form a 2 x 2 grid") {
  const auto cams = sample_cameras(4);
  REQUIRE(cams.size() == 4);
  CHECK(cams[0].azimuth_deg == 0.0);
  CHECK(cams[1].azimuth_deg == 180.0);
  CHECK(cams[0].elevation_deg == doctest::Approx(-45.0));
  CHECK(cams[2].elevation_deg == doctest::Approx(45.0));
}

TEST_CASE("view counts without a balanced factorization still give n views") {
  for (int n : {2, 3, 5, 7, 13, 17, 97}) {
    const auto cams = sample_cameras(n);
    CHECK(cams.size() == static_cast<std::size_t>(n));
  }
  CHECK_THROWS_AS(camera_grid(0), Error);
}

TEST_CASE("pose geometry") {
  CameraPose cam;
  CHECK((cam.position() - Vec3(0, 0, 2.5)).norm() < 1e-12);
  const Eigen::Vector2d center = cam.project(Vec3::Zero());
  CHECK(center.x() == doctest::Approx(256.0));
  CHECK(center.y() == doctest::Approx(256.0));
  // +y is up in the image, +x to the right at azimuth 0.
  CHECK(cam.project(Vec3(0, 0.1, 0)).y() < 256.0);
  CHECK(cam.project(Vec3(0.1, 0, 0)).x() > 256.0);
  CHECK(cam.focal_px() == doctest::Approx(256.0 / std::tan(25.0 * testing::kPi / 180.0)));

  cam.elevation_deg = 30;
  cam.azimuth_deg = 123;
  const Eigen::Matrix3d r = cam.world_to_camera_rotation();
  CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0));
  CHECK(cam.to_camera(cam.position()).norm() < 1e-12);
  CHECK(cam.to_camera(Vec3::Zero()).isApprox(Vec3(0, 0, -2.5)));

  for (int row : {0, 100, 511}) {
    for (int col : {0, 300, 511}) {
      const Vec3 p = cam.position() + 1.7 * cam.pixel_ray(col, row);
      const Eigen::Vector2d uv = cam.project(p);
      CHECK(uv.x() == doctest::Approx(col + 0.5));
      CHECK(uv.y() == doctest::Approx(row + 0.5));
    }
  }
}

TEST_CASE("invalid cameras") {
  CameraPose cam;
  cam.height = 32;
  CHECK_THROWS_AS(cam.validate(), Error);
  cam = CameraPose{};
  cam.fov_y_deg = 0;
  CHECK_THROWS_AS(cam.validate(), Error);
  cam = CameraPose{};
  cam.distance = -1;
  try {
    cam.validate();
    FAIL("expected InvalidCamera");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidCamera);
  }
}
