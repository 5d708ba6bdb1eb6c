#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

#include "diff3f/camera.hpp"
#include "diff3f/feature_store.hpp"
#include "diff3f/json_util.hpp"
#include "diff3f/png_io.hpp"
#include "diff3f/view_export.hpp"

using namespace diff3f;

TEST_CASE("view directory names") {
  CHECK(view_dir_name(7) == "view_007");
  CHECK(view_dir_name(123) == "view_123");
}

TEST_CASE("exported maps decode to the rendered bundle") {
  const testing::TempDir dir("export");
  const Shape mesh = normalize(testing::lumpy_mesh(10, 20));
  const auto camera = sample_cameras(4, 2.5, 96, 96)[1];
  const auto view = render_view(mesh, camera);
  export_view(view, 1, dir.path());

  const auto depth = read_png(dir / "depth.png");
  const auto normal = read_png(dir / "normal.png");
  const auto edge = read_png(dir / "edge.png");
  const auto mask = read_png(dir / "mask.png");
  CHECK(depth.bit_depth == 16);
  CHECK(depth.channels == 1);
  CHECK(normal.channels == 3);
  CHECK(mask.bit_depth == 8);
  CHECK(depth.width == 96);

  const auto cond = conditioning_depth(view.depth, 96, 96);
  const auto position = read_feature_map(dir / "position.d3ff");
  CHECK(position.kind == FeatureKind::kPosition);
  CHECK(position.channels == 3);
  for (std::size_t p = 0; p < view.pixel_count(); ++p) {
    CHECK(mask.samples[p] == (view.mask[p] ? 255 : 0));
    CHECK(edge.samples[p] == (view.edge[p] ? 65535 : 0));
    CHECK(std::abs(depth.samples[p] / 65535.0 - cond[p]) <= 0.5 / 65535.0 + 1e-7);
    if (view.mask[p]) {
      const auto& n = (*view.normal)[p];
      for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(normal.samples[p * 3 + c] / 65535.0 - (n[c] + 1.0) / 2.0) <= 1e-4);
        CHECK(position.pixel(p)[c] == static_cast<float>(view.position[p][c]));
      }
    } else {
      CHECK(normal.samples[p * 3] == 0);
      CHECK(position.pixel(p)[0] == 0.0f);
    }
  }

  const auto meta = read_json_file(dir / "view.json");
  CHECK(meta.at("view_id") == 1);
  CHECK(meta.at("phi_deg").get<double>() == doctest::Approx(camera.azimuth_deg));
  CHECK(meta.at("theta_deg").get<double>() == doctest::Approx(camera.elevation_deg));
}

TEST_CASE("point clouds export no normal map") {
  const testing::TempDir dir("export_pc");
  const Shape cloud = normalize(testing::random_points(500, 2));
  const auto view = render_view(cloud, sample_cameras(1, 2.5, 64, 64)[0]);
  export_view(view, 0, dir.path());
  CHECK(std::filesystem::exists(dir / "edge.png"));
  CHECK_FALSE(std::filesystem::exists(dir / "normal.png"));
}
