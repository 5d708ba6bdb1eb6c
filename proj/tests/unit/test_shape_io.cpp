#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"

#include "diff3f/error.hpp"
#include "diff3f/shape.hpp"

using namespace diff3f;
using diff3f::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

ErrorCode load_error(const std::filesystem::path& path, ShapeKind kind = ShapeKind::kAuto) {
  try {
    load_shape(path, kind);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("single triangle OBJ") {
  TempDir dir("obj");
  write_text(dir / "tri.obj", "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n");
  const Shape s = load_shape(dir / "tri.obj");
  REQUIRE(s.size() == 3);
  REQUIRE(s.has_faces());
  CHECK(s.faces->size() == 1);
  CHECK((*s.faces)[0] == Face{0, 1, 2});
  CHECK(s.vertices[1] == Vec3(1, 0, 0));
  CHECK(s.bbox_diagonal == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("OBJ negative indices and quads") {
  TempDir dir("obj");
  write_text(dir / "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n");
  const Shape s = load_shape(dir / "quad.obj");
  REQUIRE(s.faces->size() == 2);
  CHECK((*s.faces)[0] == Face{0, 1, 2});
  CHECK((*s.faces)[1] == Face{0, 2, 3});
}

TEST_CASE("OBJ face index out of range") {
  TempDir dir("obj");
  write_text(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
  CHECK(load_error(dir / "bad.obj") == ErrorCode::kMalformedGeometry);
}

TEST_CASE("load errors") {
  TempDir dir("err");
  CHECK(load_error(dir / "missing.obj") == ErrorCode::kUnreadableFile);
  write_text(dir / "x.stl", "solid");
  CHECK(load_error(dir / "x.stl") == ErrorCode::kUnreadableFile);
  write_text(dir / "nan.obj", "v 0 nan 0\n");
  CHECK(load_error(dir / "nan.obj") == ErrorCode::kMalformedGeometry);
  write_text(dir / "empty.obj", "# nothing\n");
  CHECK(load_error(dir / "empty.obj") == ErrorCode::kEmptyShape);
}

TEST_CASE("degenerate faces are dropped") {
  TempDir dir("obj");
  write_text(dir / "deg.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\n");
  const Shape s = load_shape(dir / "deg.obj");
  CHECK(s.faces->size() == 1);
}

TEST_CASE("PLY cube corners without faces") {
  TempDir dir("ply");
  std::string text = "ply\nformat ascii 1.0\nelement vertex 8\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (int i = 0; i < 8; ++i) text += std::to_string(i & 1) + " " + std::to_string((i >> 1) & 1) + " " + std::to_string((i >> 2) & 1) + "\n";
  write_text(dir / "cube.ply", text);
  const Shape s = load_shape(dir / "cube.ply");
  CHECK(s.size() == 8);
  CHECK_FALSE(s.faces.has_value());
}

TEST_CASE("OFF with comments and a pointcloud override") {
  TempDir dir("off");
  write_text(dir / "t.off", "OFF\n# a comment\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  const Shape mesh = load_shape(dir / "t.off");
  CHECK(mesh.faces->size() == 2);
  const Shape cloud = load_shape(dir / "t.off", ShapeKind::kPointCloud);
  CHECK_FALSE(cloud.has_faces());
  CHECK(cloud.size() == 4);
}

TEST_CASE("normalize hand example") {
  const Shape s = normalize(testing::make_shape({{0, 0, 0}, {2, 0, 0}}));
  CHECK(s.vertices[0].isApprox(Vec3(-0.5, 0, 0)));
  CHECK(s.vertices[1].isApprox(Vec3(0.5, 0, 0)));
  CHECK(s.normalization.scale == doctest::Approx(2.0));
  CHECK(s.normalization.centroid.isApprox(Vec3(1, 0, 0)));
  CHECK(s.bbox_diagonal == doctest::Approx(1.0));
}

TEST_CASE("normalize rejects coincident vertices") {
  CHECK_THROWS_AS(normalize(testing::make_shape({{1, 2, 3}, {1, 2, 3}})), Error);
  try {
    normalize(testing::make_shape({{1, 2, 3}}));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateShape);
  }
}

TEST_CASE("normalize invariants, idempotence and inverse on random shapes") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(200);
    std::vector<Vec3> v(n);
    const Vec3 offset(rng.normal() * 50, rng.normal() * 50, rng.normal() * 50);
    const Vec3 stretch(0.01 + rng.uniform() * 10, 0.01 + rng.uniform() * 10, 0.01 + rng.uniform() * 10);
    for (auto& p : v) p = offset + Vec3(rng.normal(), rng.normal(), rng.normal()).cwiseProduct(stretch);
    const Shape raw = testing::make_shape(v);
    const Shape once = normalize(raw);
    const Shape twice = normalize(once);

    Vec3 mean = Vec3::Zero();
    for (const auto& p : once.vertices) mean += p;
    mean /= static_cast<double>(n);
    CHECK(mean.norm() < 1e-6);
    const auto box = bounding_box(once.vertices);
    CHECK((box.max() - box.min()).maxCoeff() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(once.bbox_diagonal == doctest::Approx((box.max() - box.min()).norm()));

    for (std::size_t i = 0; i < n; ++i) {
      CHECK((twice.vertices[i] - once.vertices[i]).norm() < 1e-6);
      CHECK((once.normalization.to_original(once.vertices[i]) - raw.vertices[i]).norm() < 1e-5);
      CHECK((twice.normalization.to_original(twice.vertices[i]) - raw.vertices[i]).norm() < 1e-5);
    }
  }
}

TEST_CASE("random_sample") {
  const Shape s = testing::random_points(5000, 1);
  SUBCASE("determinism and uniqueness") {
    const auto a = random_sample(s, 1024, 7);
    const auto b = random_sample(s, 1024, 7);
    CHECK(a.indices == b.indices);
    CHECK(std::set<std::uint32_t>(a.indices.begin(), a.indices.end()).size() == 1024);
    const auto c = random_sample(s, 1024, 8);
    CHECK(a.indices != c.indices);
  }
  SUBCASE("full count is a permutation") {
    const Shape small = testing::random_points(50, 2);
    auto plan = random_sample(small, 50, 3);
    std::sort(plan.indices.begin(), plan.indices.end());
    for (std::uint32_t i = 0; i < 50; ++i) CHECK(plan.indices[i] == i);
  }
  SUBCASE("too many") {
    try {
      random_sample(s, 5001, 1);
      FAIL("expected CountTooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCountTooLarge);
    }
  }
}

TEST_CASE("PLY round trip") {
  TempDir dir("ply");
  const Shape s = normalize(testing::icosphere(2, 0.37));
  SUBCASE("binary float64 is exact") {
    write_ply(dir / "b.ply", s, {}, {PlyFormat::kBinary, PlyPrecision::kFloat64, true});
    const Shape r = load_shape(dir / "b.ply");
    REQUIRE(r.size() == s.size());
    CHECK(*r.faces == *s.faces);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.vertices[i] == s.vertices[i]);
  }
  SUBCASE("binary float32 is exact on float values") {
    Shape f = s;
    for (auto& v : f.vertices) {
      for (int a = 0; a < 3; ++a) v[a] = static_cast<float>(v[a]);
    }
    write_ply(dir / "f.ply", f);
    const Shape r = load_shape(dir / "f.ply");
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(r.vertices[i] == f.vertices[i]);
  }
  SUBCASE("ascii within 1e-6") {
    write_ply(dir / "a.ply", s, {}, {PlyFormat::kAscii, PlyPrecision::kFloat32, true});
    const Shape r = load_shape(dir / "a.ply");
    for (std::size_t i = 0; i < s.size(); ++i) CHECK((r.vertices[i] - s.vertices[i]).norm() < 1e-6);
  }
  SUBCASE("colors and ascii readback") {
    std::vector<Rgb> colors(s.size(), Rgb{10, 20, 30});
    write_ply(dir / "c.ply", s, colors, {PlyFormat::kAscii, PlyPrecision::kFloat32, false});
    std::ifstream in(dir / "c.ply");
    std::string header((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(header.find("property uchar red") != std::string::npos);
    CHECK(header.find("element face") == std::string::npos);
    const Shape r = load_shape(dir / "c.ply");
    CHECK_FALSE(r.has_faces());
    CHECK(r.size() == s.size());
  }
}

TEST_CASE("rotate_about_vertical") {
  const Shape s = testing::make_shape({{1, 0, 0}, {0, 2, 0}});
  const Shape r = rotate_about_vertical(s, 90.0);
  // Azimuth grows from +z toward +x, so +x rotates to -z.
  CHECK((r.vertices[0] - Vec3(0, 0, -1)).norm() < 1e-12);
  CHECK((r.vertices[1] - Vec3(0, 2, 0)).norm() < 1e-12);
}
