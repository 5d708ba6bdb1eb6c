#include <algorithm>
#include <cmath>
#include <cstdio>

#include "diff3f/feature_store.hpp"
#include "diff3f/png_io.hpp"
#include "diff3f/view_export.hpp"

namespace diff3f {

namespace {

std::uint16_t to_u16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

PngImage gray16(const ViewBundle& view) {
  PngImage img;
  img.width = view.width();
  img.height = view.height();
  img.channels = 1;
  img.bit_depth = 16;
  img.samples.assign(view.pixel_count(), 0);
  return img;
}

}  // namespace

std::string view_dir_name(int view_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03d", view_id);
  return buf;
}

Json view_sidecar(const ViewBundle& view, int view_id) {
  Json j = camera_to_json(view.camera);
  j["view_id"] = view_id;
  return j;
}

void export_view(const ViewBundle& view, int view_id, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t n = view.pixel_count();

  PngImage depth = gray16(view);
  const auto cond = conditioning_depth(view.depth, view.height(), view.width());
  for (std::size_t i = 0; i < n; ++i) depth.samples[i] = to_u16(cond[i]);
  write_png(dir / "depth.png", depth);

  if (view.normal) {
    PngImage normal = gray16(view);
    normal.channels = 3;
    normal.samples.assign(n * 3, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!view.mask[i]) continue;
      for (int c = 0; c < 3; ++c) normal.samples[i * 3 + c] = to_u16(((*view.normal)[i][c] + 1.0) / 2.0);
    }
    write_png(dir / "normal.png", normal);
  }

  PngImage edge = gray16(view);
  for (std::size_t i = 0; i < n; ++i) edge.samples[i] = view.edge[i] ? 65535 : 0;
  write_png(dir / "edge.png", edge);

  PngImage mask = gray16(view);
  mask.bit_depth = 8;
  for (std::size_t i = 0; i < n; ++i) mask.samples[i] = view.mask[i] ? 255 : 0;
  write_png(dir / "mask.png", mask);

  FeatureMap position(FeatureKind::kPosition, static_cast<std::uint32_t>(view.height()),
                      static_cast<std::uint32_t>(view.width()), 3);
  position.view_id = view_id;
  position.camera = view.camera;
  for (std::size_t i = 0; i < n; ++i) {
    if (!view.mask[i]) continue;
    auto px = position.pixel(i);
    for (int c = 0; c < 3; ++c) px[c] = static_cast<float>(view.position[i][c]);
  }
  write_feature_map(position, dir / "position.d3ff");

  write_json_file(dir / "view.json", view_sidecar(view, view_id));
}

}  // namespace diff3f
