#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace diff3f {

struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 1;   // 1 (gray) or 3 (rgb)
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

void write_png(const std::filesystem::path& path, const PngImage& image);
PngImage read_png(const std::filesystem::path& path);

}  // namespace diff3f
