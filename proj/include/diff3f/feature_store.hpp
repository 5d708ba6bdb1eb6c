#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diff3f/camera.hpp"

namespace diff3f {

enum class FeatureKind { kDiffusion, kDino, kFused, kSynthetic, kPosition, kDescriptor };

std::string_view feature_kind_name(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

// Dense H x W x C float32 image, row-major and channel-last.
struct FeatureMap {
  int view_id = 0;
  FeatureKind kind = FeatureKind::kSynthetic;
  std::optional<int> timestep;  // present iff kind == kDiffusion
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;
  std::optional<CameraPose> camera;

  FeatureMap() = default;
  FeatureMap(FeatureKind kind, std::uint32_t height, std::uint32_t width, std::uint32_t channels)
      : kind(kind), height(height), width(width), channels(channels),
        data(static_cast<std::size_t>(height) * width * channels, 0.0f) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  std::span<float> pixel(std::size_t index) {
    return {data.data() + index * channels, channels};
  }
  std::span<const float> pixel(std::size_t index) const {
    return {data.data() + index * channels, channels};
  }
};

// Throws InvalidFeatureMap when the payload size or any value is off, or when
// the timestep/kind pairing is violated.
void validate_feature_map(const FeatureMap& map);

inline constexpr std::size_t kD3ffHeaderBytes = 24;
inline constexpr std::uint32_t kD3ffVersion = 1;
inline constexpr std::uint32_t kD3ffDtypeFloat32 = 0;

// Binary D3FF layout (all integers u32 little-endian):
//   [0, 4)   "D3FF"
//   [4, 8)   version = 1
//   [8, 20)  H, W, C
//   [20, 24) dtype code (0 = float32 little-endian)
//   [24, ..) H*W*C float32 values, row-major, channel-last
std::vector<std::uint8_t> encode_d3ff(const FeatureMap& map);
// Decodes payload only; metadata fields other than dims are left default.
FeatureMap decode_d3ff(std::span<const std::uint8_t> bytes);

// Path of the JSON sidecar that accompanies `path` (same stem, .json).
std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Writes the D3FF file and its sidecar
//   {view_id, kind, timestep|null, H, W, C, camera:{theta_deg, phi_deg, distance, fov_y_deg}|null}.
// Rejects invalid maps before touching the filesystem.
void write_feature_map(const FeatureMap& map, const std::filesystem::path& path);

// Reads a D3FF file. If the sidecar exists its metadata is applied and its
// dims must agree with the header.
FeatureMap read_feature_map(const std::filesystem::path& path);

// Header-only check used by manifest validation: returns (H, W, C).
std::array<std::uint32_t, 3> read_feature_header(const std::filesystem::path& path);

}  // namespace diff3f
