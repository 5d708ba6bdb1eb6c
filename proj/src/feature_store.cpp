#include <cmath>
#include <cstring>
#include <fstream>

#include "diff3f/error.hpp"
#include "diff3f/feature_store.hpp"
#include "diff3f/file_util.hpp"
#include "diff3f/json_util.hpp"

namespace diff3f {

namespace {

void put_u32(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

std::array<std::uint32_t, 3> parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "D3FF", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a D3FF file (bad magic)");
  }
  if (bytes.size() < kD3ffHeaderBytes) {
    throw Error(ErrorCode::kTruncatedPayload, "D3FF header is truncated");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kD3ffVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "unsupported D3FF version " + std::to_string(version));
  }
  const std::uint32_t dtype = get_u32(bytes, 20);
  if (dtype != kD3ffDtypeFloat32) {
    throw Error(ErrorCode::kVersionUnsupported, "unsupported D3FF dtype code " + std::to_string(dtype));
  }
  return {get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16)};
}

}  // namespace

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kDiffusion: return "diffusion";
    case FeatureKind::kDino: return "dino";
    case FeatureKind::kFused: return "fused";
    case FeatureKind::kSynthetic: return "synthetic";
    case FeatureKind::kPosition: return "position";
    case FeatureKind::kDescriptor: return "descriptor";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  for (auto kind : {FeatureKind::kDiffusion, FeatureKind::kDino, FeatureKind::kFused,
                    FeatureKind::kSynthetic, FeatureKind::kPosition, FeatureKind::kDescriptor}) {
    if (feature_kind_name(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidFeatureMap, "unknown feature kind '" + std::string(name) + "'");
}

void validate_feature_map(const FeatureMap& map) {
  if (map.height == 0 || map.width == 0 || map.channels == 0) {
    throw Error(ErrorCode::kInvalidFeatureMap, "feature map dims must be positive");
  }
  if (map.data.size() != static_cast<std::size_t>(map.height) * map.width * map.channels) {
    throw Error(ErrorCode::kInvalidFeatureMap, "feature map payload does not match H*W*C");
  }
  for (float v : map.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidFeatureMap, "feature map contains non-finite values");
  }
  if (map.timestep.has_value() != (map.kind == FeatureKind::kDiffusion)) {
    throw Error(ErrorCode::kInvalidFeatureMap, "timestep must be present exactly for diffusion maps");
  }
}

std::vector<std::uint8_t> encode_d3ff(const FeatureMap& map) {
  std::vector<std::uint8_t> out(kD3ffHeaderBytes + map.data.size() * sizeof(float));
  std::uint8_t* p = out.data();
  std::memcpy(p, "D3FF", 4);
  put_u32(p + 4, kD3ffVersion);
  put_u32(p + 8, map.height);
  put_u32(p + 12, map.width);
  put_u32(p + 16, map.channels);
  put_u32(p + 20, kD3ffDtypeFloat32);
  p += kD3ffHeaderBytes;
  for (float v : map.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(p, bits);
    p += 4;
  }
  return out;
}

FeatureMap decode_d3ff(std::span<const std::uint8_t> bytes) {
  const auto [h, w, c] = parse_header(bytes);
  const std::size_t expected = static_cast<std::size_t>(h) * w * c;
  const std::size_t available = (bytes.size() - kD3ffHeaderBytes) / sizeof(float);
  if ((bytes.size() - kD3ffHeaderBytes) % sizeof(float) != 0 || available != expected) {
    throw Error(ErrorCode::kTruncatedPayload,
                "D3FF header declares " + std::to_string(expected) + " values but payload holds " +
                    std::to_string(bytes.size() - kD3ffHeaderBytes) + " bytes");
  }
  FeatureMap map;
  map.height = h;
  map.width = w;
  map.channels = c;
  map.data.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    const std::uint32_t bits = get_u32(bytes, kD3ffHeaderBytes + 4 * i);
    std::memcpy(&map.data[i], &bits, sizeof bits);
  }
  return map;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto side = path;
  side.replace_extension(".json");
  return side;
}

void write_feature_map(const FeatureMap& map, const std::filesystem::path& path) {
  validate_feature_map(map);
  Json side = {{"view_id", map.view_id},
               {"kind", std::string(feature_kind_name(map.kind))},
               {"timestep", map.timestep ? Json(*map.timestep) : Json(nullptr)},
               {"H", map.height},
               {"W", map.width},
               {"C", map.channels},
               {"camera", nullptr}};
  if (map.camera) {
    Json cam = camera_to_json(*map.camera);
    cam.erase("H");
    cam.erase("W");
    side["camera"] = cam;
  }
  write_file_atomic(path, encode_d3ff(map));
  write_json_file(sidecar_path(path), side);
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  FeatureMap map = decode_d3ff(bytes);
  const auto side_path = sidecar_path(path);
  if (std::filesystem::exists(side_path)) {
    const Json side = read_json_file(side_path);
    try {
      if (side.at("H").get<std::uint32_t>() != map.height ||
          side.at("W").get<std::uint32_t>() != map.width ||
          side.at("C").get<std::uint32_t>() != map.channels) {
        throw Error(ErrorCode::kInvalidFeatureMap, "sidecar dims disagree with " + path.string());
      }
      map.view_id = side.value("view_id", 0);
      map.kind = parse_feature_kind(side.value("kind", std::string("synthetic")));
      if (side.contains("timestep") && !side["timestep"].is_null()) {
        map.timestep = side["timestep"].get<int>();
      }
      if (side.contains("camera") && !side["camera"].is_null()) {
        map.camera = camera_from_json(side["camera"], static_cast<int>(map.height),
                                      static_cast<int>(map.width));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidFeatureMap, "bad sidecar " + side_path.string() + ": " + e.what());
    }
  }
  return map;
}

std::array<std::uint32_t, 3> read_feature_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  std::vector<std::uint8_t> header(kD3ffHeaderBytes);
  in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
  header.resize(static_cast<std::size_t>(in.gcount()));
  const auto dims = parse_header(header);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != kD3ffHeaderBytes + static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] * sizeof(float)) {
    throw Error(ErrorCode::kTruncatedPayload, "D3FF payload size mismatch in " + path.string());
  }
  return dims;
}

Json camera_to_json(const CameraPose& camera) {
  return {{"theta_deg", camera.elevation_deg}, {"phi_deg", camera.azimuth_deg},
          {"distance", camera.distance},       {"fov_y_deg", camera.fov_y_deg},
          {"H", camera.height},                {"W", camera.width}};
}

CameraPose camera_from_json(const Json& j, int fallback_height, int fallback_width) {
  CameraPose camera;
  camera.elevation_deg = j.at("theta_deg").get<double>();
  camera.azimuth_deg = j.at("phi_deg").get<double>();
  camera.distance = j.at("distance").get<double>();
  camera.fov_y_deg = j.at("fov_y_deg").get<double>();
  camera.height = j.value("H", fallback_height);
  camera.width = j.value("W", fallback_width);
  return camera;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kUnreadableFile, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace diff3f
