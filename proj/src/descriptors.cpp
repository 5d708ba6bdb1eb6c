#include "diff3f/descriptors.hpp"
#include "diff3f/error.hpp"
#include "diff3f/feature_store.hpp"
#include "diff3f/file_util.hpp"

namespace diff3f {

void write_descriptors(const std::filesystem::path& path, const PointDescriptors& descriptors,
                       const std::string& shape_id, const Json& config) {
  if (descriptors.values.size() != descriptors.size() * descriptors.dim ||
      descriptors.coverage.size() != descriptors.size()) {
    throw Error(ErrorCode::kInvalidFeatureMap, "descriptor matrix is inconsistent");
  }
  FeatureMap map(FeatureKind::kDescriptor, static_cast<std::uint32_t>(descriptors.size()), 1,
                 static_cast<std::uint32_t>(descriptors.dim));
  map.data = descriptors.values;
  validate_feature_map(map);
  const Json side = {{"kind", "descriptor"},
                     {"H", map.height},
                     {"W", map.width},
                     {"C", map.channels},
                     {"timestep", nullptr},
                     {"shape_id", shape_id},
                     {"point_ids", descriptors.point_ids},
                     {"coverage", descriptors.coverage},
                     {"config", config}};
  write_file_atomic(path, encode_d3ff(map));
  write_json_file(sidecar_path(path), side);
}

DescriptorFile read_descriptors(const std::filesystem::path& path) {
  const FeatureMap map = decode_d3ff(read_file_bytes(path));
  if (map.width != 1) {
    throw Error(ErrorCode::kInvalidFeatureMap, path.string() + " is not a descriptor file (W != 1)");
  }
  DescriptorFile file;
  auto& d = file.descriptors;
  d.dim = map.channels;
  d.values = map.data;
  const auto side_path = sidecar_path(path);
  if (std::filesystem::exists(side_path)) {
    const Json side = read_json_file(side_path);
    try {
      file.shape_id = side.value("shape_id", std::string());
      d.point_ids = side.at("point_ids").get<std::vector<std::uint32_t>>();
      d.coverage = side.at("coverage").get<std::vector<std::uint32_t>>();
      file.config = side.value("config", Json::object());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidFeatureMap, "bad descriptor sidecar " + side_path.string() + ": " + e.what());
    }
  } else {
    d.point_ids.resize(map.height);
    for (std::uint32_t i = 0; i < map.height; ++i) d.point_ids[i] = i;
    d.coverage.assign(map.height, 1);
  }
  if (d.point_ids.size() != map.height || d.coverage.size() != map.height) {
    throw Error(ErrorCode::kInvalidFeatureMap, "descriptor sidecar lists a different point count");
  }
  return file;
}

}  // namespace diff3f
