#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "diff3f/json_util.hpp"

namespace diff3f {

// Row-major |points| x dim matrix of per-point descriptors. Rows with
// coverage > 0 are unit length; rows with coverage 0 were never seen by any
// view and hold whatever fill the producer chose (see distill).
struct PointDescriptors {
  std::vector<std::uint32_t> point_ids;
  std::size_t dim = 0;
  std::vector<float> values;
  std::vector<std::uint32_t> coverage;

  std::size_t size() const { return point_ids.size(); }
  bool covered(std::size_t i) const { return coverage[i] > 0; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }
};

struct DescriptorFile {
  PointDescriptors descriptors;
  std::string shape_id;
  Json config;
};

// D3FF payload with H = |points|, W = 1, C = dim, plus a sidecar
//   {kind: "descriptor", H, W, C, timestep: null, shape_id, point_ids,
//    coverage, config}.
void write_descriptors(const std::filesystem::path& path, const PointDescriptors& descriptors,
                       const std::string& shape_id, const Json& config);
DescriptorFile read_descriptors(const std::filesystem::path& path);

}  // namespace diff3f
