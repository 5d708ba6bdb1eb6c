#include <map>
#include <set>
#include <utility>

#include "diff3f/error.hpp"
#include "diff3f/feature_store.hpp"
#include "diff3f/json_util.hpp"
#include "diff3f/manifest.hpp"

namespace diff3f {

namespace {

std::optional<std::filesystem::path> optional_path(const Json& view, const char* key) {
  if (!view.contains(key) || view[key].is_null()) return std::nullopt;
  return std::filesystem::path(view[key].get<std::string>());
}

using Resolution = std::pair<std::uint32_t, std::uint32_t>;

}  // namespace

FeatureManifest load_manifest(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  FeatureManifest manifest;
  manifest.base_dir = path.parent_path();
  try {
    manifest.shape_id = j.value("shape_id", std::string());
    manifest.extractor = j.value("extractor", std::string());
    manifest.total_steps = j.value("T", 30);
    manifest.weights_spec = j.value("weights_spec", std::string());
    for (const auto& v : j.at("views")) {
      ManifestView view;
      view.view_id = v.at("view_id").get<int>();
      view.camera = camera_from_json(v.at("camera"));
      if (v.contains("diffusion")) {
        for (const auto& d : v["diffusion"]) {
          view.diffusion.push_back({d.at("timestep").get<int>(), d.at("path").get<std::string>()});
        }
      }
      view.dino = optional_path(v, "dino");
      view.fused = optional_path(v, "fused");
      manifest.views.push_back(std::move(view));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidManifest, "bad manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

void save_manifest(const FeatureManifest& manifest, const std::filesystem::path& path) {
  Json views = Json::array();
  for (const auto& view : manifest.views) {
    Json diffusion = Json::array();
    for (const auto& d : view.diffusion) {
      diffusion.push_back({{"timestep", d.timestep}, {"path", d.path.generic_string()}});
    }
    views.push_back({{"view_id", view.view_id},
                     {"camera", camera_to_json(view.camera)},
                     {"diffusion", diffusion},
                     {"dino", view.dino ? Json(view.dino->generic_string()) : Json(nullptr)},
                     {"fused", view.fused ? Json(view.fused->generic_string()) : Json(nullptr)}});
  }
  write_json_file(path, {{"shape_id", manifest.shape_id},
                         {"extractor", manifest.extractor},
                         {"T", manifest.total_steps},
                         {"weights_spec", manifest.weights_spec},
                         {"views", views}});
}

ManifestValidation validate_manifest(const FeatureManifest& manifest) {
  ManifestValidation result;
  struct Checked {
    int view_id;
    std::map<std::string, Resolution> resolution;  // family -> (H, W)
  };
  std::vector<Checked> checked;
  std::set<int> seen;

  for (const auto& view : manifest.views) {
    if (!seen.insert(view.view_id).second) {
      result.rejected.push_back({view.view_id, "duplicate view_id"});
      continue;
    }
    Checked entry{view.view_id, {}};
    try {
      if (view.diffusion.empty() && !view.fused) {
        throw Error(ErrorCode::kInvalidManifest, "view lists no diffusion or fused features");
      }
      std::set<int> steps;
      std::optional<std::array<std::uint32_t, 3>> diff_dims;
      for (const auto& d : view.diffusion) {
        if (!steps.insert(d.timestep).second) {
          throw Error(ErrorCode::kInvalidManifest, "duplicate timestep " + std::to_string(d.timestep));
        }
        const auto dims = read_feature_header(manifest.resolve(d.path));
        if (diff_dims && *diff_dims != dims) {
          throw Error(ErrorCode::kInvalidManifest, "diffusion maps of one view disagree in shape");
        }
        diff_dims = dims;
      }
      if (diff_dims) entry.resolution["diffusion"] = {(*diff_dims)[0], (*diff_dims)[1]};
      if (view.dino) {
        const auto dims = read_feature_header(manifest.resolve(*view.dino));
        entry.resolution["dino"] = {dims[0], dims[1]};
      }
      if (view.fused) {
        const auto dims = read_feature_header(manifest.resolve(*view.fused));
        entry.resolution["fused"] = {dims[0], dims[1]};
      }
    } catch (const Error& e) {
      result.rejected.push_back({view.view_id, e.what()});
      continue;
    }
    checked.push_back(std::move(entry));
  }

  // Majority resolution per family; ties resolve to the smallest (H, W).
  std::map<std::string, std::map<Resolution, int>> votes;
  for (const auto& entry : checked) {
    for (const auto& [family, res] : entry.resolution) ++votes[family][res];
  }
  std::map<std::string, Resolution> majority;
  for (const auto& [family, counts] : votes) {
    int best = -1;
    for (const auto& [res, count] : counts) {
      if (count > best) {
        best = count;
        majority[family] = res;
      }
    }
  }
  for (const auto& entry : checked) {
    std::string reason;
    for (const auto& [family, res] : entry.resolution) {
      if (res != majority[family]) {
        reason = family + " resolution " + std::to_string(res.first) + "x" +
                 std::to_string(res.second) + " differs from majority " +
                 std::to_string(majority[family].first) + "x" + std::to_string(majority[family].second);
        break;
      }
    }
    if (reason.empty()) {
      result.accepted.push_back(entry.view_id);
    } else {
      result.rejected.push_back({entry.view_id, reason});
    }
  }
  return result;
}

}  // namespace diff3f
