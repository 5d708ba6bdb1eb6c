#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diff3f/camera.hpp"

namespace diff3f {

struct TimestepFile {
  int timestep = 0;
  std::filesystem::path path;
};

struct ManifestView {
  int view_id = 0;
  CameraPose camera;
  std::vector<TimestepFile> diffusion;
  std::optional<std::filesystem::path> dino;
  // A precomputed per-view map used as-is (skips timestep aggregation and
  // fusion).
  std::optional<std::filesystem::path> fused;
};

// Index of the per-view feature files an extractor produced for one shape.
// Paths are stored relative to the manifest file's directory.
//
//   {"shape_id": str, "extractor": str, "T": int, "weights_spec": str,
//    "views": [{"view_id": int,
//               "camera": {theta_deg, phi_deg, distance, fov_y_deg, H, W},
//               "diffusion": [{"timestep": int, "path": str}, ...],
//               "dino": str|null, "fused": str|null}, ...]}
struct FeatureManifest {
  std::string shape_id;
  std::string extractor;
  int total_steps = 30;
  std::string weights_spec;
  std::vector<ManifestView> views;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
};

FeatureManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const FeatureManifest& manifest, const std::filesystem::path& path);

struct ManifestIssue {
  int view_id = 0;
  std::string reason;
};

struct ManifestValidation {
  std::vector<int> accepted;  // view ids, manifest order
  std::vector<ManifestIssue> rejected;
  bool ok() const { return rejected.empty(); }
};

// Checks every referenced file's header, view id uniqueness, and that each
// feature family (diffusion, dino, fused) uses one (H, W) across views; views
// off the majority resolution are rejected rather than failing the whole
// manifest.
ManifestValidation validate_manifest(const FeatureManifest& manifest);

}  // namespace diff3f
