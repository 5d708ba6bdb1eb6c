#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diff3f/distiller.hpp"
#include "diff3f/json_util.hpp"
#include "diff3f/matcher.hpp"

namespace diff3f {

enum class ProviderKind { kSynthetic, kExternalManifest };

// Every knob of a run. The JSON form uses the field names below; CLI flags use
// the same names in kebab-case (n_views -> --n-views).
struct RunConfig {
  int n_views = 100;
  int resolution = 512;
  double distance = 2.5;
  double fov = 50.0;
  double r_fraction = 0.01;
  double alpha = 0.5;
  int T = 30;
  bool invert_weights = false;
  std::string pooling = "mean";       // mean | max
  std::string weighting = "uniform";  // uniform | gaussian
  std::string normals = "smooth";     // smooth | flat
  int splat_px = 2;
  double edge_low = 0.05;
  double edge_high = 0.15;
  bool fill_uncovered = true;
  // Upper bound on descriptor dim; 0 disables the check.
  int max_dim = 0;
  ProviderKind provider = ProviderKind::kSynthetic;
  int synthetic_dim = 48;
  bool emulate_extractor = false;
  std::uint64_t seed = 0;
  // Points sampled per shape; 0 keeps every vertex.
  int sample_count = 0;
  // Points sampled per shape in eval-suite pairs; 0 keeps every vertex.
  int pair_sample_count = 1024;
  std::vector<double> tolerances{0.01, 0.05, 0.10, 0.20};
  bool exclude_uncovered = false;
  unsigned jobs = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::string provider_name(ProviderKind kind);
ProviderKind parse_provider(const std::string& name);

Json to_json(const RunConfig& config);
// Missing keys keep their defaults; unknown keys and invalid values throw
// InvalidArgument.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void validate_run_config(const RunConfig& config);

DistillConfig to_distill_config(const RunConfig& config);
SyntheticProviderConfig to_synthetic_config(const RunConfig& config);
EvalOptions to_eval_options(const RunConfig& config);
std::vector<ViewSpec> run_views(const RunConfig& config);

}  // namespace diff3f
