#include <set>

#include "diff3f/error.hpp"
#include "diff3f/run_config.hpp"

namespace diff3f {

namespace {

void invalid(const std::string& message) { throw Error(ErrorCode::kInvalidArgument, message); }

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    invalid(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string provider_name(ProviderKind kind) {
  return kind == ProviderKind::kSynthetic ? "synthetic" : "external-manifest";
}

ProviderKind parse_provider(const std::string& name) {
  if (name == "synthetic") return ProviderKind::kSynthetic;
  if (name == "external-manifest") return ProviderKind::kExternalManifest;
  invalid("unknown provider '" + name + "'");
  return ProviderKind::kSynthetic;
}

Json to_json(const RunConfig& c) {
  return Json{{"n_views", c.n_views},
              {"resolution", c.resolution},
              {"distance", c.distance},
              {"fov", c.fov},
              {"r_fraction", c.r_fraction},
              {"alpha", c.alpha},
              {"T", c.T},
              {"invert_weights", c.invert_weights},
              {"pooling", c.pooling},
              {"weighting", c.weighting},
              {"normals", c.normals},
              {"splat_px", c.splat_px},
              {"edge_low", c.edge_low},
              {"edge_high", c.edge_high},
              {"fill_uncovered", c.fill_uncovered},
              {"max_dim", c.max_dim},
              {"provider", provider_name(c.provider)},
              {"synthetic_dim", c.synthetic_dim},
              {"emulate_extractor", c.emulate_extractor},
              {"seed", c.seed},
              {"sample_count", c.sample_count},
              {"pair_sample_count", c.pair_sample_count},
              {"tolerances", c.tolerances},
              {"exclude_uncovered", c.exclude_uncovered},
              {"jobs", c.jobs}};
}

RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  static const std::set<std::string> known = {
      "n_views",   "resolution",      "distance",       "fov",           "r_fraction",
      "alpha",     "T",               "invert_weights", "pooling",       "weighting",
      "normals",   "splat_px",        "edge_low",       "edge_high",     "fill_uncovered",
      "max_dim",   "provider",        "synthetic_dim",  "emulate_extractor", "seed",
      "sample_count", "pair_sample_count", "tolerances", "exclude_uncovered", "jobs"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) invalid("unknown config field '" + key + "'");
  }
  RunConfig c;
  read_field(j, "n_views", c.n_views);
  read_field(j, "resolution", c.resolution);
  read_field(j, "distance", c.distance);
  read_field(j, "fov", c.fov);
  read_field(j, "r_fraction", c.r_fraction);
  read_field(j, "alpha", c.alpha);
  read_field(j, "T", c.T);
  read_field(j, "invert_weights", c.invert_weights);
  read_field(j, "pooling", c.pooling);
  read_field(j, "weighting", c.weighting);
  read_field(j, "normals", c.normals);
  read_field(j, "splat_px", c.splat_px);
  read_field(j, "edge_low", c.edge_low);
  read_field(j, "edge_high", c.edge_high);
  read_field(j, "fill_uncovered", c.fill_uncovered);
  read_field(j, "max_dim", c.max_dim);
  std::string provider = provider_name(c.provider);
  read_field(j, "provider", provider);
  c.provider = parse_provider(provider);
  read_field(j, "synthetic_dim", c.synthetic_dim);
  read_field(j, "emulate_extractor", c.emulate_extractor);
  read_field(j, "seed", c.seed);
  read_field(j, "sample_count", c.sample_count);
  read_field(j, "pair_sample_count", c.pair_sample_count);
  read_field(j, "tolerances", c.tolerances);
  read_field(j, "exclude_uncovered", c.exclude_uncovered);
  read_field(j, "jobs", c.jobs);
  validate_run_config(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path));
}

void validate_run_config(const RunConfig& c) {
  if (c.n_views < 1) invalid("n_views must be >= 1");
  if (c.resolution < 64) invalid("resolution must be >= 64");
  if (!(c.distance > 0.0)) invalid("distance must be positive");
  if (!(c.fov > 0.0 && c.fov < 180.0)) invalid("fov must lie in (0, 180)");
  if (!(c.r_fraction > 0.0)) invalid("r_fraction must be positive");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) invalid("alpha must lie in [0, 1]");
  if (c.T < 1) invalid("T must be >= 1");
  if (c.pooling != "mean" && c.pooling != "max") invalid("pooling must be mean or max");
  if (c.weighting != "uniform" && c.weighting != "gaussian") invalid("weighting must be uniform or gaussian");
  if (c.normals != "smooth" && c.normals != "flat") invalid("normals must be smooth or flat");
  if (c.splat_px < 1) invalid("splat_px must be >= 1");
  if (!(c.edge_low >= 0.0 && c.edge_low <= c.edge_high)) invalid("need 0 <= edge_low <= edge_high");
  if (c.max_dim < 0) invalid("max_dim must be >= 0");
  if (c.synthetic_dim < 8 || c.synthetic_dim % 2 != 0) invalid("synthetic_dim must be even and >= 8");
  if (c.sample_count < 0 || c.pair_sample_count < 0) invalid("sample counts must be >= 0");
  for (double t : c.tolerances) {
    if (!(t >= 0.0)) invalid("tolerances must be non-negative");
  }
}

DistillConfig to_distill_config(const RunConfig& c) {
  DistillConfig d;
  d.r_fraction = c.r_fraction;
  d.fusion.alpha = c.alpha;
  d.total_steps = c.T;
  d.invert_weights = c.invert_weights;
  d.pooling = c.pooling == "max" ? ViewPooling::kMax : ViewPooling::kMean;
  d.weighting = c.weighting == "gaussian" ? BallWeighting::kGaussian : BallWeighting::kUniform;
  d.render.normals = c.normals == "flat" ? NormalMode::kFlat : NormalMode::kSmooth;
  d.render.splat_px = c.splat_px;
  d.render.edges = {c.edge_low, c.edge_high};
  d.jobs = c.jobs;
  d.fill_uncovered = c.fill_uncovered;
  return d;
}

SyntheticProviderConfig to_synthetic_config(const RunConfig& c) {
  SyntheticProviderConfig s;
  s.dim = c.synthetic_dim;
  s.seed = c.seed;
  s.emulate_extractor = c.emulate_extractor;
  s.total_steps = c.T;
  return s;
}

EvalOptions to_eval_options(const RunConfig& c) {
  EvalOptions e;
  e.tolerances = c.tolerances;
  e.exclude_uncovered = c.exclude_uncovered;
  return e;
}

std::vector<ViewSpec> run_views(const RunConfig& c) {
  return default_views(c.n_views, c.distance, c.resolution, c.fov);
}

}  // namespace diff3f
