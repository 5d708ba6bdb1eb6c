#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "diff3f/commands.hpp"
#include "diff3f/descriptors.hpp"
#include "diff3f/error.hpp"
#include "diff3f/file_util.hpp"
#include "diff3f/parallel.hpp"
#include "diff3f/rng.hpp"
#include "diff3f/view_export.hpp"

namespace diff3f {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_csv(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 1469598103934665603ull) {
  for (auto b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h) {
  return fnv1a({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}, h);
}

Shape load_normalized(const fs::path& path) { return normalize(load_shape(path)); }

// Every vertex when count is 0 or covers the shape; otherwise `required`
// plus a seeded uniform fill, sorted.
SamplePlan make_plan(const Shape& shape, int count, std::uint64_t seed,
                     const std::vector<std::uint32_t>& required = {}) {
  const std::size_t n = shape.size();
  if (count <= 0 || static_cast<std::size_t>(count) >= n) return all_points(shape);
  if (required.empty()) {
    auto plan = random_sample(shape, static_cast<std::size_t>(count), seed);
    std::sort(plan.indices.begin(), plan.indices.end());
    return plan;
  }
  std::vector<char> taken(n, 0);
  std::vector<std::uint32_t> picked;
  for (auto idx : required) {
    if (idx >= n) {
      throw Error(ErrorCode::kInvalidArgument, "ground-truth index " + std::to_string(idx) + " out of range");
    }
    if (!taken[idx]) picked.push_back(idx);
    taken[idx] = 1;
  }
  std::vector<std::uint32_t> pool;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!taken[i]) pool.push_back(i);
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < pool.size() && picked.size() < static_cast<std::size_t>(count); ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    picked.push_back(pool[i]);
  }
  std::sort(picked.begin(), picked.end());
  return {std::move(picked), seed};
}

struct Distilled {
  PointDescriptors descriptors;
  Json details;  // radius, failed_views, warnings
};

Distilled run_distill(const RunConfig& config, const Shape& shape, const SamplePlan& plan,
                      const std::optional<fs::path>& manifest_path, unsigned jobs) {
  DistillConfig dcfg = to_distill_config(config);
  dcfg.jobs = jobs;
  std::vector<std::string> warnings;
  std::vector<ViewSpec> views;
  std::unique_ptr<FeatureProvider> provider;
  if (config.provider == ProviderKind::kSynthetic) {
    views = run_views(config);
    provider = std::make_unique<SyntheticProvider>(to_synthetic_config(config));
  } else {
    if (!manifest_path) {
      throw Error(ErrorCode::kInvalidArgument, "the external-manifest provider needs a manifest");
    }
    FeatureManifest manifest = load_manifest(*manifest_path);
    if (manifest.total_steps != config.T) {
      throw Error(ErrorCode::kWindowMismatch, "manifest T = " + std::to_string(manifest.total_steps) +
                                                  " but config T = " + std::to_string(config.T));
    }
    const auto validation = validate_manifest(manifest);
    for (const auto& issue : validation.rejected) {
      warnings.push_back("view " + std::to_string(issue.view_id) + " rejected: " + issue.reason);
    }
    const std::set<int> accepted(validation.accepted.begin(), validation.accepted.end());
    for (const auto& mv : manifest.views) {
      if (accepted.count(mv.view_id)) views.push_back({mv.view_id, mv.camera});
    }
    if (views.size() < static_cast<std::size_t>(config.n_views)) {
      warnings.push_back("manifest provides " + std::to_string(views.size()) + " of " +
                         std::to_string(config.n_views) + " views; coverage is partial");
    }
    provider = std::make_unique<ManifestProvider>(std::move(manifest));
  }
  if (views.empty()) throw Error(ErrorCode::kNoCoverage, "no usable views");

  DistillResult result = distill(shape, plan, views, *provider, dcfg);
  Json failed = Json::array();
  for (const auto& f : result.failures) {
    failed.push_back({{"view_id", f.view_id}, {"reason", f.reason}});
    warnings.push_back("view " + std::to_string(f.view_id) + " failed: " + f.reason);
  }
  const auto& d = result.descriptors;
  const auto uncovered = static_cast<std::size_t>(std::count(d.coverage.begin(), d.coverage.end(), 0u));
  if (uncovered > 0) {
    warnings.push_back(std::to_string(uncovered) + " of " + std::to_string(d.size()) +
                       " points are not covered by any view");
  }
  if (config.max_dim > 0 && d.dim > static_cast<std::size_t>(config.max_dim)) {
    throw Error(ErrorCode::kDimMismatch, "descriptor dim " + std::to_string(d.dim) + " exceeds max_dim " +
                                             std::to_string(config.max_dim));
  }
  return {std::move(result.descriptors),
          Json{{"radius", result.radius}, {"failed_views", failed}, {"warnings", warnings}}};
}

std::optional<fs::path> cache_dir() {
  const char* env = std::getenv("DIFF3F_CACHE_DIR");
  if (!env || !*env) return std::nullopt;
  return fs::path(env);
}

Json config_key(const RunConfig& config) {
  Json j = to_json(config);
  j.erase("jobs");
  return j;
}

// Distills with the cache in DIFF3F_CACHE_DIR when set.
Distilled distill_cached(const RunConfig& config, const fs::path& shape_path, const Shape& shape,
                         const SamplePlan& plan, const std::optional<fs::path>& manifest, unsigned jobs) {
  const auto dir = cache_dir();
  fs::path entry;
  if (dir) {
    std::uint64_t h = fnv1a(read_file_bytes(shape_path));
    h = fnv1a(config_key(config).dump(), h);
    for (auto idx : plan.indices) h = fnv1a(std::to_string(idx) + ",", h);
    if (manifest && config.provider == ProviderKind::kExternalManifest) h = fnv1a(read_file_bytes(*manifest), h);
    char name[48];
    std::snprintf(name, sizeof(name), "distill_%016llx.d3ff", static_cast<unsigned long long>(h));
    entry = *dir / name;
    if (fs::exists(entry) && fs::exists(sidecar_path(entry))) {
      try {
        auto cached = read_descriptors(entry);
        return {std::move(cached.descriptors), cached.config};
      } catch (const Error&) {
        // Unreadable entries are recomputed and overwritten.
      }
    }
  }
  Distilled d = run_distill(config, shape, plan, manifest, jobs);
  if (dir) {
    fs::create_directories(*dir);
    write_descriptors(entry, d.descriptors, shape_path.stem().string(), d.details);
  }
  return d;
}

Json report_json(const EvalReport& r) {
  Json acc = Json::object();
  for (const auto& [gamma, value] : r.acc) acc[format_double(gamma)] = value;
  return Json{{"err", r.err},       {"acc", acc},           {"n", r.n},
              {"excluded", r.excluded}, {"uncovered", r.uncovered}, {"diameter", r.diameter}};
}

Rgb label_color(int label) {
  // Hues stepped by the golden ratio stay apart for small label counts.
  const double hue = std::fmod(label * 0.6180339887498949, 1.0) * 6.0;
  const double s = 0.75, v = 0.95;
  const int sector = static_cast<int>(hue) % 6;
  const double f = hue - std::floor(hue);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = v, g = t, b = p;
  switch (sector) {
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    case 5: r = v; g = p; b = q; break;
    default: break;
  }
  auto u8 = [](double x) { return static_cast<std::uint8_t>(std::lround(x * 255.0)); };
  return {u8(r), u8(g), u8(b)};
}

constexpr Rgb kUnassigned{128, 128, 128};

std::vector<Rgb> position_colors(const Shape& shape) {
  const Shape unit = normalize(shape);
  const auto box = bounding_box(unit.vertices);
  const Vec3 extent = box.max() - box.min();
  std::vector<Rgb> colors(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    std::uint8_t c[3];
    for (int a = 0; a < 3; ++a) {
      const double t = extent[a] > 0.0 ? (unit.vertices[i][a] - box.min()[a]) / extent[a] : 0.5;
      c[a] = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
    }
    colors[i] = {c[0], c[1], c[2]};
  }
  return colors;
}

std::string pair_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pair_%03zu.json", index);
  return buf;
}

}  // namespace

CommandOutput cmd_render(const RunConfig& config, const fs::path& shape_path, const fs::path& out_dir) {
  validate_run_config(config);
  const Shape shape = load_normalized(shape_path);
  const auto views = run_views(config);
  const RenderOptions options = to_distill_config(config).render;
  fs::create_directories(out_dir);
  parallel_for(views.size(), config.jobs, [&](std::size_t i) {
    const ViewBundle view = render_view(shape, views[i].camera, options);
    export_view(view, views[i].view_id, out_dir / view_dir_name(views[i].view_id));
  });
  Json index = Json::array();
  for (const auto& v : views) {
    Json j = camera_to_json(v.camera);
    j["view_id"] = v.view_id;
    j["dir"] = view_dir_name(v.view_id);
    index.push_back(j);
  }
  write_json_file(out_dir / "views.json",
                  Json{{"config", to_json(config)}, {"shape", shape_path.generic_string()},
                       {"has_normals", shape.has_faces()}, {"views", index}});
  CommandOutput out;
  out.summary = {{"command", "render"}, {"out", out_dir.generic_string()}, {"views", views.size()}};
  return out;
}

CommandOutput cmd_distill(const RunConfig& config, const fs::path& shape_path, const fs::path& out,
                          const std::optional<fs::path>& manifest) {
  validate_run_config(config);
  const Shape shape = load_normalized(shape_path);
  const SamplePlan plan = make_plan(shape, config.sample_count, config.seed);
  Distilled d = distill_cached(config, shape_path, shape, plan, manifest, config.jobs);

  Json echo = d.details;
  echo["run_config"] = to_json(config);
  echo["shape"] = shape_path.generic_string();
  if (manifest) echo["manifest"] = manifest->generic_string();
  write_descriptors(out, d.descriptors, shape_path.stem().string(), echo);

  CommandOutput result;
  for (const auto& w : d.details.at("warnings")) result.warnings.push_back(w.get<std::string>());
  const auto covered = std::count_if(d.descriptors.coverage.begin(), d.descriptors.coverage.end(),
                                     [](std::uint32_t c) { return c > 0; });
  result.summary = {{"command", "distill"},
                    {"out", out.generic_string()},
                    {"points", d.descriptors.size()},
                    {"dim", d.descriptors.dim},
                    {"covered", covered},
                    {"failed_views", d.details.at("failed_views").size()}};
  return result;
}

CommandOutput cmd_match(const RunConfig& config, const fs::path& source, const fs::path& target,
                        const fs::path& out, const std::optional<fs::path>& ground_truth,
                        const std::optional<fs::path>& target_shape) {
  validate_run_config(config);
  if (ground_truth && !target_shape) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation against ground truth needs the target shape");
  }
  const DescriptorFile src = read_descriptors(source);
  const DescriptorFile tgt = read_descriptors(target);
  const CorrespondenceResult corr = match(src.descriptors, tgt.descriptors);

  Json pairs = Json::array();
  for (std::size_t i = 0; i < corr.source_ids.size(); ++i) {
    pairs.push_back(Json::array({corr.source_ids[i], corr.assignment[i], corr.score[i]}));
  }
  Json doc{{"config", to_json(config)},
           {"source", source.generic_string()},
           {"target", target.generic_string()},
           {"source_shape_id", src.shape_id},
           {"target_shape_id", tgt.shape_id},
           {"pairs", pairs}};

  CommandOutput result;
  result.summary = {{"command", "match"}, {"out", out.generic_string()}, {"pairs", corr.source_ids.size()}};
  if (ground_truth) {
    const GroundTruth gt = read_ground_truth(*ground_truth);
    const Shape shape = load_normalized(*target_shape);
    EvalOptions options = to_eval_options(config);
    options.restrict_to_ground_truth = true;
    const EvalReport report = evaluate(corr, gt, shape, options, src.descriptors.coverage);
    doc["ground_truth"] = ground_truth->generic_string();
    doc["report"] = report_json(report);
    result.summary["report"] = doc["report"];
    if (report.uncovered > 0) {
      result.warnings.push_back(std::to_string(report.uncovered) + " evaluated source points are uncovered");
    }
  }
  write_json_file(out, doc);
  return result;
}

std::vector<PairSpec> read_pair_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open pair list " + path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  std::vector<PairSpec> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string s, t, g, extra;
    if (!(fields >> s >> t) || (fields >> g && fields >> extra)) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": expected 'source target [gt]'");
    }
    PairSpec spec{resolve(s), resolve(t), std::nullopt};
    if (!g.empty()) spec.ground_truth = resolve(g);
    pairs.push_back(std::move(spec));
  }
  return pairs;
}

CommandOutput cmd_eval_suite(const RunConfig& config, const fs::path& pair_list, const fs::path& out_dir) {
  validate_run_config(config);
  const auto pairs = read_pair_list(pair_list);
  fs::create_directories(out_dir / "pairs");
  const unsigned inner_jobs = pairs.size() > 1 ? 1u : config.jobs;
  auto manifest_for = [&](const fs::path& shape) -> std::optional<fs::path> {
    if (config.provider != ProviderKind::kExternalManifest) return std::nullopt;
    fs::path m = shape;
    m.replace_extension(".manifest.json");
    return m;
  };

  std::vector<Json> results(pairs.size());
  parallel_for(pairs.size(), config.jobs, [&](std::size_t i) {
    const PairSpec& spec = pairs[i];
    Json r{{"pair", i},
           {"source", spec.source.generic_string()},
           {"target", spec.target.generic_string()},
           {"ground_truth", spec.ground_truth ? Json(spec.ground_truth->generic_string()) : Json(nullptr)}};
    try {
      std::optional<GroundTruth> gt;
      std::vector<std::uint32_t> required;
      if (spec.ground_truth) {
        gt = read_ground_truth(*spec.ground_truth);
        for (const auto& [s, t] : *gt) required.push_back(s);
      }
      const Shape src_shape = load_normalized(spec.source);
      const Shape tgt_shape = load_normalized(spec.target);
      const auto src_plan = make_plan(src_shape, config.pair_sample_count, config.seed, required);
      const auto tgt_plan = make_plan(tgt_shape, config.pair_sample_count, config.seed);
      const auto src = distill_cached(config, spec.source, src_shape, src_plan, manifest_for(spec.source), inner_jobs);
      const auto tgt = distill_cached(config, spec.target, tgt_shape, tgt_plan, manifest_for(spec.target), inner_jobs);
      const auto corr = match(src.descriptors, tgt.descriptors);
      Json warnings = Json::array();
      for (const auto& w : src.details.at("warnings")) warnings.push_back("source: " + w.get<std::string>());
      for (const auto& w : tgt.details.at("warnings")) warnings.push_back("target: " + w.get<std::string>());
      r["warnings"] = warnings;
      if (gt) {
        EvalOptions options = to_eval_options(config);
        options.restrict_to_ground_truth = true;
        r["report"] = report_json(evaluate(corr, *gt, tgt_shape, options, src.descriptors.coverage));
        r["status"] = "ok";
      } else {
        r["status"] = "no-gt";
      }
    } catch (const Error& e) {
      r["status"] = "failed";
      r["error"] = {{"code", std::string(error_code_name(e.code()))}, {"message", e.what()}};
    } catch (const std::exception& e) {
      r["status"] = "failed";
      r["error"] = {{"code", "IoError"}, {"message", e.what()}};
    }
    Json file = r;
    file["config"] = to_json(config);
    write_json_file(out_dir / "pairs" / pair_file_name(i), file);
    results[i] = std::move(r);
  });

  CommandOutput out;
  std::ostringstream csv;
  csv << "pair,source,target,n,err";
  for (double g : config.tolerances) csv << ",acc@" << format_double(g);
  csv << "\n";
  std::size_t evaluated = 0, failed = 0;
  double err_sum = 0.0;
  std::vector<double> acc_sum(config.tolerances.size(), 0.0);
  Json failures = Json::array();
  for (const auto& r : results) {
    const std::string status = r.at("status");
    if (status == "failed") {
      ++failed;
      failures.push_back({{"pair", r.at("pair")}, {"error", r.at("error")}});
      out.warnings.push_back("pair " + std::to_string(r.at("pair").get<std::size_t>()) + " failed: " +
                             r.at("error").at("message").get<std::string>());
      continue;
    }
    if (status != "ok") continue;
    const Json& rep = r.at("report");
    ++evaluated;
    err_sum += rep.at("err").get<double>();
    csv << r.at("pair").get<std::size_t>() << "," << r.at("source").get<std::string>() << ","
        << r.at("target").get<std::string>() << "," << rep.at("n").get<std::size_t>() << ","
        << format_csv(rep.at("err").get<double>());
    for (std::size_t k = 0; k < config.tolerances.size(); ++k) {
      const double a = rep.at("acc").at(format_double(config.tolerances[k])).get<double>();
      acc_sum[k] += a;
      csv << "," << format_csv(a);
    }
    csv << "\n";
  }
  Json mean_acc = Json::object();
  csv << "mean,,," << evaluated << ",";
  if (evaluated > 0) csv << format_csv(err_sum / evaluated);
  for (std::size_t k = 0; k < config.tolerances.size(); ++k) {
    csv << ",";
    if (evaluated == 0) continue;
    const double mean = acc_sum[k] / evaluated;
    mean_acc[format_double(config.tolerances[k])] = mean;
    csv << format_csv(mean);
  }
  csv << "\n";
  write_file_atomic(out_dir / "results.csv", csv.str());

  Json summary{{"pairs", pairs.size()},
               {"evaluated", evaluated},
               {"failed", failed},
               {"mean_err", evaluated > 0 ? Json(err_sum / evaluated) : Json(nullptr)},
               {"mean_acc", mean_acc}};
  write_json_file(out_dir / "report.json",
                  Json{{"config", to_json(config)}, {"pair_list", pair_list.generic_string()},
                       {"pairs", results}, {"failures", failures}, {"summary", summary}});
  out.summary = {{"command", "eval-suite"}, {"out", out_dir.generic_string()}, {"summary", summary}};
  return out;
}

CommandOutput cmd_export_ply(const ExportPlyArgs& args) {
  if (args.labels && args.correspondence) {
    throw Error(ErrorCode::kInvalidArgument, "choose either labels or a correspondence");
  }
  PlyWriteOptions options;
  options.format = args.ascii ? PlyFormat::kAscii : PlyFormat::kBinary;
  const Shape shape = load_shape(args.shape);
  CommandOutput out;
  out.summary = {{"command", "export-ply"}, {"out", args.out.generic_string()}};

  if (args.labels) {
    const Json seg = read_json_file(*args.labels);
    const auto ids = seg.at("point_ids").get<std::vector<std::uint32_t>>();
    const auto labels = seg.at("labels").get<std::vector<int>>();
    if (ids.size() != labels.size()) throw Error(ErrorCode::kInvalidArgument, "label file is inconsistent");
    std::vector<Rgb> colors(shape.size(), kUnassigned);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= shape.size()) throw Error(ErrorCode::kInvalidArgument, "label point id out of range");
      colors[ids[i]] = label_color(labels[i]);
    }
    write_ply(args.out, shape, colors, options);
    out.summary["colors"] = "labels";
    return out;
  }

  if (args.correspondence) {
    if (!args.target_shape || !args.target_out) {
      throw Error(ErrorCode::kInvalidArgument, "correspondence export needs the target shape and output");
    }
    const Json corr = read_json_file(*args.correspondence);
    const Shape target = load_shape(*args.target_shape);
    const auto source_colors = position_colors(shape);
    std::vector<Rgb> target_colors(target.size(), kUnassigned);
    std::vector<double> best(target.size(), -std::numeric_limits<double>::infinity());
    for (const auto& p : corr.at("pairs")) {
      const auto s = p.at(0).get<std::uint32_t>();
      const auto t = p.at(1).get<std::uint32_t>();
      const double score = p.at(2).get<double>();
      if (s >= shape.size() || t >= target.size()) {
        throw Error(ErrorCode::kInvalidArgument, "correspondence index out of range");
      }
      // Several sources may land on one target vertex; the best score wins.
      if (score > best[t]) {
        best[t] = score;
        target_colors[t] = source_colors[s];
      }
    }
    write_ply(args.out, shape, source_colors, options);
    write_ply(*args.target_out, target, target_colors, options);
    out.summary["colors"] = "correspondence";
    out.summary["target_out"] = args.target_out->generic_string();
    return out;
  }

  write_ply(args.out, shape, {}, options);
  out.summary["colors"] = nullptr;
  return out;
}

CommandOutput cmd_segment(const RunConfig& config, const fs::path& descriptors, int k, const fs::path& out,
                          const std::optional<fs::path>& centroids_from) {
  validate_run_config(config);
  const DescriptorFile file = read_descriptors(descriptors);
  const PointDescriptors& d = file.descriptors;
  Json doc{{"config", to_json(config)}, {"descriptors", descriptors.generic_string()},
           {"shape_id", file.shape_id}, {"point_ids", d.point_ids}};
  if (centroids_from) {
    const Json fit = read_json_file(*centroids_from);
    std::vector<double> flat;
    std::size_t dim = 0;
    for (const auto& row : fit.at("centroids")) {
      const auto values = row.get<std::vector<double>>();
      if (dim == 0) dim = values.size();
      if (values.size() != dim) throw Error(ErrorCode::kInvalidArgument, "ragged centroid rows");
      flat.insert(flat.end(), values.begin(), values.end());
    }
    if (flat.empty()) throw Error(ErrorCode::kInvalidArgument, "no centroids in " + centroids_from->string());
    const auto labels = segment_transfer(flat, dim, d);
    doc["k"] = flat.size() / dim;
    doc["labels"] = labels;
    doc["transferred_from"] = centroids_from->generic_string();
  } else {
    const SegmentationResult fit = kmeans_fit(d, k, config.seed);
    Json centroids = Json::array();
    for (int c = 0; c < fit.k; ++c) {
      const auto row = fit.centroid(c);
      centroids.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["k"] = fit.k;
    doc["labels"] = fit.labels;
    doc["centroids"] = centroids;
    doc["inertia_history"] = fit.inertia_history;
    doc["iterations"] = fit.iterations;
  }
  write_json_file(out, doc);
  CommandOutput result;
  result.summary = {{"command", "segment"}, {"out", out.generic_string()}, {"k", doc["k"]}};
  return result;
}

namespace {

// RunConfig flags on one subcommand. Values given on the command line
// override those from --config.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) {
    app->add_option("--config", path_, "JSON run config");
    option(app, "--n-views", &RunConfig::n_views, "Number of views");
    option(app, "--resolution", &RunConfig::resolution, "Render resolution (square)");
    option(app, "--distance", &RunConfig::distance, "Camera distance");
    option(app, "--fov", &RunConfig::fov, "Vertical field of view in degrees");
    option(app, "--r-fraction", &RunConfig::r_fraction, "Ball radius as a fraction of the bbox diagonal");
    option(app, "--alpha", &RunConfig::alpha, "Fusion weight of diffusion features");
    option(app, "--T", &RunConfig::T, "Denoising steps");
    flag(app, "invert-weights", &RunConfig::invert_weights, "Put the largest weight on the noisiest step");
    option(app, "--pooling", &RunConfig::pooling, "mean | max");
    option(app, "--weighting", &RunConfig::weighting, "uniform | gaussian");
    option(app, "--normals", &RunConfig::normals, "smooth | flat");
    option(app, "--splat-px", &RunConfig::splat_px, "Point splat radius in pixels");
    option(app, "--edge-low", &RunConfig::edge_low, "Canny low threshold");
    option(app, "--edge-high", &RunConfig::edge_high, "Canny high threshold");
    flag(app, "fill-uncovered", &RunConfig::fill_uncovered, "Fill uncovered points from nearest covered");
    option(app, "--max-dim", &RunConfig::max_dim, "Reject descriptors wider than this (0 = off)");
    provider_option_ = app->add_option("--provider", provider_, "synthetic | external-manifest");
    option(app, "--synthetic-dim", &RunConfig::synthetic_dim, "Synthetic feature dim");
    flag(app, "emulate-extractor", &RunConfig::emulate_extractor, "Synthetic per-timestep and dino maps");
    option(app, "--seed", &RunConfig::seed, "Seed");
    option(app, "--sample-count", &RunConfig::sample_count, "Points per shape (0 = all)");
    option(app, "--pair-sample-count", &RunConfig::pair_sample_count, "Points per shape in eval-suite (0 = all)");
    option(app, "--tolerances", &RunConfig::tolerances, "Accuracy tolerances")->delimiter(',');
    flag(app, "exclude-uncovered", &RunConfig::exclude_uncovered, "Drop uncovered points from metrics");
    option(app, "--jobs", &RunConfig::jobs, "Worker threads (0 = all cores)");
  }

  ConfigFlags(const ConfigFlags&) = delete;
  ConfigFlags& operator=(const ConfigFlags&) = delete;

  RunConfig resolve() const {
    RunConfig c = path_.empty() ? RunConfig{} : load_run_config(path_);
    for (const auto& [opt, apply] : bindings_) {
      if (opt->count() > 0) apply(c);
    }
    if (provider_option_->count() > 0) c.provider = parse_provider(provider_);
    validate_run_config(c);
    return c;
  }

 private:
  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& name, T RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app->add_option(name, values_.*member, help);
    bindings_.emplace_back(opt, [this, member](RunConfig& c) { c.*member = values_.*member; });
    return opt;
  }

  void flag(CLI::App* app, const std::string& name, bool RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app->add_flag("--" + name + ",!--no-" + name, values_.*member, help);
    bindings_.emplace_back(opt, [this, member](RunConfig& c) { c.*member = values_.*member; });
  }

  RunConfig values_;
  std::string path_;
  std::string provider_;
  CLI::Option* provider_option_ = nullptr;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> bindings_;
};

void print_error(std::ostream& err, std::string_view code, std::string_view message) {
  err << Json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view feature distillation for 3D shape correspondence"};
  app.name("diff3f");
  app.require_subcommand(1);

  std::string shape, output, manifest, source, target, gt, target_shape, pair_list, labels, correspondence,
      target_out, descriptors, centroids;
  bool ascii = false;
  int k = 0;

  auto* config_cmd = app.add_subcommand("config", "Print the resolved run config as JSON");
  ConfigFlags config_flags(config_cmd);
  config_cmd->add_option("--out", output, "Write the config here instead of stdout");

  auto* render = app.add_subcommand("render", "Render view bundles for a shape");
  ConfigFlags render_flags(render);
  render->add_option("shape", shape, "Mesh or point cloud")->required();
  render->add_option("--out", output, "Output directory")->required();

  auto* distill_cmd = app.add_subcommand("distill", "Distill per-point descriptors");
  ConfigFlags distill_flags(distill_cmd);
  distill_cmd->add_option("shape", shape, "Mesh or point cloud")->required();
  distill_cmd->add_option("--out", output, "Descriptor file (.d3ff)")->required();
  distill_cmd->add_option("--manifest", manifest, "Feature manifest (external-manifest provider)");

  auto* match_cmd = app.add_subcommand("match", "Match two descriptor files");
  ConfigFlags match_flags(match_cmd);
  match_cmd->add_option("source", source, "Source descriptors")->required();
  match_cmd->add_option("target", target, "Target descriptors")->required();
  match_cmd->add_option("--out", output, "Correspondence JSON")->required();
  match_cmd->add_option("--gt", gt, "Ground-truth correspondence file");
  match_cmd->add_option("--target-shape", target_shape, "Target shape for evaluation");

  auto* suite = app.add_subcommand("eval-suite", "Run and evaluate a list of shape pairs");
  ConfigFlags suite_flags(suite);
  suite->add_option("pairs", pair_list, "Pair list file")->required();
  suite->add_option("--out", output, "Output directory")->required();

  auto* export_cmd = app.add_subcommand("export-ply", "Export a colored PLY");
  export_cmd->add_option("shape", shape, "Shape to export")->required();
  export_cmd->add_option("--out", output, "Output PLY")->required();
  export_cmd->add_option("--labels", labels, "Segment output to color by");
  export_cmd->add_option("--correspondence", correspondence, "Match output to color by");
  export_cmd->add_option("--target-shape", target_shape, "Target shape of the correspondence");
  export_cmd->add_option("--target-out", target_out, "Output PLY for the target");
  export_cmd->add_flag("--ascii", ascii, "Write ASCII instead of binary");

  auto* segment = app.add_subcommand("segment", "Cluster descriptors or transfer centroids");
  ConfigFlags segment_flags(segment);
  segment->add_option("descriptors", descriptors, "Descriptor file")->required();
  segment->add_option("--out", output, "Segmentation JSON")->required();
  segment->add_option("--k", k, "Number of clusters");
  segment->add_option("--centroids", centroids, "Transfer centroids from a previous segment output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "InvalidArgument", e.what());
    return 2;
  }

  auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
  try {
    CommandOutput result;
    if (config_cmd->parsed()) {
      const Json j = to_json(config_flags.resolve());
      if (output.empty()) {
        out << j.dump(2) << "\n";
        return 0;
      }
      write_json_file(output, j);
      result.summary = {{"command", "config"}, {"out", output}};
    } else if (render->parsed()) {
      result = cmd_render(render_flags.resolve(), shape, output);
    } else if (distill_cmd->parsed()) {
      result = cmd_distill(distill_flags.resolve(), shape, output, opt_path(manifest));
    } else if (match_cmd->parsed()) {
      result = cmd_match(match_flags.resolve(), source, target, output, opt_path(gt), opt_path(target_shape));
    } else if (suite->parsed()) {
      result = cmd_eval_suite(suite_flags.resolve(), pair_list, output);
    } else if (export_cmd->parsed()) {
      result = cmd_export_ply({shape, output, opt_path(labels), opt_path(correspondence), opt_path(target_shape),
                               opt_path(target_out), ascii});
    } else if (segment->parsed()) {
      if (centroids.empty() && k < 1) throw Error(ErrorCode::kInvalidArgument, "segment needs --k or --centroids");
      result = cmd_segment(segment_flags.resolve(), descriptors, k, output, opt_path(centroids));
    }
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    out << result.summary.dump() << "\n";
    return 0;
  } catch (const Error& e) {
    print_error(err, error_code_name(e.code()), e.what());
  } catch (const Json::exception& e) {
    print_error(err, "InvalidArgument", e.what());
  } catch (const std::exception& e) {
    print_error(err, "IoError", e.what());
  }
  return 1;
}

}  // namespace diff3f
