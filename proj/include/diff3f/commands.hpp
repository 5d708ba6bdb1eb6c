#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diff3f/json_util.hpp"
#include "diff3f/run_config.hpp"

namespace diff3f {

// What a command produced: a JSON summary for stdout plus warnings for
// stderr. Commands throw diff3f::Error on failure.
struct CommandOutput {
  Json summary;
  std::vector<std::string> warnings;
};

// Renders n_views views into `out_dir`/view_XXX and writes `out_dir`/views.json.
CommandOutput cmd_render(const RunConfig& config, const std::filesystem::path& shape,
                         const std::filesystem::path& out_dir);

// Distills per-point descriptors into `out` (D3FF + sidecar). With the
// external-manifest provider `manifest` is required. When DIFF3F_CACHE_DIR is
// set, results are cached there keyed by shape, manifest and config.
CommandOutput cmd_distill(const RunConfig& config, const std::filesystem::path& shape,
                          const std::filesystem::path& out,
                          const std::optional<std::filesystem::path>& manifest = std::nullopt);

// Writes {config, source_shape_id, target_shape_id, pairs: [[s, t, score]],
// report?} to `out`. A ground-truth file also needs the target shape; only
// annotated source points are evaluated.
CommandOutput cmd_match(const RunConfig& config, const std::filesystem::path& source,
                        const std::filesystem::path& target, const std::filesystem::path& out,
                        const std::optional<std::filesystem::path>& ground_truth = std::nullopt,
                        const std::optional<std::filesystem::path>& target_shape = std::nullopt);

struct PairSpec {
  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<std::filesystem::path> ground_truth;
};

// "source target [gt]" per line; '#' comments. Relative paths resolve
// against the list file's directory.
std::vector<PairSpec> read_pair_list(const std::filesystem::path& path);

// Runs every pair (distill both shapes, match, evaluate) and writes
// `out_dir`/pairs/pair_XXX.json, results.csv and report.json. Pair failures
// are recorded and reported as warnings.
CommandOutput cmd_eval_suite(const RunConfig& config, const std::filesystem::path& pair_list,
                             const std::filesystem::path& out_dir);

struct ExportPlyArgs {
  std::filesystem::path shape;
  std::filesystem::path out;
  std::optional<std::filesystem::path> labels;          // segment output
  std::optional<std::filesystem::path> correspondence;  // match output
  std::optional<std::filesystem::path> target_shape;
  std::optional<std::filesystem::path> target_out;
  bool ascii = false;
};

// Plain geometry, labels colored one color per label, or a correspondence
// pair: the source colored by normalized position and the target colored by
// pulling source colors back through the assignment.
CommandOutput cmd_export_ply(const ExportPlyArgs& args);

// Fits k clusters, or with `centroids_from` transfers the centroids stored in
// a previous segment output onto `descriptors`.
CommandOutput cmd_segment(const RunConfig& config, const std::filesystem::path& descriptors, int k,
                          const std::filesystem::path& out,
                          const std::optional<std::filesystem::path>& centroids_from = std::nullopt);

// Full command line entry point. Returns the process exit code; errors are
// printed to `err` as {"error": {"code", "message"}}.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace diff3f
