#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "diff3f/error.hpp"
#include "diff3f/matcher.hpp"

namespace diff3f {

namespace {

Eigen::MatrixXd unit_rows(const PointDescriptors& d) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.dim));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto row = d.row(i);
    for (std::size_t c = 0; c < d.dim; ++c) m(i, c) = row[c];
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
  return m;
}

void check_dims(const PointDescriptors& a, const PointDescriptors& b) {
  if (a.dim != b.dim) {
    throw Error(ErrorCode::kDimMismatch, "descriptor dims differ: " + std::to_string(a.dim) + " vs " +
                                             std::to_string(b.dim));
  }
}

}  // namespace

Eigen::MatrixXd similarity_matrix(const PointDescriptors& source, const PointDescriptors& target) {
  check_dims(source, target);
  const Eigen::MatrixXd s = unit_rows(source);
  const Eigen::MatrixXd t = unit_rows(target);
  return (s * t.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
}

CorrespondenceResult match(const PointDescriptors& source, const PointDescriptors& target) {
  check_dims(source, target);
  if (target.size() == 0 && source.size() > 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot match against an empty target");
  }
  CorrespondenceResult result;
  result.source_ids = source.point_ids;
  result.target_ids = target.point_ids;
  result.assignment.resize(source.size());
  result.score.resize(source.size());

  const Eigen::MatrixXd s = unit_rows(source);
  const Eigen::MatrixXd t = unit_rows(target);
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index start = 0; start < s.rows(); start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, s.rows() - start);
    const Eigen::MatrixXd sim = s.middleRows(start, rows) * t.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < sim.cols(); ++c) {
        if (sim(r, c) > sim(r, best)) best = c;
      }
      result.assignment[start + r] = target.point_ids[best];
      result.score[start + r] = std::clamp(sim(r, best), -1.0, 1.0);
    }
  }
  return result;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open ground truth " + path.string());
  GroundTruth gt;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long s = -1, t = -1;
    if (!(fields >> s >> t) || s < 0 || t < 0) {
      throw Error(ErrorCode::kMissingGroundTruth,
                  path.string() + ":" + std::to_string(line_no) + ": expected 'source target'");
    }
    gt[static_cast<std::uint32_t>(s)] = static_cast<std::uint32_t>(t);
  }
  return gt;
}

double point_set_diameter(std::span<const Vec3> points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::max(best, (points[i] - points[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

EvalReport evaluate(const CorrespondenceResult& result, const GroundTruth& gt, const Shape& target,
                    const EvalOptions& options, std::span<const std::uint32_t> source_coverage) {
  if (!source_coverage.empty() && source_coverage.size() != result.source_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "coverage list does not match source points");
  }
  auto vertex = [&](std::uint32_t id) -> const Vec3& {
    if (id >= target.vertices.size()) {
      throw Error(ErrorCode::kInvalidArgument, "target index " + std::to_string(id) + " out of range");
    }
    return target.vertices[id];
  };

  std::vector<Vec3> target_points;
  target_points.reserve(result.target_ids.size());
  for (auto id : result.target_ids) target_points.push_back(vertex(id));

  EvalReport report;
  report.diameter = point_set_diameter(target_points);
  std::vector<double> distances;
  for (std::size_t i = 0; i < result.source_ids.size(); ++i) {
    const auto it = gt.find(result.source_ids[i]);
    if (it == gt.end()) {
      if (options.restrict_to_ground_truth) continue;
      throw Error(ErrorCode::kMissingGroundTruth,
                  "no ground truth for source point " + std::to_string(result.source_ids[i]));
    }
    if (!source_coverage.empty() && source_coverage[i] == 0) {
      ++report.uncovered;
      if (options.exclude_uncovered) {
        ++report.excluded;
        continue;
      }
    }
    distances.push_back((vertex(result.assignment[i]) - vertex(it->second)).norm());
  }
  if (distances.empty()) {
    throw Error(ErrorCode::kMissingGroundTruth, "no source point could be evaluated");
  }
  report.n = distances.size();
  double sum = 0.0;
  for (double d : distances) sum += d;
  report.err = sum / static_cast<double>(distances.size());
  for (double gamma : options.tolerances) {
    const double threshold = gamma * report.diameter;
    const auto hits = std::count_if(distances.begin(), distances.end(),
                                    [&](double d) { return d < threshold; });
    report.acc[gamma] = static_cast<double>(hits) / static_cast<double>(distances.size());
  }
  return report;
}

}  // namespace diff3f
