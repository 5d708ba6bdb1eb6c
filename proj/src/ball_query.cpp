#include <algorithm>
#include <cmath>
#include <numeric>

#include "diff3f/ball_query.hpp"
#include "diff3f/error.hpp"

namespace diff3f {

BallQuery::BallQuery(std::span<const Vec3> samples, double radius)
    : samples_(samples), radius_(radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ball query radius must be positive");
  std::vector<std::pair<CellKey, std::uint32_t>> keyed;
  keyed.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    keyed.emplace_back(cell_of(samples[i]), static_cast<std::uint32_t>(i));
  }
  std::sort(keyed.begin(), keyed.end());
  order_.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (i == 0 || keyed[i].first != keyed[i - 1].first) {
      cells_.push_back(keyed[i].first);
      offsets_.push_back(static_cast<std::uint32_t>(i));
    }
    order_.push_back(keyed[i].second);
  }
  offsets_.push_back(static_cast<std::uint32_t>(keyed.size()));
}

BallQuery::CellKey BallQuery::cell_of(const Vec3& p) const {
  // Cells are a hair wider than the radius so that rounding in the division
  // can never put two points within r more than one cell apart.
  const double cell = radius_ * (1.0 + 1e-9);
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

void BallQuery::query(const Vec3& center, std::vector<std::uint32_t>& out) const {
  const std::size_t first = out.size();
  const CellKey c = cell_of(center);
  const double r2 = radius_ * radius_;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const CellKey key{c.x + dx, c.y + dy, c.z + dz};
        const auto it = std::lower_bound(cells_.begin(), cells_.end(), key);
        if (it == cells_.end() || *it != key) continue;
        const auto cell = static_cast<std::size_t>(it - cells_.begin());
        for (std::uint32_t k = offsets_[cell]; k < offsets_[cell + 1]; ++k) {
          const std::uint32_t idx = order_[k];
          if ((samples_[idx] - center).squaredNorm() <= r2) out.push_back(idx);
        }
      }
    }
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

}  // namespace diff3f
