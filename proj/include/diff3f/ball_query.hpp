#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diff3f/shape.hpp"

namespace diff3f {

// Fixed-radius neighbor search over a static sample set, backed by a uniform
// grid with cells slightly wider than the radius. A sample s is a neighbor of x iff
// |s - x|^2 <= r^2 (closed ball).
class BallQuery {
 public:
  BallQuery(std::span<const Vec3> samples, double radius);

  // Appends neighbor indices of `center` to `out` in ascending order.
  void query(const Vec3& center, std::vector<std::uint32_t>& out) const;

  double radius() const { return radius_; }

 private:
  struct CellKey {
    std::int64_t x, y, z;
    auto operator<=>(const CellKey&) const = default;
  };
  CellKey cell_of(const Vec3& p) const;

  std::span<const Vec3> samples_;
  double radius_;
  std::vector<CellKey> cells_;            // sorted unique
  std::vector<std::uint32_t> offsets_;    // CSR into order_
  std::vector<std::uint32_t> order_;      // sample ids grouped by cell, ascending within cell
};

}  // namespace diff3f
