#include <algorithm>
#include <cmath>
#include <vector>

#include "diff3f/error.hpp"
#include "diff3f/renderer.hpp"

namespace diff3f {

std::vector<float> conditioning_depth(const std::vector<float>& depth, int height, int width) {
  const std::size_t count = static_cast<std::size_t>(height) * width;
  if (depth.size() != count) throw Error(ErrorCode::kShapeMismatch, "depth map size mismatch");
  float near = std::numeric_limits<float>::infinity();
  float far = -std::numeric_limits<float>::infinity();
  for (float d : depth) {
    if (!std::isfinite(d)) continue;
    near = std::min(near, d);
    far = std::max(far, d);
  }
  std::vector<float> out(count, 0.0f);
  if (!(near <= far)) return out;
  const double range = static_cast<double>(far) - near;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(depth[i])) continue;
    out[i] = range > 0.0 ? static_cast<float>((far - static_cast<double>(depth[i])) / range) : 1.0f;
  }
  return out;
}

std::vector<std::uint8_t> edge_from_depth(const std::vector<float>& depth, int height, int width,
                                          double low, double high) {
  const auto image = conditioning_depth(depth, height, width);
  const std::size_t count = image.size();
  std::vector<std::uint8_t> fg(count);
  for (std::size_t i = 0; i < count; ++i) fg[i] = std::isfinite(depth[i]) ? 1 : 0;

  auto at = [&](int r, int c) { return static_cast<std::size_t>(r) * width + c; };
  // Background and out-of-image neighbors replicate the center value, so only
  // foreground content produces gradient.
  auto sample = [&](int r, int c, float center) {
    if (r < 0 || r >= height || c < 0 || c >= width || !fg[at(r, c)]) return center;
    return image[at(r, c)];
  };

  std::vector<float> magnitude(count, 0.0f);
  std::vector<std::uint8_t> direction(count, 0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = at(r, c);
      if (!fg[i]) continue;
      const float v = image[i];
      float n[3][3];
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) n[dr + 1][dc + 1] = sample(r + dr, c + dc, v);
      }
      const double gx = ((n[0][2] + 2 * n[1][2] + n[2][2]) - (n[0][0] + 2 * n[1][0] + n[2][0])) / 4.0;
      const double gy = ((n[2][0] + 2 * n[2][1] + n[2][2]) - (n[0][0] + 2 * n[0][1] + n[0][2])) / 4.0;
      magnitude[i] = static_cast<float>(std::hypot(gx, gy));
      double angle = std::atan2(gy, gx) * 180.0 / EIGEN_PI;
      if (angle < 0) angle += 180.0;
      // 0: horizontal gradient, 1: 45 deg, 2: vertical, 3: 135 deg.
      direction[i] = static_cast<std::uint8_t>(static_cast<int>(std::floor((angle + 22.5) / 45.0)) % 4);
    }
  }

  static constexpr int kStep[4][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}};
  auto mag_at = [&](int r, int c) -> float {
    if (r < 0 || r >= height || c < 0 || c >= width) return 0.0f;
    return magnitude[at(r, c)];
  };

  std::vector<std::uint8_t> state(count, 0);  // 0 none, 1 weak, 2 strong
  std::vector<std::size_t> stack;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = at(r, c);
      const float m = magnitude[i];
      if (!fg[i] || m < low || m <= 0.0f) continue;
      const auto [dr, dc] = kStep[direction[i]];
      if (m < mag_at(r + dr, c + dc) || m < mag_at(r - dr, c - dc)) continue;
      state[i] = m >= high ? 2 : 1;
      if (state[i] == 2) stack.push_back(i);
    }
  }

  std::vector<std::uint8_t> edges(count, 0);
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (edges[i]) continue;
    edges[i] = 1;
    const int r = static_cast<int>(i / width);
    const int c = static_cast<int>(i % width);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        const std::size_t j = at(rr, cc);
        if (state[j] && !edges[j]) stack.push_back(j);
      }
    }
  }

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = at(r, c);
      if (!fg[i]) continue;
      const bool ring = (r > 0 && !fg[at(r - 1, c)]) || (r + 1 < height && !fg[at(r + 1, c)]) ||
                        (c > 0 && !fg[at(r, c - 1)]) || (c + 1 < width && !fg[at(r, c + 1)]);
      if (ring) edges[i] = 1;
    }
  }
  return edges;
}

}  // namespace diff3f
