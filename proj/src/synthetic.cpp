#include <cmath>

#include "diff3f/error.hpp"
#include "diff3f/rng.hpp"
#include "diff3f/synthetic.hpp"

namespace diff3f {

namespace {

std::vector<double> make_phases(int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> phases(static_cast<std::size_t>(dim / 2));
  for (auto& phase : phases) phase = 2.0 * EIGEN_PI * rng.uniform();
  return phases;
}

void encode(const Vec3& p, const std::vector<double>& phases, double* out) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(phases.size()));
  for (std::size_t q = 0; q < phases.size(); ++q) {
    const double frequency = std::ldexp(EIGEN_PI, static_cast<int>(q / 3));
    const double angle = frequency * p[static_cast<int>(q % 3)] + phases[q];
    out[2 * q] = std::sin(angle) * scale;
    out[2 * q + 1] = std::cos(angle) * scale;
  }
}

void check_dim(int dim) {
  if (dim < 8 || dim % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic feature dim must be even and >= 8");
  }
}

}  // namespace

std::vector<double> synthetic_encoding(const Vec3& point, int dim, std::uint64_t seed) {
  check_dim(dim);
  std::vector<double> out(static_cast<std::size_t>(dim));
  encode(point, make_phases(dim, seed), out.data());
  return out;
}

FeatureMap synthetic_features(const ViewBundle& view, int dim, std::uint64_t seed,
                              const Eigen::Matrix3d& reference_rotation) {
  check_dim(dim);
  const auto phases = make_phases(dim, seed);
  FeatureMap map(FeatureKind::kSynthetic, static_cast<std::uint32_t>(view.height()),
                 static_cast<std::uint32_t>(view.width()), static_cast<std::uint32_t>(dim));
  map.camera = view.camera;
  std::vector<double> buffer(static_cast<std::size_t>(dim));
  for (std::size_t pix = 0; pix < view.pixel_count(); ++pix) {
    if (!view.mask[pix]) continue;
    encode(reference_rotation * view.position[pix], phases, buffer.data());
    auto out = map.pixel(pix);
    for (int c = 0; c < dim; ++c) out[c] = static_cast<float>(buffer[c]);
  }
  return map;
}

}  // namespace diff3f
