#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "diff3f/feature_store.hpp"
#include "diff3f/renderer.hpp"

namespace diff3f {

// Deterministic stand-in for image features: every foreground pixel gets a
// unit-normalized sinusoidal encoding of its surface point, background
// pixels are zero. Channel pair q encodes axis q % 3 at frequency
// 2^(q / 3) * pi with a seed-dependent phase, as (sin, cos). With dim a
// multiple of 6 this is dim / 6 octaves per axis.
//
// `reference_rotation` is applied to positions before encoding. Passing the
// inverse of a rigid motion applied to the shape makes the features follow
// the material points, the way image-derived features follow the surface.
//
// Throws InvalidArgument unless dim >= 8 and even.
FeatureMap synthetic_features(const ViewBundle& view, int dim, std::uint64_t seed,
                              const Eigen::Matrix3d& reference_rotation = Eigen::Matrix3d::Identity());

// The same encoding for a single point (no normalization bookkeeping beyond
// unit norm).
std::vector<double> synthetic_encoding(const Vec3& point, int dim, std::uint64_t seed);

}  // namespace diff3f
