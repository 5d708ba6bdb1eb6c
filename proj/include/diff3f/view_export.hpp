#pragma once

#include <filesystem>
#include <string>

#include "diff3f/json_util.hpp"
#include "diff3f/renderer.hpp"

namespace diff3f {

// "view_007" for view id 7.
std::string view_dir_name(int view_id);

// {view_id, theta_deg, phi_deg, distance, fov_y_deg, H, W}
Json view_sidecar(const ViewBundle& view, int view_id);

// Writes one view into `dir` (created if needed):
//   depth.png     16-bit gray, conditioning depth * 65535 (near = 65535,
//                 far = 0, background = 0)
//   normal.png    16-bit RGB, (n + 1) / 2 * 65535 per camera-space
//                 component, background 0; meshes only
//   edge.png      16-bit gray, 65535 on edges
//   mask.png      8-bit gray, 255 on foreground
//   position.d3ff world positions, C = 3, background 0, plus sidecar
//   view.json     view_sidecar
void export_view(const ViewBundle& view, int view_id, const std::filesystem::path& dir);

}  // namespace diff3f
