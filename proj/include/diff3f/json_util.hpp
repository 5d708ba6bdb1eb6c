#pragma once

#include <filesystem>

#include "json.hpp"

#include "diff3f/camera.hpp"

namespace diff3f {

using Json = nlohmann::json;

// {theta_deg, phi_deg, distance, fov_y_deg, H, W}
Json camera_to_json(const CameraPose& camera);
// H and W are optional so that feature sidecars (which carry their own dims)
// can reuse this; missing dims fall back to `fallback_height/width`.
CameraPose camera_from_json(const Json& j, int fallback_height = 512, int fallback_width = 512);

Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; written atomically.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace diff3f
