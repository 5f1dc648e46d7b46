#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "camweight/pose.hpp"

namespace camweight {

// Rig JSON: {"target": 4x4 nested array (row-major), "sources": [4x4, ...]}.
// Malformed documents and matrices that are not valid poses raise MalformedInput.
CameraRig parse_rig_json(std::string_view text);
CameraRig load_rig(const std::filesystem::path& path);

std::string rig_to_json(const CameraRig& rig);
void save_rig(const CameraRig& rig, const std::filesystem::path& path);

}  // namespace camweight
