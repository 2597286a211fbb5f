#pragma once

#include <filesystem>

#include "signembed/pose.hpp"

namespace signembed {

// Binary pose file format ("SPSE"):
//   magic "SPSE" | version u16 LE | header length u32 LE |
//   UTF-8 JSON header {layout_name, fps, frames, keypoints} |
//   coords  float32 LE, frames*keypoints*3 |
//   confidence float32 LE, frames*keypoints
// Round-trips are bit-exact.
inline constexpr char kPoseMagic[4] = {'S', 'P', 'S', 'E'};
inline constexpr std::uint16_t kPoseFormatVersion = 1;

void save_pose(const PoseSequence& seq, const std::filesystem::path& path);

// Loads a pose file. The layout is resolved from the header's layout_name
// via resolve_layout(); unknown names fall back to a single-component
// untagged layout of the stored size so foreign files remain readable.
PoseSequence load_pose(const std::filesystem::path& path);

}  // namespace signembed
