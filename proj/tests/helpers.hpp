#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>

#include "signembed/common.hpp"
#include "signembed/pose.hpp"

namespace testutil {

inline std::filesystem::path tmp_dir(const std::string& name) {
  static std::atomic<unsigned> counter{0};
  auto dir = std::filesystem::temp_directory_path() / "signembed-tests" /
             (name + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

// Snap to a 2^-12 grid: sums and differences of grid values with magnitude
// below 2^11 are exact in float32, which makes "preserved exactly"
// assertions meaningful.
inline float grid(double v) {
  return static_cast<float>(std::round(v * 4096.0) / 4096.0);
}

inline signembed::PoseSequence random_pose(signembed::RandomSource& rng,
                                           const signembed::KeypointLayout& layout,
                                           std::size_t frames, bool on_grid = false,
                                           double spread = 1.0) {
  signembed::PoseSequence seq;
  seq.layout = layout;
  seq.fps = 25.0f;
  seq.frames = frames;
  seq.keypoints = layout.total();
  seq.coords.resize(frames * seq.keypoints * 3);
  seq.confidence.assign(frames * seq.keypoints, 1.0f);
  for (auto& v : seq.coords) {
    const double x = rng.normal(0.0, spread);
    v = on_grid ? grid(x) : static_cast<float>(x);
  }
  return seq;
}

}  // namespace testutil
