#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "signembed/layout.hpp"

namespace signembed {

// A pose sequence: frames x keypoints x 3 coordinates plus a per-keypoint
// confidence in [0, 1]. Confidence 0 marks a missing keypoint; its
// coordinates are ignored by every statistic. Immutable by convention: all
// operations return new sequences.
struct PoseSequence {
  KeypointLayout layout;
  float fps = 0.0f;
  std::size_t frames = 0;
  std::size_t keypoints = 0;
  std::vector<float> coords;      // frames * keypoints * 3, C order
  std::vector<float> confidence;  // frames * keypoints

  float& at(std::size_t frame, std::size_t kp, std::size_t axis) {
    return coords[(frame * keypoints + kp) * 3 + axis];
  }
  float at(std::size_t frame, std::size_t kp, std::size_t axis) const {
    return coords[(frame * keypoints + kp) * 3 + axis];
  }
  float& conf(std::size_t frame, std::size_t kp) {
    return confidence[frame * keypoints + kp];
  }
  float conf(std::size_t frame, std::size_t kp) const {
    return confidence[frame * keypoints + kp];
  }

  void validate() const;
};

// Builds a validated sequence. Confidence may be empty, in which case it is
// filled with 1.0 so masking logic stays uniform.
PoseSequence make_pose_sequence(KeypointLayout layout, float fps, std::size_t frames,
                                std::vector<float> coords,
                                std::vector<float> confidence = {});

// Keeps the keypoints named by the selector expression (see
// KeypointLayout::selection_indices); order preserved, confidences carried
// over, layout reduced.
PoseSequence select_components(const PoseSequence& seq, const std::string& selector);

// Frames [begin, end) as a new sequence.
PoseSequence slice_frames(const PoseSequence& seq, std::size_t begin, std::size_t end);

bool equal_bits(const PoseSequence& a, const PoseSequence& b);

}  // namespace signembed
