#include "signembed/pose.hpp"

#include <cmath>

#include "signembed/common.hpp"

namespace signembed {

void PoseSequence::validate() const {
  if (!(fps > 0.0f)) throw ValidationError("pose fps must be positive");
  if (frames < 1) throw ValidationError("pose must have at least one frame");
  if (keypoints != layout.total())
    throw ValidationError("pose keypoint count does not match layout '" + layout.name() +
                          "'");
  if (coords.size() != frames * keypoints * 3)
    throw ValidationError("pose coords size mismatch");
  if (confidence.size() != frames * keypoints)
    throw ValidationError("pose confidence size mismatch");
  for (float c : confidence) {
    if (!(c >= 0.0f && c <= 1.0f))
      throw ValidationError("pose confidence outside [0, 1]");
  }
  for (float v : coords) {
    if (!std::isfinite(v)) throw ValidationError("pose coords contain non-finite values");
  }
}

PoseSequence make_pose_sequence(KeypointLayout layout, float fps, std::size_t frames,
                                std::vector<float> coords,
                                std::vector<float> confidence) {
  PoseSequence seq;
  seq.keypoints = layout.total();
  seq.layout = std::move(layout);
  seq.fps = fps;
  seq.frames = frames;
  seq.coords = std::move(coords);
  if (confidence.empty())
    seq.confidence.assign(frames * seq.keypoints, 1.0f);
  else
    seq.confidence = std::move(confidence);
  seq.validate();
  return seq;
}

PoseSequence select_components(const PoseSequence& seq, const std::string& selector) {
  const auto kept = seq.layout.selection_indices(selector);
  KeypointLayout sub = seq.layout.subset(
      kept, seq.layout.name() + "|sel(" + canonical_selector(selector) + ")");

  PoseSequence out;
  out.layout = std::move(sub);
  out.fps = seq.fps;
  out.frames = seq.frames;
  out.keypoints = kept.size();
  out.coords.resize(seq.frames * kept.size() * 3);
  out.confidence.resize(seq.frames * kept.size());
  for (std::size_t f = 0; f < seq.frames; ++f) {
    for (std::size_t n = 0; n < kept.size(); ++n) {
      const std::size_t k = kept[n];
      for (std::size_t a = 0; a < 3; ++a) out.at(f, n, a) = seq.at(f, k, a);
      out.conf(f, n) = seq.conf(f, k);
    }
  }
  return out;
}

PoseSequence slice_frames(const PoseSequence& seq, std::size_t begin, std::size_t end) {
  if (begin >= end || end > seq.frames)
    throw ValidationError("invalid frame slice");
  PoseSequence out;
  out.layout = seq.layout;
  out.fps = seq.fps;
  out.frames = end - begin;
  out.keypoints = seq.keypoints;
  out.coords.assign(seq.coords.begin() + begin * seq.keypoints * 3,
                    seq.coords.begin() + end * seq.keypoints * 3);
  out.confidence.assign(seq.confidence.begin() + begin * seq.keypoints,
                        seq.confidence.begin() + end * seq.keypoints);
  return out;
}

bool equal_bits(const PoseSequence& a, const PoseSequence& b) {
  return a.layout.name() == b.layout.name() && a.fps == b.fps && a.frames == b.frames &&
         a.keypoints == b.keypoints && a.coords == b.coords &&
         a.confidence == b.confidence;
}

}  // namespace signembed
