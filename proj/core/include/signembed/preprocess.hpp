#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "signembed/manifest.hpp"
#include "signembed/pose.hpp"

namespace signembed {

// Per-keypoint, per-axis mean and standard deviation over a training
// corpus, counting only confident observations. std is floored at 1e-6;
// never-observed keypoints fall back to mean 0, std 1.
struct CorpusStats {
  std::size_t keypoints = 0;
  std::vector<double> mean;    // keypoints * 3
  std::vector<double> stddev;  // keypoints * 3

  static constexpr double kStdFloor = 1e-6;

  double mean_at(std::size_t kp, std::size_t axis) const { return mean[kp * 3 + axis]; }
  double std_at(std::size_t kp, std::size_t axis) const { return stddev[kp * 3 + axis]; }

  // Stored in the pose binary format with layout_name "stats": frame 0 is
  // the mean, frame 1 the std (float32 on disk).
  void save(const std::filesystem::path& path) const;
  static CorpusStats load(const std::filesystem::path& path);
};

// Scale and center: the mean shoulder width (over frames where both
// shoulders are confident) becomes 1 and the mean shoulder midpoint moves
// to the origin. One similarity transform for all three axes.
PoseSequence normalize_pose(const PoseSequence& seq);

// Drops body landmarks duplicated by the hand model and rigidly translates
// each hand, frame by frame, so its wrist coincides with the body wrist.
// A hand with no confident keypoints in a frame is left untouched there.
PoseSequence reduce_and_reposition(const PoseSequence& seq);

CorpusStats compute_corpus_stats(const std::vector<PoseSequence>& train_sequences);

// Convenience: loads every train-split pose in the manifest, applies
// `pre` (may be null) to each, and accumulates stats.
CorpusStats compute_corpus_stats(
    const DatasetManifest& manifest,
    const std::function<PoseSequence(const PoseSequence&)>& pre = nullptr);

// (coords - mean) / std per confident keypoint; masked keypoints are zeroed.
PoseSequence standardize(const PoseSequence& seq, const CorpusStats& stats);

// coords' = (coords - coords[frame 0]) + mean, so the first frame becomes
// the mean pose exactly; signer appearance is removed, motion kept.
PoseSequence anonymize(const PoseSequence& seq, const CorpusStats& stats);

// Unconditional mirror primitive: x -> -x plus swap of paired left/right
// indices in coords and confidence. An exact involution.
PoseSequence mirror_pose(const PoseSequence& seq);

// Mirrors only when the right hand has no confident keypoint in any frame
// and the left hand has at least one; otherwise returns the input.
PoseSequence flip_to_right_handed(const PoseSequence& seq);

// Deterministic preprocessing pipeline, applied in declaration order.
// Select carries a keypoint selector expression ("select:right_hand",
// "select:all-legs", ...); the other steps are parameterless.
enum class PreprocessStep { Normalize, Reduce, Standardize, Anonymize, FlipRight, Select };

struct PipelineStep {
  PreprocessStep kind = PreprocessStep::Normalize;
  std::string arg;  // selector expression for Select

  std::string to_string() const;
  static PipelineStep parse(const std::string& s);
};

std::string to_string(PreprocessStep s);
PreprocessStep preprocess_step_from_string(const std::string& s);

struct PreprocessPipeline {
  std::vector<PipelineStep> steps;
  std::string stats_path;  // optional; required when a step needs stats

  bool needs_stats() const;
  // Steps before the first stats-consuming step; stats are fitted on the
  // train split after applying these.
  PreprocessPipeline head_before_stats() const;
  PoseSequence apply(const PoseSequence& seq, const CorpusStats* stats) const;

  static PreprocessPipeline parse(const std::vector<std::string>& step_strings,
                                  const std::string& stats_path = {});
};

}  // namespace signembed
