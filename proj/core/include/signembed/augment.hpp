#pragma once

#include <cstdint>

#include "signembed/common.hpp"
#include "signembed/pose.hpp"

namespace signembed {

// Training-time stochastic augmentations. Sigma semantics: affine_sigma is
// the std of the rotation angle (radians), the shear coefficient, and the
// scale deviation around 1; temporal_sigma is the std of the speed factor
// around 1; noise_sigma is coordinate-space noise std.
struct AugmentConfig {
  double flip_prob = 0.2;
  double affine_sigma = 0.2;
  double temporal_sigma = 0.2;
  double noise_sigma = 0.001;
  std::uint64_t seed = 0;

  void validate() const;
};

// With probability p applies the unconditional mirror primitive.
PoseSequence random_flip(const PoseSequence& seq, double p, RandomSource& rng);

// Deterministic core of the 2D spatial augmentation: applies
// R(angle) * Shear(shear) * scale to the (x, y) of every keypoint.
// z and confidence are unchanged.
PoseSequence apply_affine2d(const PoseSequence& seq, double angle, double shear,
                            double scale);

// Samples angle ~ N(0, sigma), shear ~ N(0, sigma), scale ~ N(1, sigma)
// once per sequence (scale <= 0.05 is resampled) and applies them.
PoseSequence affine_2d_augment(const PoseSequence& seq, double sigma, RandomSource& rng);

// Resamples every keypoint trajectory to new_frames by linear interpolation
// on a uniform grid over [0, frames-1]. Endpoint frames are preserved
// exactly; confidence is interpolated and clamped to [0, 1].
PoseSequence resample_frames(const PoseSequence& seq, std::size_t new_frames);

// Speed factor ~ N(1, sigma) clamped to [0.5, 2]; new length
// max(2, round(frames / factor)). Single-frame input is returned unchanged.
PoseSequence temporal_augment(const PoseSequence& seq, double sigma, RandomSource& rng);

// Adds i.i.d. N(0, sigma) to every confident keypoint coordinate.
PoseSequence gaussian_noise(const PoseSequence& seq, double sigma, RandomSource& rng);

// flip -> affine -> temporal -> noise, in that fixed order, sharing the rng.
PoseSequence apply_augmentations(const PoseSequence& seq, const AugmentConfig& config,
                                 RandomSource& rng);

}  // namespace signembed
