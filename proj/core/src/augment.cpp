#include "signembed/augment.hpp"

#include <cmath>

#include "signembed/preprocess.hpp"

namespace signembed {

void AugmentConfig::validate() const {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
    throw ValidationError("flip_prob must be in [0, 1]");
  for (double s : {affine_sigma, temporal_sigma, noise_sigma}) {
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ValidationError("augmentation sigmas must be finite and non-negative");
  }
}

PoseSequence random_flip(const PoseSequence& seq, double p, RandomSource& rng) {
  if (rng.bernoulli(p)) return mirror_pose(seq);
  return seq;
}

PoseSequence apply_affine2d(const PoseSequence& seq, double angle, double shear,
                            double scale) {
  // M = R(angle) * Shear(shear) * scale, applied to (x, y).
  const double c = std::cos(angle), s = std::sin(angle);
  const double m00 = scale * c, m01 = scale * (c * shear - s);
  const double m10 = scale * s, m11 = scale * (s * shear + c);

  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t k = 0; k < seq.keypoints; ++k) {
      const double x = seq.at(f, k, 0), y = seq.at(f, k, 1);
      out.at(f, k, 0) = static_cast<float>(m00 * x + m01 * y);
      out.at(f, k, 1) = static_cast<float>(m10 * x + m11 * y);
    }
  return out;
}

PoseSequence affine_2d_augment(const PoseSequence& seq, double sigma, RandomSource& rng) {
  if (sigma < 0.0) throw ValidationError("affine sigma must be non-negative");
  const double angle = rng.normal(0.0, sigma);
  const double shear = rng.normal(0.0, sigma);
  double scale = rng.normal(1.0, sigma);
  while (scale <= 0.05) scale = rng.normal(1.0, sigma);
  if (sigma == 0.0) return seq;
  return apply_affine2d(seq, angle, shear, scale);
}

PoseSequence resample_frames(const PoseSequence& seq, std::size_t new_frames) {
  if (new_frames < 1) throw ValidationError("resample target must be >= 1 frame");
  if (new_frames == seq.frames) return seq;
  if (seq.frames == 1) {
    PoseSequence out = seq;
    out.frames = new_frames;
    out.coords.resize(new_frames * seq.keypoints * 3);
    out.confidence.resize(new_frames * seq.keypoints);
    for (std::size_t f = 0; f < new_frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k) {
        for (std::size_t a = 0; a < 3; ++a) out.at(f, k, a) = seq.at(0, k, a);
        out.conf(f, k) = seq.conf(0, k);
      }
    return out;
  }

  PoseSequence out;
  out.layout = seq.layout;
  out.fps = seq.fps;
  out.frames = new_frames;
  out.keypoints = seq.keypoints;
  out.coords.resize(new_frames * seq.keypoints * 3);
  out.confidence.resize(new_frames * seq.keypoints);

  const double span = static_cast<double>(seq.frames - 1);
  const double denom = new_frames > 1 ? static_cast<double>(new_frames - 1) : 1.0;
  for (std::size_t i = 0; i < new_frames; ++i) {
    const double pos = static_cast<double>(i) * span / denom;
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= seq.frames - 1) lo = seq.frames - 2;
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) {
      // exact grid hit (includes both endpoints): copy bit-exactly
      const std::size_t src = static_cast<std::size_t>(pos);
      for (std::size_t k = 0; k < seq.keypoints; ++k) {
        for (std::size_t a = 0; a < 3; ++a) out.at(i, k, a) = seq.at(src, k, a);
        out.conf(i, k) = seq.conf(src, k);
      }
      continue;
    }
    for (std::size_t k = 0; k < seq.keypoints; ++k) {
      for (std::size_t a = 0; a < 3; ++a) {
        const double v = (1.0 - frac) * seq.at(lo, k, a) + frac * seq.at(lo + 1, k, a);
        out.at(i, k, a) = static_cast<float>(v);
      }
      double cv = (1.0 - frac) * seq.conf(lo, k) + frac * seq.conf(lo + 1, k);
      cv = std::min(1.0, std::max(0.0, cv));
      out.conf(i, k) = static_cast<float>(cv);
    }
  }
  return out;
}

PoseSequence temporal_augment(const PoseSequence& seq, double sigma, RandomSource& rng) {
  const double factor = std::min(2.0, std::max(0.5, rng.normal(1.0, sigma)));
  if (seq.frames < 2) return seq;
  const auto target = static_cast<std::size_t>(
      std::max<long long>(2, std::llround(static_cast<double>(seq.frames) / factor)));
  return resample_frames(seq, target);
}

PoseSequence gaussian_noise(const PoseSequence& seq, double sigma, RandomSource& rng) {
  if (sigma == 0.0) return seq;
  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t k = 0; k < seq.keypoints; ++k) {
      if (seq.conf(f, k) <= 0.0f) continue;
      for (std::size_t a = 0; a < 3; ++a)
        out.at(f, k, a) = static_cast<float>(seq.at(f, k, a) + rng.normal(0.0, sigma));
    }
  return out;
}

PoseSequence apply_augmentations(const PoseSequence& seq, const AugmentConfig& config,
                                 RandomSource& rng) {
  config.validate();
  PoseSequence cur = random_flip(seq, config.flip_prob, rng);
  cur = affine_2d_augment(cur, config.affine_sigma, rng);
  cur = temporal_augment(cur, config.temporal_sigma, rng);
  cur = gaussian_noise(cur, config.noise_sigma, rng);
  return cur;
}

}  // namespace signembed
