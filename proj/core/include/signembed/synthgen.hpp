#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "signembed/manifest.hpp"

namespace signembed {

// Deterministic synthetic pose-dataset generator. Each class draws a
// band-limited prototype trajectory (<= 3 sinusoidal harmonics per
// keypoint, concentrated on the dominant hand); each language adds a fixed
// per-keypoint offset field scaled by language_offset_sigma (the first
// iconic_classes classes skip it); each example adds per-keypoint jitter,
// a random frame count (signing speed), a random similarity transform, and
// is mirrored with probability left_handed_fraction. The off hand carries
// zero confidence. Splits are 8:1:1 per (class, language).
struct SynthConfig {
  std::size_t classes = 10;
  std::size_t languages = 1;
  std::size_t examples_per = 10;  // per (class, language)
  std::size_t frames_min = 12;
  std::size_t frames_max = 24;
  std::string layout_name = "body_hands_75";
  double jitter_sigma = 0.02;
  double language_offset_sigma = 0.0;
  double left_handed_fraction = 0.0;
  std::size_t iconic_classes = 0;  // classes generated without language offset
  double transform_sigma = 0.2;   // per-example scale/translation spread
  float fps = 25.0f;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// Candidate sign-language tags used for generated "languages".
std::string synth_language_tag(std::size_t index);
std::string synth_class_name(std::size_t index);

// Writes poses/<id>.spse files plus manifest.jsonl under out_dir and
// returns the manifest. Byte-identical for identical configs.
DatasetManifest generate_dataset(const SynthConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace signembed
