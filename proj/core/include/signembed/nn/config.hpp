#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

namespace signembed::nn {

// Dual-encoder hyperparameters. Desk-scale defaults; the reference setup
// this mirrors used embed_dim 768 with BERT-base encoders.
struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t video_layers = 12;
  std::size_t text_layers = 6;
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  std::size_t max_video_len = 256;
  std::size_t max_text_len = 64;
  std::size_t input_dim = 0;   // keypoints * 3 of the chosen layout
  std::size_t vocab_size = 0;
  bool use_multimodal_projection = true;
  // Raw dot-product similarity by default; cosine normalizes both sides.
  bool cosine_similarity = false;

  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace signembed::nn
