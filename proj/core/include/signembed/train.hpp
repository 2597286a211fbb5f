#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "signembed/augment.hpp"
#include "signembed/manifest.hpp"
#include "signembed/nn/batch_loss.hpp"
#include "signembed/nn/network.hpp"
#include "signembed/preprocess.hpp"
#include "signembed/textproc.hpp"

namespace signembed {

struct TrainConfig {
  std::size_t batch_size = 64;   // reference setup used 448
  std::size_t epochs = 25;
  double learning_rate = 1e-4;
  double temperature = 0.07;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  bool symmetric_loss = true;
  // Batches of pairwise-distinct labels (fingerspelling-style training);
  // defaults to plain shuffling.
  bool distinct_label_batches = false;
  double warmup_frac = 0.05;  // linear warmup over this fraction of steps
  std::size_t vocab_min_count = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// A trained model plus everything needed to reproduce its inputs: the
// preprocessing pipeline (with fitted corpus stats), the vocabulary, and
// the training configuration. Serialized as a length-prefixed JSON header
// (configs, vocab + hash, parameter manifest) followed by one contiguous
// little-endian float32 parameter blob.
struct Checkpoint {
  nn::Network<float> net;
  TrainConfig train_config;
  PreprocessPipeline pipeline;
  std::optional<CorpusStats> stats;
  Vocabulary vocab;
  std::size_t best_epoch = 0;
  double valid_loss = 0.0;

  explicit Checkpoint(nn::ModelConfig cfg) : net(std::move(cfg)) {}
};

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);

// `expected_vocab`, when given, must hash-match the stored vocabulary.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* expected_vocab = nullptr);

// Flattens a pose sequence into the encoder input (input_dim x frames);
// coordinates of zero-confidence keypoints are zeroed.
template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> pose_to_input(const PoseSequence& seq) {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> x(seq.keypoints * 3, seq.frames);
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t k = 0; k < seq.keypoints; ++k) {
      const bool masked = seq.conf(f, k) <= 0.0f;
      for (std::size_t a = 0; a < 3; ++a)
        x(static_cast<Eigen::Index>(k * 3 + a), static_cast<Eigen::Index>(f)) =
            masked ? S(0) : static_cast<S>(seq.at(f, k, a));
    }
  return x;
}

// Applies a checkpoint's preprocessing and encoders to new inputs.
class Embedder {
 public:
  explicit Embedder(const Checkpoint& cp, bool flip_right_at_test = false)
      : cp_(cp), flip_right_(flip_right_at_test) {}

  // Throws ValidationError if the preprocessed sequence exceeds the video
  // context length.
  Eigen::VectorXf embed_sequence(const PoseSequence& seq) const;
  Eigen::VectorXf embed_pose_file(const std::filesystem::path& path) const;
  Eigen::VectorXf embed_prompt(const Prompt& prompt) const;
  Eigen::VectorXf embed_record(const DatasetManifest& manifest,
                               const ManifestRecord& record) const;

  const Checkpoint& checkpoint() const { return cp_; }

 private:
  const Checkpoint& cp_;
  bool flip_right_;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> metrics;
  std::size_t excluded_too_long = 0;  // sequences over max_video_len, dropped
};

// Full training loop: loads and preprocesses the manifest's train/valid
// splits (fitting corpus stats on the train split if the pipeline needs
// them and none are given), builds or reuses a vocabulary, runs seeded
// epochs with train-time augmentation, and returns the checkpoint with the
// lowest validation loss. `log`, when given, receives one JSON line per
// epoch.
TrainResult train_model(const DatasetManifest& manifest,
                        const PreprocessPipeline& pipeline, nn::ModelConfig model_config,
                        const TrainConfig& config,
                        const Vocabulary* vocab = nullptr, std::ostream* log = nullptr);

// Recomputes the validation loss of a checkpoint on a manifest's valid
// split, using the checkpoint's own preprocessing and batching. A loaded
// checkpoint reproduces its stored valid_loss this way.
double evaluate_validation_loss(const Checkpoint& checkpoint,
                                const DatasetManifest& manifest);

}  // namespace signembed
