#include "signembed/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "signembed/batcher.hpp"
#include "signembed/optimizer.hpp"
#include "signembed/pose_io.hpp"

namespace signembed {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ValidationError("batch_size must be >= 2");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (!(learning_rate >= 0.0)) throw ValidationError("learning rate must be >= 0");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0))
    throw ValidationError("warmup_frac must be in [0, 1]");
  augment.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"batch_size", batch_size},
                        {"epochs", epochs},
                        {"learning_rate", learning_rate},
                        {"temperature", temperature},
                        {"seed", seed},
                        {"symmetric_loss", symmetric_loss},
                        {"distinct_label_batches", distinct_label_batches},
                        {"warmup_frac", warmup_frac},
                        {"vocab_min_count", vocab_min_count},
                        {"augment",
                         {{"flip_prob", augment.flip_prob},
                          {"affine_sigma", augment.affine_sigma},
                          {"temporal_sigma", augment.temporal_sigma},
                          {"noise_sigma", augment.noise_sigma},
                          {"seed", augment.seed}}}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.temperature = j.value("temperature", c.temperature);
  c.seed = j.value("seed", c.seed);
  c.symmetric_loss = j.value("symmetric_loss", c.symmetric_loss);
  c.distinct_label_batches = j.value("distinct_label_batches", c.distinct_label_batches);
  c.warmup_frac = j.value("warmup_frac", c.warmup_frac);
  c.vocab_min_count = j.value("vocab_min_count", c.vocab_min_count);
  if (j.contains("augment")) {
    const auto& a = j["augment"];
    c.augment.flip_prob = a.value("flip_prob", c.augment.flip_prob);
    c.augment.affine_sigma = a.value("affine_sigma", c.augment.affine_sigma);
    c.augment.temporal_sigma = a.value("temporal_sigma", c.augment.temporal_sigma);
    c.augment.noise_sigma = a.value("noise_sigma", c.augment.noise_sigma);
    c.augment.seed = a.value("seed", c.augment.seed);
  }
  c.validate();
  return c;
}

namespace {

struct PreparedExample {
  PoseSequence pose;       // preprocessed, augmentation applied on top
  TokenSequence tokens;
  std::string label;
  std::uint64_t aug_stream;  // per-example augmentation stream id
};

struct PreparedSplit {
  std::vector<PreparedExample> examples;
  std::size_t excluded_too_long = 0;
};

PreparedSplit prepare_split(const DatasetManifest& manifest, Split split,
                            const PreprocessPipeline& pipeline, const CorpusStats* stats,
                            const Vocabulary& vocab, const nn::ModelConfig& mc) {
  PreparedSplit out;
  auto records = manifest.split_records(split);
  std::vector<PoseSequence> poses(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    poses[i] = pipeline.apply(load_pose(manifest.resolve_path(*records[i])), stats);
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (poses[i].frames > mc.max_video_len) {
      ++out.excluded_too_long;
      continue;
    }
    PreparedExample ex;
    ex.pose = std::move(poses[i]);
    ex.tokens = tokenize(
        build_prompt(records[i]->text, records[i]->spoken_lang, records[i]->signed_lang),
        vocab, mc.max_text_len);
    ex.label = records[i]->label;
    ex.aug_stream = fnv1a64(records[i]->id);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

nn::BatchItem<float> to_batch_item(const PoseSequence& pose, const TokenSequence& tokens) {
  nn::BatchItem<float> item;
  item.video = pose_to_input<float>(pose);
  item.video_len = pose.frames;
  item.token_ids = tokens.ids;
  item.token_len = tokens.length;
  return item;
}

double validation_loss(const nn::Network<float>& net,
                       const std::vector<PreparedExample>& valid,
                       const nn::LossOptions& opts, std::size_t batch_size) {
  if (valid.empty()) throw ValidationError("validation split is empty after filtering");
  double total = 0.0;
  std::size_t counted = 0;
  std::size_t start = 0;
  while (start < valid.size()) {
    std::size_t end = std::min(valid.size(), start + batch_size);
    // avoid a trailing singleton: a one-example contrastive batch is vacuous
    if (valid.size() - end == 1) ++end;
    std::vector<nn::BatchItem<float>> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(to_batch_item(valid[i].pose, valid[i].tokens));
    total += contrastive_batch_loss<float>(net, batch, opts, nullptr) *
             static_cast<double>(batch.size());
    counted += batch.size();
    start = end;
  }
  return total / static_cast<double>(counted);
}

}  // namespace

TrainResult train_model(const DatasetManifest& manifest,
                        const PreprocessPipeline& pipeline, nn::ModelConfig model_config,
                        const TrainConfig& config, const Vocabulary* vocab_in,
                        std::ostream* log) {
  config.validate();
  if (manifest.split_records(Split::Train).empty())
    throw ValidationError("manifest train split is empty");
  if (manifest.split_records(Split::Valid).empty())
    throw ValidationError("manifest valid split is empty");

  const Vocabulary vocab =
      vocab_in ? *vocab_in : build_vocab(manifest, config.vocab_min_count);

  // Fit corpus stats on the train split (after the steps that precede the
  // first stats consumer) unless a stats file is referenced.
  std::optional<CorpusStats> stats;
  if (pipeline.needs_stats()) {
    if (!pipeline.stats_path.empty()) {
      stats = CorpusStats::load(pipeline.stats_path);
    } else {
      const PreprocessPipeline head = pipeline.head_before_stats();
      stats = compute_corpus_stats(
          manifest, [&](const PoseSequence& s) { return head.apply(s, nullptr); });
    }
  }

  model_config.vocab_size = static_cast<std::size_t>(vocab.size());

  PreparedSplit train = prepare_split(manifest, Split::Train, pipeline,
                                      stats ? &*stats : nullptr, vocab, model_config);
  if (train.examples.empty())
    throw ValidationError("no training examples after length filtering");
  model_config.input_dim = train.examples.front().pose.keypoints * 3;
  for (const auto& ex : train.examples)
    if (ex.pose.keypoints * 3 != model_config.input_dim)
      throw ValidationError("training sequences disagree on keypoint count");

  PreparedSplit valid = prepare_split(manifest, Split::Valid, pipeline,
                                      stats ? &*stats : nullptr, vocab, model_config);

  Checkpoint cp(model_config);
  cp.train_config = config;
  cp.pipeline = pipeline;
  cp.stats = stats;
  cp.vocab = vocab;
  cp.net.init_params(derive_seed(config.seed, fnv1a64("init")));

  nn::LossOptions loss_opts{config.temperature, config.symmetric_loss};

  const std::size_t n_train = train.examples.size();
  const std::size_t batches_per_epoch =
      std::max<std::size_t>(1, (n_train + config.batch_size - 1) / config.batch_size);
  const std::size_t total_steps = batches_per_epoch * config.epochs;
  const auto warmup_steps = static_cast<std::size_t>(
      std::ceil(config.warmup_frac * static_cast<double>(total_steps)));

  AdamOptimizer<float> opt(cp.net.params().data().size(), config.learning_rate);
  nn::ParamStore<float> grads = cp.net.make_grad_store();

  std::optional<DistinctLabelBatcher> distinct;
  if (config.distinct_label_batches) {
    std::vector<std::string> labels;
    labels.reserve(n_train);
    for (const auto& ex : train.examples) labels.push_back(ex.label);
    distinct.emplace(labels, config.batch_size);
  }

  std::vector<float> best_params;
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  TrainResult result{std::move(cp), {}, train.excluded_too_long + valid.excluded_too_long};
  Checkpoint& ckpt = result.checkpoint;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    RandomSource batch_rng(derive_seed(config.seed, fnv1a64("batches"), epoch));

    std::vector<std::vector<std::size_t>> batches;
    if (distinct) {
      for (std::size_t b = 0; b < distinct->batches_per_epoch(); ++b)
        batches.push_back(distinct->next(batch_rng));
    } else {
      batches = shuffled_batches(n_train, config.batch_size, batch_rng);
    }

    double epoch_loss = 0.0;
    std::size_t epoch_examples = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      std::vector<nn::BatchItem<float>> batch(idx.size());
      parallel_for(idx.size(), [&](std::size_t k) {
        const auto& ex = train.examples[idx[k]];
        RandomSource aug_rng(
            derive_seed(config.augment.seed ^ config.seed, ex.aug_stream, epoch));
        PoseSequence augmented = apply_augmentations(ex.pose, config.augment, aug_rng);
        batch[k] = to_batch_item(augmented, ex.tokens);
      });

      grads.zero();
      const double loss = contrastive_batch_loss<float>(ckpt.net, batch, loss_opts, &grads);
      if (!std::isfinite(loss))
        throw Error("non-finite training loss in epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(b));
      opt.step(ckpt.net.params().data(), grads.data(), warmup_scale(step, warmup_steps));
      ++step;
      epoch_loss += loss * static_cast<double>(idx.size());
      epoch_examples += idx.size();
    }

    const double train_loss =
        epoch_examples ? epoch_loss / static_cast<double>(epoch_examples) : 0.0;
    const double valid_loss =
        validation_loss(ckpt.net, valid.examples, loss_opts, config.batch_size);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
    result.metrics.push_back({epoch, train_loss, valid_loss, wall});
    if (log) {
      nlohmann::json line = {{"epoch", epoch},
                             {"train_loss", train_loss},
                             {"valid_loss", valid_loss},
                             {"wall_time", wall}};
      (*log) << line.dump() << std::endl;
    }
    if (valid_loss < best_valid) {
      best_valid = valid_loss;
      best_epoch = epoch;
      best_params = ckpt.net.params().data();
    }
  }

  ckpt.net.params().data() = best_params;
  ckpt.best_epoch = best_epoch;
  ckpt.valid_loss = best_valid;
  return result;
}

double evaluate_validation_loss(const Checkpoint& checkpoint,
                                const DatasetManifest& manifest) {
  const auto& mc = checkpoint.net.config();
  PreparedSplit valid =
      prepare_split(manifest, Split::Valid, checkpoint.pipeline,
                    checkpoint.stats ? &*checkpoint.stats : nullptr, checkpoint.vocab, mc);
  nn::LossOptions opts{checkpoint.train_config.temperature,
                       checkpoint.train_config.symmetric_loss};
  return validation_loss(checkpoint.net, valid.examples, opts,
                         checkpoint.train_config.batch_size);
}

Eigen::VectorXf Embedder::embed_sequence(const PoseSequence& seq) const {
  PoseSequence prepared =
      cp_.pipeline.apply(seq, cp_.stats ? &*cp_.stats : nullptr);
  if (flip_right_) prepared = flip_to_right_handed(prepared);
  if (prepared.frames > cp_.net.config().max_video_len)
    throw ValidationError("sequence longer than the video context length (" +
                          std::to_string(prepared.frames) + " frames)");
  const auto input = pose_to_input<float>(prepared);
  return cp_.net.embed_video(input, prepared.frames);
}

Eigen::VectorXf Embedder::embed_pose_file(const std::filesystem::path& path) const {
  return embed_sequence(load_pose(path));
}

Eigen::VectorXf Embedder::embed_prompt(const Prompt& prompt) const {
  const TokenSequence tokens =
      tokenize(prompt, cp_.vocab, cp_.net.config().max_text_len);
  return cp_.net.embed_text(tokens.ids, tokens.length);
}

Eigen::VectorXf Embedder::embed_record(const DatasetManifest& manifest,
                                       const ManifestRecord& record) const {
  return embed_pose_file(manifest.resolve_path(record));
}

}  // namespace signembed
