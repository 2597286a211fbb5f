#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "signembed/batcher.hpp"
#include "signembed/loss.hpp"
#include "signembed/optimizer.hpp"
#include "signembed/synthgen.hpp"
#include "signembed/train.hpp"

using namespace signembed;

TEST_CASE("InfoNCE closed-form values") {
  SUBCASE("N=1 gives zero loss") {
    Eigen::MatrixXd s(1, 1);
    s(0, 0) = 3.7;
    CHECK(info_nce_loss(s, 0.07, true).loss == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("uniform matrix gives ln N") {
    for (int n : {2, 4, 64}) {
      Eigen::MatrixXd s = Eigen::MatrixXd::Constant(n, n, 0.42);
      CHECK(info_nce_loss(s, 0.07, true).loss ==
            doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-9));
    }
  }
  SUBCASE("identity, tau=1, N=2, symmetric gives ln(1+e^-1)") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
    CHECK(info_nce_loss(s, 1.0, true).loss ==
          doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
  }
  SUBCASE("loss is non-negative and row-shift invariant (one-direction mode)") {
    RandomSource rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd s(6, 6);
      for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j) s(i, j) = rng.normal();
      const auto base = info_nce_loss(s, 0.5, false);
      CHECK(base.loss >= 0.0);
      Eigen::MatrixXd shifted = s;
      shifted.row(2).array() += 5.0;  // adding a constant to a row keeps softmax
      CHECK(info_nce_loss(shifted, 0.5, false).loss ==
            doctest::Approx(base.loss).epsilon(1e-9));
    }
  }
  SUBCASE("rejects bad input") {
    Eigen::MatrixXd rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS((void)info_nce_loss(rect, 0.07, true), ValidationError);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS((void)info_nce_loss(s, 0.0, true), ValidationError);
  }
}

TEST_CASE("plain shuffled batches") {
  RandomSource rng(7);
  auto batches = shuffled_batches(10, 4, rng);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[2].size() == 2);
  std::set<std::size_t> seen;
  for (const auto& b : batches) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 10);

  // trailing singleton is dropped
  auto b9 = shuffled_batches(9, 4, rng);
  CHECK(b9.size() == 2);
}

TEST_CASE("distinct-label batcher") {
  SUBCASE("35 classes with N=35: every batch is a class permutation") {
    std::vector<std::string> labels;
    for (int c = 0; c < 35; ++c)
      for (int e = 0; e < 3; ++e) labels.push_back("sign" + std::to_string(c));
    DistinctLabelBatcher batcher(labels, 35);
    RandomSource rng(11);
    for (int b = 0; b < 10; ++b) {
      auto batch = batcher.next(rng);
      REQUIRE(batch.size() == 35);
      std::set<std::string> batch_labels;
      for (auto i : batch) batch_labels.insert(labels[i]);
      CHECK(batch_labels.size() == 35);
    }
  }
  SUBCASE("no batch carries a duplicate label") {
    std::vector<std::string> labels = {"a", "a", "b", "b", "c", "c"};
    DistinctLabelBatcher batcher(labels, 2);
    RandomSource rng(13);
    for (int b = 0; b < 200; ++b) {
      auto batch = batcher.next(rng);
      CHECK(labels[batch[0]] != labels[batch[1]]);
    }
  }
  SUBCASE("selection frequency uniform within 5% over 10k batches") {
    std::vector<std::string> labels = {"a", "b", "c"};
    DistinctLabelBatcher batcher(labels, 2);
    RandomSource rng(17);
    std::map<std::string, int> counts;
    const int trials = 10000;
    for (int b = 0; b < trials; ++b)
      for (auto i : batcher.next(rng)) ++counts[labels[i]];
    for (const auto& [label, count] : counts) {
      const double freq = static_cast<double>(count) / trials;
      CHECK(freq == doctest::Approx(2.0 / 3.0).epsilon(0.05));
    }
  }
  SUBCASE("fewer distinct labels than N rejected with a hint") {
    std::vector<std::string> labels = {"a", "b", "a"};
    try {
      DistinctLabelBatcher batcher(labels, 3);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("lower the batch size") != std::string::npos);
    }
  }
}

namespace {

struct TinyDataset {
  std::filesystem::path dir;
  DatasetManifest manifest;
};

TinyDataset make_tiny_dataset(std::uint64_t seed = 5) {
  TinyDataset out;
  out.dir = testutil::tmp_dir("train-data");
  SynthConfig cfg;
  cfg.classes = 6;
  cfg.languages = 1;
  cfg.examples_per = 10;
  cfg.frames_min = 8;
  cfg.frames_max = 12;
  cfg.jitter_sigma = 0.02;
  cfg.transform_sigma = 0.1;
  cfg.seed = seed;
  out.manifest = generate_dataset(cfg, out.dir);
  return out;
}

nn::ModelConfig tiny_model() {
  nn::ModelConfig mc;
  mc.embed_dim = 32;
  mc.video_layers = 2;
  mc.text_layers = 1;
  mc.heads = 4;
  mc.ff_dim = 64;
  mc.max_video_len = 16;
  mc.max_text_len = 8;
  mc.input_dim = 1;   // overwritten by the trainer
  mc.vocab_size = 3;  // overwritten by the trainer
  return mc;
}

TrainConfig tiny_train(std::size_t epochs) {
  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = epochs;
  tc.learning_rate = 5e-4;
  tc.seed = 21;
  tc.augment.flip_prob = 0.0;
  tc.augment.affine_sigma = 0.05;
  tc.augment.temporal_sigma = 0.1;
  tc.augment.noise_sigma = 0.001;
  return tc;
}

}  // namespace

TEST_CASE("training drives the loss below the uniform-similarity value") {
  auto data = make_tiny_dataset();
  auto pipeline = PreprocessPipeline::parse({"normalize", "select:all-legs"});
  auto result = train_model(data.manifest, pipeline, tiny_model(), tiny_train(12));
  REQUIRE(!result.metrics.empty());
  const double chance = std::log(8.0);  // ln(batch size)
  CHECK(result.metrics.back().train_loss < chance);
  CHECK(result.metrics.back().train_loss < result.metrics.front().train_loss);
}

TEST_CASE("lr=0 leaves parameters unchanged") {
  auto data = make_tiny_dataset();
  auto pipeline = PreprocessPipeline::parse({"normalize"});
  auto zero = tiny_train(1);
  zero.learning_rate = 0.0;
  auto result = train_model(data.manifest, pipeline, tiny_model(), zero);

  nn::Network<float> fresh(result.checkpoint.net.config());
  fresh.init_params(derive_seed(zero.seed, fnv1a64("init")));
  CHECK(fresh.params().data() == result.checkpoint.net.params().data());
}

TEST_CASE("same seed and config reproduce the run exactly (single-threaded)") {
  set_max_threads(1);
  auto data = make_tiny_dataset();
  auto pipeline = PreprocessPipeline::parse({"normalize"});
  auto a = train_model(data.manifest, pipeline, tiny_model(), tiny_train(3));
  auto b = train_model(data.manifest, pipeline, tiny_model(), tiny_train(3));
  set_max_threads(2);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].train_loss == b.metrics[i].train_loss);
    CHECK(a.metrics[i].valid_loss == b.metrics[i].valid_loss);
  }
  CHECK(a.checkpoint.net.params().data() == b.checkpoint.net.params().data());
}

TEST_CASE("checkpoint round trip") {
  auto data = make_tiny_dataset();
  auto pipeline = PreprocessPipeline::parse({"normalize", "standardize"});
  auto result = train_model(data.manifest, pipeline, tiny_model(), tiny_train(2));
  const auto dir = testutil::tmp_dir("ckpt");
  const auto path = dir / "model.spck";
  save_checkpoint(result.checkpoint, path);

  SUBCASE("save -> load -> save is byte-identical") {
    auto loaded = load_checkpoint(path);
    const auto path2 = dir / "model2.spck";
    save_checkpoint(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
  }
  SUBCASE("loaded checkpoint reproduces its stored validation loss") {
    auto loaded = load_checkpoint(path);
    const double revalidated = evaluate_validation_loss(loaded, data.manifest);
    CHECK(revalidated == doctest::Approx(loaded.valid_loss).epsilon(1e-5));
  }
  SUBCASE("truncated file raises an IO error") {
    const auto broken = dir / "broken.spck";
    std::filesystem::copy_file(path, broken);
    std::filesystem::resize_file(broken, std::filesystem::file_size(broken) - 13);
    CHECK_THROWS_AS((void)load_checkpoint(broken), IoError);
  }
  SUBCASE("vocab hash mismatch rejected") {
    Vocabulary other;
    other.add_token("stranger");
    CHECK_THROWS_AS((void)load_checkpoint(path, &other), ValidationError);
    CHECK_NOTHROW((void)load_checkpoint(path, &result.checkpoint.vocab));
  }
  SUBCASE("stats survive the round trip") {
    auto loaded = load_checkpoint(path);
    REQUIRE(loaded.stats.has_value());
    REQUIRE(result.checkpoint.stats.has_value());
    CHECK(loaded.stats->mean == result.checkpoint.stats->mean);
    CHECK(loaded.stats->stddev == result.checkpoint.stats->stddev);
  }
}

TEST_CASE("warmup schedule") {
  CHECK(warmup_scale(0, 10) == doctest::Approx(0.1));
  CHECK(warmup_scale(9, 10) == doctest::Approx(1.0));
  CHECK(warmup_scale(50, 10) == 1.0);
  CHECK(warmup_scale(0, 0) == 1.0);
}
