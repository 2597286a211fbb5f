#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "signembed/augment.hpp"
#include "signembed/preprocess.hpp"

using namespace signembed;

TEST_CASE("random_flip probabilities") {
  const auto layout = resolve_layout("body_hands_75");
  RandomSource data_rng(1);
  auto seq = testutil::random_pose(data_rng, layout, 3);

  SUBCASE("p=0 is identity, p=1 mirrors (involution)") {
    RandomSource rng(2);
    CHECK(equal_bits(random_flip(seq, 0.0, rng), seq));
    auto flipped = random_flip(seq, 1.0, rng);
    CHECK(!equal_bits(flipped, seq));
    auto twice = random_flip(flipped, 1.0, rng);
    CHECK(equal_bits(twice, seq));
  }
  SUBCASE("p=0.2 frequency over 10k trials") {
    RandomSource rng(3);
    int flips = 0;
    for (int i = 0; i < 10000; ++i)
      if (rng.bernoulli(0.2)) ++flips;
    CHECK(flips >= 1800);
    CHECK(flips <= 2200);
  }
}

TEST_CASE("affine 2d augmentation") {
  const auto layout = resolve_layout("hand_21");
  RandomSource data_rng(5);
  auto seq = testutil::random_pose(data_rng, layout, 4);

  SUBCASE("sigma=0 is the identity") {
    RandomSource rng(7);
    CHECK(equal_bits(affine_2d_augment(seq, 0.0, rng), seq));
  }
  SUBCASE("pure rotation preserves pairwise 2D distances") {
    auto rotated = apply_affine2d(seq, 0.83, 0.0, 1.0);
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t i = 0; i < seq.keypoints; ++i)
        for (std::size_t j = i + 1; j < seq.keypoints; ++j) {
          auto dist2 = [&](const PoseSequence& s) {
            const double dx = s.at(f, i, 0) - s.at(f, j, 0);
            const double dy = s.at(f, i, 1) - s.at(f, j, 1);
            return std::sqrt(dx * dx + dy * dy);
          };
          CHECK(dist2(rotated) == doctest::Approx(dist2(seq)).epsilon(1e-5));
        }
  }
  SUBCASE("z and confidence untouched") {
    auto out = apply_affine2d(seq, 0.5, 0.3, 1.2);
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k)
        CHECK(out.at(f, k, 2) == seq.at(f, k, 2));
    CHECK(out.confidence == seq.confidence);
  }
  SUBCASE("fixed seed reproduces") {
    RandomSource a(11), b(11);
    CHECK(equal_bits(affine_2d_augment(seq, 0.2, a), affine_2d_augment(seq, 0.2, b)));
  }
}

TEST_CASE("temporal resampling") {
  const auto layout = resolve_layout("hand_21");

  SUBCASE("trajectory [0,2] to length 3 gives [0,1,2]") {
    PoseSequence seq;
    seq.layout = layout;
    seq.fps = 25.0f;
    seq.frames = 2;
    seq.keypoints = layout.total();
    seq.coords.assign(2 * seq.keypoints * 3, 0.0f);
    seq.confidence.assign(2 * seq.keypoints, 1.0f);
    for (std::size_t k = 0; k < seq.keypoints; ++k) seq.at(1, k, 0) = 2.0f;
    auto out = resample_frames(seq, 3);
    REQUIRE(out.frames == 3);
    CHECK(out.at(0, 0, 0) == 0.0f);
    CHECK(out.at(1, 0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(out.at(2, 0, 0) == 2.0f);
  }
  SUBCASE("endpoints preserved bit-exactly") {
    RandomSource rng(13);
    auto seq = testutil::random_pose(rng, layout, 9);
    for (std::size_t target : {2ul, 5ul, 17ul, 33ul}) {
      auto out = resample_frames(seq, target);
      for (std::size_t k = 0; k < seq.keypoints; ++k)
        for (std::size_t a = 0; a < 3; ++a) {
          CHECK(out.at(0, k, a) == seq.at(0, k, a));
          CHECK(out.at(out.frames - 1, k, a) == seq.at(seq.frames - 1, k, a));
        }
    }
  }
  SUBCASE("up-down round trip recovers linear trajectories") {
    PoseSequence seq;
    seq.layout = layout;
    seq.fps = 25.0f;
    seq.frames = 11;
    seq.keypoints = layout.total();
    seq.coords.resize(seq.frames * seq.keypoints * 3);
    seq.confidence.assign(seq.frames * seq.keypoints, 1.0f);
    RandomSource rng(17);
    for (std::size_t k = 0; k < seq.keypoints; ++k)
      for (std::size_t a = 0; a < 3; ++a) {
        const double slope = rng.normal(), intercept = rng.normal();
        for (std::size_t f = 0; f < seq.frames; ++f)
          seq.at(f, k, a) = static_cast<float>(intercept + slope * static_cast<double>(f));
      }
    auto up = resample_frames(seq, 2 * seq.frames);
    auto back = resample_frames(up, seq.frames);
    for (std::size_t i = 0; i < seq.coords.size(); ++i)
      CHECK(std::abs(back.coords[i] - seq.coords[i]) < 1e-6);
  }
  SUBCASE("factor 1 is identity; single frame unchanged") {
    RandomSource rng(19);
    auto seq = testutil::random_pose(rng, layout, 6);
    CHECK(equal_bits(resample_frames(seq, 6), seq));
    auto single = testutil::random_pose(rng, layout, 1);
    RandomSource arng(23);
    CHECK(equal_bits(temporal_augment(single, 0.5, arng), single));
  }
  SUBCASE("confidence interpolated and clamped") {
    RandomSource rng(29);
    auto seq = testutil::random_pose(rng, layout, 4);
    for (auto& c : seq.confidence) c = rng.bernoulli(0.5) ? 0.0f : 1.0f;
    auto out = resample_frames(seq, 9);
    for (float c : out.confidence) {
      CHECK(c >= 0.0f);
      CHECK(c <= 1.0f);
    }
  }
}

TEST_CASE("gaussian noise") {
  const auto layout = resolve_layout("hand_21");
  RandomSource data_rng(31);
  auto seq = testutil::random_pose(data_rng, layout, 40);
  seq.conf(0, 0) = 0.0f;

  SUBCASE("sigma=0 identity") {
    RandomSource rng(1);
    CHECK(equal_bits(gaussian_noise(seq, 0.0, rng), seq));
  }
  SUBCASE("masked keypoints untouched") {
    RandomSource rng(2);
    auto out = gaussian_noise(seq, 0.1, rng);
    for (std::size_t a = 0; a < 3; ++a) CHECK(out.at(0, 0, a) == seq.at(0, 0, a));
  }
  SUBCASE("sample statistics match sigma within 5%") {
    RandomSource rng(3);
    const double sigma = 0.01;
    auto out = gaussian_noise(seq, sigma, rng);
    double sum = 0, sumsq = 0;
    std::size_t n = 0;
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k) {
        if (seq.conf(f, k) <= 0) continue;
        for (std::size_t a = 0; a < 3; ++a) {
          const double d = out.at(f, k, a) - seq.at(f, k, a);
          sum += d;
          sumsq += d * d;
          ++n;
        }
      }
    const double mean = sum / n;
    const double std = std::sqrt(sumsq / n - mean * mean);
    CHECK(std::abs(mean) < 0.05 * sigma + 3 * sigma / std::sqrt(static_cast<double>(n)));
    CHECK(std == doctest::Approx(sigma).epsilon(0.05));
  }
}

TEST_CASE("apply_augmentations composition") {
  const auto layout = resolve_layout("body_hands_75");
  RandomSource data_rng(37);
  auto seq = testutil::random_pose(data_rng, layout, 8);

  SUBCASE("all-zero config is the identity") {
    AugmentConfig zero{0.0, 0.0, 0.0, 0.0, 0};
    RandomSource rng(41);
    CHECK(equal_bits(apply_augmentations(seq, zero, rng), seq));
  }
  SUBCASE("same seed gives bit-identical outputs") {
    AugmentConfig cfg;  // defaults
    RandomSource a(43), b(43);
    CHECK(equal_bits(apply_augmentations(seq, cfg, a), apply_augmentations(seq, cfg, b)));
  }
  SUBCASE("output invariants hold for random configs") {
    RandomSource meta(47);
    for (int trial = 0; trial < 25; ++trial) {
      AugmentConfig cfg;
      cfg.flip_prob = meta.uniform01();
      cfg.affine_sigma = meta.uniform01() * 0.5;
      cfg.temporal_sigma = meta.uniform01() * 0.5;
      cfg.noise_sigma = meta.uniform01() * 0.01;
      RandomSource rng(meta.next_u64());
      auto out = apply_augmentations(seq, cfg, rng);
      CHECK_NOTHROW(out.validate());
      CHECK(out.layout.name() == seq.layout.name());
      CHECK(out.frames >= 2);
    }
  }
}
