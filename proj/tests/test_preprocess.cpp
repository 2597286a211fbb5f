#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "signembed/preprocess.hpp"

using namespace signembed;

namespace {

PoseSequence constant_shoulder_pose(std::size_t frames, float lx, float ly, float rx,
                                    float ry) {
  const auto layout = resolve_layout("body_hands_75");
  PoseSequence seq;
  seq.layout = layout;
  seq.fps = 25.0f;
  seq.frames = frames;
  seq.keypoints = layout.total();
  seq.coords.assign(frames * seq.keypoints * 3, 0.0f);
  seq.confidence.assign(frames * seq.keypoints, 1.0f);
  const auto ls = *layout.anchor("left_shoulder");
  const auto rs = *layout.anchor("right_shoulder");
  for (std::size_t f = 0; f < frames; ++f) {
    seq.at(f, ls, 0) = lx;
    seq.at(f, ls, 1) = ly;
    seq.at(f, rs, 0) = rx;
    seq.at(f, rs, 1) = ry;
  }
  return seq;
}

double shoulder_width(const PoseSequence& seq) {
  const auto ls = *seq.layout.anchor("left_shoulder");
  const auto rs = *seq.layout.anchor("right_shoulder");
  double sum = 0.0;
  for (std::size_t f = 0; f < seq.frames; ++f) {
    double d2 = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double d = seq.at(f, ls, a) - seq.at(f, rs, a);
      d2 += d * d;
    }
    sum += std::sqrt(d2);
  }
  return sum / static_cast<double>(seq.frames);
}

}  // namespace

TEST_CASE("normalize: forced example") {
  auto seq = constant_shoulder_pose(3, 2.0f, 2.0f, 4.0f, 2.0f);
  auto out = normalize_pose(seq);
  const auto ls = *out.layout.anchor("left_shoulder");
  const auto rs = *out.layout.anchor("right_shoulder");
  CHECK(out.at(0, ls, 0) == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(out.at(0, ls, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(out.at(0, rs, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(shoulder_width(out) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("normalize: idempotent and similarity-invariant") {
  RandomSource rng(7);
  const auto layout = resolve_layout("body_hands_75");
  for (int trial = 0; trial < 20; ++trial) {
    auto seq = testutil::random_pose(rng, layout, 5);
    auto once = normalize_pose(seq);
    auto twice = normalize_pose(once);
    for (std::size_t i = 0; i < once.coords.size(); ++i)
      CHECK(std::abs(once.coords[i] - twice.coords[i]) < 1e-6);

    // random similarity transform: translate + positive uniform scale
    const double s = std::exp(rng.normal(0.0, 0.7));
    const double t[3] = {rng.normal(0, 5), rng.normal(0, 5), rng.normal(0, 5)};
    PoseSequence moved = seq;
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k)
        for (std::size_t a = 0; a < 3; ++a)
          moved.at(f, k, a) = static_cast<float>(s * seq.at(f, k, a) + t[a]);
    auto from_moved = normalize_pose(moved);
    for (std::size_t i = 0; i < once.coords.size(); ++i)
      CHECK(std::abs(once.coords[i] - from_moved.coords[i]) < 1e-5);
  }
}

TEST_CASE("normalize: degenerate inputs") {
  auto seq = constant_shoulder_pose(2, 1.0f, 0.0f, 1.0f, 0.0f);  // zero width
  CHECK_THROWS_AS((void)normalize_pose(seq), DegenerateInputError);

  auto hidden = constant_shoulder_pose(2, 0.0f, 0.0f, 1.0f, 0.0f);
  const auto ls = *hidden.layout.anchor("left_shoulder");
  for (std::size_t f = 0; f < hidden.frames; ++f) hidden.conf(f, ls) = 0.0f;
  CHECK_THROWS_AS((void)normalize_pose(hidden), DegenerateInputError);
}

TEST_CASE("reduce_and_reposition: translation and layout") {
  const auto layout = resolve_layout("body_hands_75");
  RandomSource rng(13);
  auto seq = testutil::random_pose(rng, layout, 3, /*on_grid=*/true);

  const auto body_wrist = *layout.anchor("right_wrist_body");
  const auto hand_wrist = *layout.anchor("right_wrist_hand");
  auto out = reduce_and_reposition(seq);

  SUBCASE("hand wrist lands on the body wrist") {
    const auto out_body = *out.layout.anchor("right_wrist_body");
    const auto out_hand = *out.layout.anchor("right_wrist_hand");
    for (std::size_t f = 0; f < out.frames; ++f)
      for (std::size_t a = 0; a < 3; ++a)
        CHECK(out.at(f, out_hand, a) == out.at(f, out_body, a));
  }
  SUBCASE("body hand-duplicates dropped, layout documents it") {
    CHECK(out.keypoints == layout.total() - 6);
    CHECK(out.layout.name() == "body_hands_75|reduced");
    CHECK(resolve_layout(out.layout.name()).total() == out.keypoints);
  }
  SUBCASE("forced example: known offset") {
    PoseSequence simple = seq;
    // hand wrist at (1,1,0); body wrist at (1.25,1,0): hand moves by +0.25 in x
    const auto& hand_pts = layout.tag_indices("right_hand");
    for (std::size_t f = 0; f < simple.frames; ++f) {
      for (std::size_t n = 0; n < hand_pts.size(); ++n) {
        simple.at(f, hand_pts[n], 0) = 1.0f + 0.125f * static_cast<float>(n);
        simple.at(f, hand_pts[n], 1) = 1.0f;
        simple.at(f, hand_pts[n], 2) = 0.0f;
      }
      simple.at(f, body_wrist, 0) = 1.25f;
      simple.at(f, body_wrist, 1) = 1.0f;
      simple.at(f, body_wrist, 2) = 0.0f;
    }
    auto moved = reduce_and_reposition(simple);
    const auto out_hand_pts = moved.layout.tag_indices("right_hand");
    for (std::size_t n = 0; n < out_hand_pts.size(); ++n)
      CHECK(moved.at(0, out_hand_pts[n], 0) ==
            1.25f + 0.125f * static_cast<float>(n));
  }
  SUBCASE("intra-hand pairwise distances preserved exactly (grid data)") {
    const auto& in_pts = layout.tag_indices("left_hand");
    const auto out_pts = out.layout.tag_indices("left_hand");
    REQUIRE(in_pts.size() == out_pts.size());
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t i = 0; i < in_pts.size(); ++i)
        for (std::size_t j = i + 1; j < in_pts.size(); ++j)
          for (std::size_t a = 0; a < 3; ++a) {
            const float din = seq.at(f, in_pts[i], a) - seq.at(f, in_pts[j], a);
            const float dout = out.at(f, out_pts[i], a) - out.at(f, out_pts[j], a);
            CHECK(din == dout);
          }
  }
  SUBCASE("fully missing hand left untouched") {
    PoseSequence missing = seq;
    const auto& hand_pts = layout.tag_indices("left_hand");
    for (std::size_t f = 0; f < missing.frames; ++f)
      for (auto k : hand_pts) missing.conf(f, k) = 0.0f;
    auto moved = reduce_and_reposition(missing);
    const auto out_pts = moved.layout.tag_indices("left_hand");
    for (std::size_t f = 0; f < moved.frames; ++f)
      for (std::size_t n = 0; n < hand_pts.size(); ++n)
        for (std::size_t a = 0; a < 3; ++a)
          CHECK(moved.at(f, out_pts[n], a) == missing.at(f, hand_pts[n], a));
  }
}

TEST_CASE("corpus stats") {
  const auto layout = resolve_layout("hand_21");
  RandomSource rng(17);

  SUBCASE("constant pose: mean is the pose, std is the floor") {
    auto seq = testutil::random_pose(rng, layout, 4);
    for (std::size_t f = 1; f < seq.frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k)
        for (std::size_t a = 0; a < 3; ++a) seq.at(f, k, a) = seq.at(0, k, a);
    auto stats = compute_corpus_stats({seq});
    for (std::size_t i = 0; i < stats.mean.size(); ++i) {
      CHECK(stats.mean[i] == doctest::Approx(seq.coords[i]).epsilon(1e-7));
      CHECK(stats.stddev[i] == CorpusStats::kStdFloor);
    }
  }
  SUBCASE("v and -v: zero mean") {
    auto a = testutil::random_pose(rng, layout, 2);
    PoseSequence b = a;
    for (auto& v : b.coords) v = -v;
    auto stats = compute_corpus_stats({a, b});
    for (double m : stats.mean) CHECK(std::abs(m) < 1e-9);
  }
  SUBCASE("matches a streaming one-pass oracle within 1e-9") {
    std::vector<PoseSequence> corpus;
    for (int i = 0; i < 5; ++i) corpus.push_back(testutil::random_pose(rng, layout, 6));
    // mask some entries
    for (auto& s : corpus)
      for (auto& c : s.confidence)
        if (rng.bernoulli(0.2)) c = 0.0f;
    auto stats = compute_corpus_stats(corpus);

    const std::size_t kp = layout.total();
    std::vector<double> mean(kp * 3, 0), m2(kp * 3, 0);
    std::vector<std::size_t> n(kp, 0);
    for (const auto& s : corpus)
      for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t k = 0; k < kp; ++k) {
          if (s.conf(f, k) <= 0) continue;
          ++n[k];
          for (std::size_t a = 0; a < 3; ++a) {
            const double x = s.at(f, k, a);
            const double delta = x - mean[k * 3 + a];
            mean[k * 3 + a] += delta / static_cast<double>(n[k]);
            m2[k * 3 + a] += delta * (x - mean[k * 3 + a]);
          }
        }
    for (std::size_t k = 0; k < kp; ++k) {
      if (n[k] == 0) continue;
      for (std::size_t a = 0; a < 3; ++a) {
        CHECK(stats.mean[k * 3 + a] == doctest::Approx(mean[k * 3 + a]).epsilon(1e-9));
        const double var = m2[k * 3 + a] / static_cast<double>(n[k]);
        CHECK(stats.stddev[k * 3 + a] ==
              doctest::Approx(std::max(std::sqrt(var), 1e-6)).epsilon(1e-9));
      }
    }
  }
  SUBCASE("never-observed keypoint falls back to mean 0 std 1") {
    auto seq = testutil::random_pose(rng, layout, 3);
    for (std::size_t f = 0; f < seq.frames; ++f) seq.conf(f, 0) = 0.0f;
    auto stats = compute_corpus_stats({seq});
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(stats.mean[a] == 0.0);
      CHECK(stats.stddev[a] == 1.0);
    }
  }
}

TEST_CASE("standardize") {
  const auto layout = resolve_layout("hand_21");
  RandomSource rng(23);
  std::vector<PoseSequence> corpus;
  for (int i = 0; i < 8; ++i) corpus.push_back(testutil::random_pose(rng, layout, 5));
  auto stats = compute_corpus_stats(corpus);

  SUBCASE("sequence equal to the mean maps to zeros") {
    PoseSequence seq = corpus[0];
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k)
        for (std::size_t a = 0; a < 3; ++a)
          seq.at(f, k, a) = static_cast<float>(stats.mean_at(k, a));
    auto out = standardize(seq, stats);
    for (float v : out.coords) CHECK(std::abs(v) < 1e-5);
  }
  SUBCASE("identity parameters") {
    CorpusStats id;
    id.keypoints = layout.total();
    id.mean.assign(id.keypoints * 3, 0.0);
    id.stddev.assign(id.keypoints * 3, 1.0);
    auto out = standardize(corpus[0], id);
    CHECK(out.coords == corpus[0].coords);
  }
  SUBCASE("standardized corpus re-measures to mean 0 / std 1") {
    std::vector<PoseSequence> standardized;
    for (const auto& s : corpus) standardized.push_back(standardize(s, stats));
    auto restats = compute_corpus_stats(standardized);
    for (std::size_t i = 0; i < restats.mean.size(); ++i) {
      CHECK(std::abs(restats.mean[i]) < 1e-6);
      CHECK(restats.stddev[i] == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("masked keypoints zeroed; inverse is identity where confident") {
    PoseSequence seq = corpus[0];
    seq.conf(0, 3) = 0.0f;
    auto out = standardize(seq, stats);
    for (std::size_t a = 0; a < 3; ++a) CHECK(out.at(0, 3, a) == 0.0f);
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t k = 0; k < seq.keypoints; ++k) {
        if (seq.conf(f, k) <= 0) continue;
        for (std::size_t a = 0; a < 3; ++a) {
          const double undone = out.at(f, k, a) * stats.std_at(k, a) + stats.mean_at(k, a);
          CHECK(std::abs(undone - seq.at(f, k, a)) < 1e-6);
        }
      }
  }
  SUBCASE("shape mismatch rejected") {
    auto other = testutil::random_pose(rng, resolve_layout("body_hands_75"), 2);
    CHECK_THROWS_AS((void)standardize(other, stats), ValidationError);
  }
}

TEST_CASE("anonymize") {
  const auto layout = resolve_layout("hand_21");
  RandomSource rng(29);
  auto stats = compute_corpus_stats({testutil::random_pose(rng, layout, 5)});
  auto seq = testutil::random_pose(rng, layout, 4);

  SUBCASE("first output frame equals the mean pose exactly") {
    auto out = anonymize(seq, stats);
    for (std::size_t k = 0; k < seq.keypoints; ++k)
      for (std::size_t a = 0; a < 3; ++a)
        CHECK(out.at(0, k, a) == static_cast<float>(stats.mean_at(k, a)));
  }
  SUBCASE("fixed point when frame 0 is already the mean") {
    PoseSequence fixed = seq;
    for (std::size_t k = 0; k < seq.keypoints; ++k)
      for (std::size_t a = 0; a < 3; ++a)
        fixed.at(0, k, a) = static_cast<float>(stats.mean_at(k, a));
    auto out = anonymize(fixed, stats);
    for (std::size_t i = 0; i < out.coords.size(); ++i)
      CHECK(out.coords[i] == doctest::Approx(fixed.coords[i]).epsilon(1e-6));
  }
  SUBCASE("constant per-keypoint offsets cancel") {
    PoseSequence shifted = seq;
    RandomSource r2(31);
    for (std::size_t k = 0; k < seq.keypoints; ++k) {
      const float off[3] = {static_cast<float>(r2.normal()), static_cast<float>(r2.normal()),
                            static_cast<float>(r2.normal())};
      for (std::size_t f = 0; f < seq.frames; ++f)
        for (std::size_t a = 0; a < 3; ++a)
          shifted.at(f, k, a) = seq.at(f, k, a) + off[a];
    }
    auto a = anonymize(seq, stats);
    auto b = anonymize(shifted, stats);
    for (std::size_t i = 0; i < a.coords.size(); ++i)
      CHECK(std::abs(a.coords[i] - b.coords[i]) < 1e-5);
  }
}

TEST_CASE("mirror and flip") {
  const auto layout = resolve_layout("body_hands_75");
  RandomSource rng(37);
  auto seq = testutil::random_pose(rng, layout, 3);
  for (auto& c : seq.confidence) c = rng.bernoulli(0.2) ? 0.0f : 1.0f;

  SUBCASE("mirror is an exact involution") {
    auto twice = mirror_pose(mirror_pose(seq));
    CHECK(equal_bits(twice, seq));
  }
  SUBCASE("mirror swaps hand confidences") {
    auto out = mirror_pose(seq);
    const auto& lh = layout.tag_indices("left_hand");
    const auto& rh = layout.tag_indices("right_hand");
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t n = 0; n < lh.size(); ++n) {
        CHECK(out.conf(f, lh[n]) == seq.conf(f, rh[n]));
        CHECK(out.conf(f, rh[n]) == seq.conf(f, lh[n]));
      }
  }
  SUBCASE("flip only when the right hand is absent and the left present") {
    PoseSequence lefty = seq;
    const auto& lh = layout.tag_indices("left_hand");
    const auto& rh = layout.tag_indices("right_hand");
    for (std::size_t f = 0; f < lefty.frames; ++f) {
      for (auto k : rh) lefty.conf(f, k) = 0.0f;
      for (auto k : lh) lefty.conf(f, k) = 1.0f;
    }
    auto flipped = flip_to_right_handed(lefty);
    CHECK(!equal_bits(flipped, lefty));
    // second application no longer triggers
    auto again = flip_to_right_handed(flipped);
    CHECK(equal_bits(again, flipped));

    PoseSequence righty = seq;
    for (std::size_t f = 0; f < righty.frames; ++f) righty.conf(f, rh[0]) = 1.0f;
    CHECK(equal_bits(flip_to_right_handed(righty), righty));
  }
}

TEST_CASE("pipeline parsing, stats file round-trip") {
  auto p = PreprocessPipeline::parse({"normalize", "select:right_hand", "flip_right"});
  CHECK(p.steps.size() == 3);
  CHECK(p.steps[1].kind == PreprocessStep::Select);
  CHECK(p.steps[1].arg == "right_hand");
  CHECK(!p.needs_stats());
  CHECK(PreprocessPipeline::parse({"normalize", "standardize"}).needs_stats());

  const auto dir = testutil::tmp_dir("stats");
  RandomSource rng(41);
  auto stats = compute_corpus_stats(
      {testutil::random_pose(rng, resolve_layout("hand_21"), 4)});
  stats.save(dir / "stats.spse");
  auto back = CorpusStats::load(dir / "stats.spse");
  CHECK(back.keypoints == stats.keypoints);
  for (std::size_t i = 0; i < stats.mean.size(); ++i) {
    CHECK(back.mean[i] == doctest::Approx(stats.mean[i]).epsilon(1e-6));
    CHECK(back.stddev[i] == doctest::Approx(stats.stddev[i]).epsilon(1e-6));
  }
}
