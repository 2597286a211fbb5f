#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "signembed/manifest.hpp"
#include "signembed/pose_io.hpp"

using namespace signembed;

TEST_CASE("layout table sizes") {
  CHECK(resolve_layout("holistic_543").total() == 543);
  CHECK(resolve_layout("holistic_203").total() == 203);
  CHECK(resolve_layout("hand_21").total() == 21);
  CHECK(resolve_layout("body_hands_75").total() == 75);
}

TEST_CASE("face contour subset has 128 unique in-range indices") {
  const auto& contour = face_contour_indices();
  CHECK(contour.size() == 128);
  std::set<std::size_t> unique(contour.begin(), contour.end());
  CHECK(unique.size() == 128);
  for (auto i : contour) CHECK(i < 468);
}

TEST_CASE("layout tag contracts") {
  const auto full = resolve_layout("holistic_543");
  CHECK(full.tag_indices("shoulders").size() == 2);
  CHECK(full.tag_indices("left_hand").size() == 21);
  CHECK(full.tag_indices("right_hand").size() == 21);
  CHECK(full.tag_indices("legs").size() == 8);
  CHECK(full.tag_indices("face").size() == 468);
  CHECK(full.tag_indices("face_contour").size() == 128);

  // pairs form an involution: each index in at most one pair
  std::set<std::size_t> seen;
  for (const auto& [a, b] : full.left_right_pairs()) {
    CHECK(seen.insert(a).second);
    CHECK(seen.insert(b).second);
  }
}

TEST_CASE("selector arithmetic") {
  const auto full = resolve_layout("holistic_543");
  CHECK(full.selection_indices("all - face + face_contour").size() == 203);
  CHECK(full.selection_indices("right_hand").size() == 21);
  CHECK(full.selection_indices("all").size() == 543);
  CHECK(full.selection_indices("all minus legs").size() == 535);
  CHECK_THROWS_AS((void)full.selection_indices("nonsense_tag"), ValidationError);
  CHECK_THROWS_AS((void)full.selection_indices("face - face"), ValidationError);
}

TEST_CASE("select_components matches the layout arithmetic and keeps order") {
  RandomSource rng(11);
  const auto layout = resolve_layout("body_hands_75");
  const auto seq = testutil::random_pose(rng, layout, 4);

  const auto hand = select_components(seq, "right_hand");
  CHECK(hand.keypoints == 21);
  CHECK(hand.layout.name() == "body_hands_75|sel(right_hand)");
  const auto& idx = layout.tag_indices("right_hand");
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t n = 0; n < idx.size(); ++n)
      for (std::size_t a = 0; a < 3; ++a)
        CHECK(hand.at(f, n, a) == seq.at(f, idx[n], a));

  SUBCASE("identity selection") {
    const auto all = select_components(seq, "everything");
    CHECK(all.keypoints == seq.keypoints);
    CHECK(all.coords == seq.coords);
  }
  SUBCASE("idempotence for a fixed selector") {
    const auto once = select_components(seq, "all - legs");
    const auto twice = select_components(once, "all");
    CHECK(once.coords == twice.coords);
  }
  SUBCASE("commutes with frame slicing") {
    const auto a = slice_frames(select_components(seq, "all - legs"), 1, 3);
    const auto b = select_components(slice_frames(seq, 1, 3), "all - legs");
    CHECK(a.coords == b.coords);
    CHECK(a.confidence == b.confidence);
  }
}

TEST_CASE("pose IO round-trips bit-exactly") {
  const auto dir = testutil::tmp_dir("pose-io");
  RandomSource rng(42);
  const auto layout = resolve_layout("body_hands_75");

  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 1 + rng.uniform_int(9);
    auto seq = testutil::random_pose(rng, layout, frames);
    for (auto& c : seq.confidence)
      c = rng.bernoulli(0.1) ? 0.0f : static_cast<float>(rng.uniform01());
    const auto path = dir / ("t" + std::to_string(trial) + ".spse");
    save_pose(seq, path);
    const auto back = load_pose(path);
    CHECK(equal_bits(seq, back));
  }
}

TEST_CASE("pose IO error taxonomy") {
  const auto dir = testutil::tmp_dir("pose-errors");
  RandomSource rng(1);
  auto seq = testutil::random_pose(rng, resolve_layout("hand_21"), 2);
  const auto path = dir / "x.spse";
  save_pose(seq, path);

  SUBCASE("corrupted magic -> format error") {
    auto bytes = [&] {
      std::ifstream in(path, std::ios::binary);
      return std::string((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    }();
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS((void)load_pose(path), FormatError);
  }
  SUBCASE("truncated payload -> IO error") {
    auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 7);
    CHECK_THROWS_AS((void)load_pose(path), IoError);
  }
  SUBCASE("missing file -> IO error") {
    CHECK_THROWS_AS((void)load_pose(dir / "absent.spse"), IoError);
  }
  SUBCASE("frames=0 sequence -> validation error on save") {
    PoseSequence bad = seq;
    bad.frames = 0;
    bad.coords.clear();
    bad.confidence.clear();
    CHECK_THROWS_AS(save_pose(bad, dir / "bad.spse"), ValidationError);
  }
  SUBCASE("dimension mismatch -> validation error") {
    // header says hand_21 but carries 20 keypoints worth of payload
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    in.close();
    const std::string needle = "\"keypoints\":21";
    auto at = bytes.find(needle);
    REQUIRE(at != std::string::npos);
    bytes.replace(at, needle.size(), "\"keypoints\":20");
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS((void)load_pose(path), ValidationError);
  }
}

// independent header parse of a stored file: magic, version, JSON fields
TEST_CASE("stored header matches an independent binary parse") {
  const auto dir = testutil::tmp_dir("pose-header");
  RandomSource rng(5);
  auto seq = testutil::random_pose(rng, resolve_layout("holistic_543"), 1);
  const auto path = dir / "one.spse";
  save_pose(seq, path);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::memcmp(magic, "SPSE", 4) == 0);
  std::uint16_t version;
  in.read(reinterpret_cast<char*>(&version), 2);
  CHECK(version == 1);
  std::uint32_t hlen;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string header(hlen, '\0');
  in.read(header.data(), hlen);
  CHECK(header.find("\"frames\":1") != std::string::npos);
  CHECK(header.find("\"keypoints\":543") != std::string::npos);
  CHECK(header.find("\"layout_name\":\"holistic_543\"") != std::string::npos);
  // payload size: frames*kp*3 + frames*kp floats
  const auto expected =
      static_cast<std::uintmax_t>(10 + hlen + (543 * 3 + 543) * sizeof(float));
  CHECK(std::filesystem::file_size(path) == expected);
}

TEST_CASE("derived layout names resolve after reloading") {
  const auto dir = testutil::tmp_dir("pose-derived");
  RandomSource rng(3);
  auto seq = testutil::random_pose(rng, resolve_layout("body_hands_75"), 3);
  auto sel = select_components(seq, "all - legs");
  const auto path = dir / "sel.spse";
  save_pose(sel, path);
  const auto back = load_pose(path);
  CHECK(back.layout.name() == "body_hands_75|sel(all-legs)");
  CHECK(back.layout.has_tag("right_hand"));
  CHECK(back.keypoints == 67);
}

TEST_CASE("manifest round-trip and validation") {
  const auto dir = testutil::tmp_dir("manifest");
  RandomSource rng(9);
  auto seq = testutil::random_pose(rng, resolve_layout("hand_21"), 2);
  save_pose(seq, dir / "a.spse");

  DatasetManifest m;
  m.base_dir = dir;
  m.records.push_back({"a", "a.spse", "hello", "en", "ase", Split::Train, "hello"});
  save_manifest(m, dir / "manifest.jsonl");
  auto back = load_manifest(dir / "manifest.jsonl");
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].id == "a");
  CHECK(back.records[0].split == Split::Train);
  CHECK(back.records[0].label == "hello");

  SUBCASE("duplicate ids rejected") {
    m.records.push_back({"a", "a.spse", "x", "en", "ase", Split::Test, ""});
    save_manifest(m, dir / "dup.jsonl");
    CHECK_THROWS_AS((void)load_manifest(dir / "dup.jsonl"), ValidationError);
  }
  SUBCASE("missing pose path rejected when checking") {
    m.records.push_back({"b", "absent.spse", "x", "en", "ase", Split::Test, ""});
    save_manifest(m, dir / "miss.jsonl");
    CHECK_THROWS_AS((void)load_manifest(dir / "miss.jsonl", true), ValidationError);
    CHECK_NOTHROW((void)load_manifest(dir / "miss.jsonl", false));
  }
}
