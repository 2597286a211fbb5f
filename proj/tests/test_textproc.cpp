#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "signembed/textproc.hpp"

using namespace signembed;

namespace {

DatasetManifest text_manifest(const std::vector<std::string>& texts) {
  DatasetManifest m;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    ManifestRecord r;
    r.id = "t" + std::to_string(i);
    r.pose_path = "unused.spse";
    r.text = texts[i];
    r.spoken_lang = "en";
    r.signed_lang = "ase";
    r.split = Split::Train;
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace

TEST_CASE("prompt rendering matches the tagged format") {
  CHECK(build_prompt("Hello, can I help you?", "en", "ase").render() ==
        "<en> <ase> Hello, can I help you?");
  CHECK(build_prompt("", "en", "ase").render() == "<en> <ase>");
  CHECK(build_prompt("Fingerspell the letter A in DGS.", "en", "gsg").render() ==
        "<en> <gsg> Fingerspell the letter A in DGS.");
  CHECK_THROWS_AS((void)build_prompt("x", "EN", "ase"), ValidationError);
  CHECK_THROWS_AS((void)build_prompt("x", "e", "ase"), ValidationError);
  CHECK_THROWS_AS((void)build_prompt("x", "en", "american"), ValidationError);
}

TEST_CASE("prompt render/parse round-trip") {
  for (const auto& text : {std::string("hello world"), std::string(""),
                           std::string("punctuation, works!")}) {
    const auto p = build_prompt(text, "en", "gsg");
    const auto back = parse_prompt(p.render());
    CHECK(back.spoken_tag == "en");
    CHECK(back.signed_tag == "gsg");
    CHECK(back.text == text);
  }
}

TEST_CASE("vocabulary build") {
  SUBCASE("min_count 1 keeps both words") {
    auto v = build_vocab(text_manifest({"a b", "a"}), 1);
    CHECK(v.id("a").has_value());
    CHECK(v.id("b").has_value());
    // frequency order: a before b
    CHECK(*v.id("a") < *v.id("b"));
  }
  SUBCASE("min_count 3 leaves only reserved and tag tokens") {
    auto v = build_vocab(text_manifest({"a b", "a"}), 3);
    CHECK(!v.id("a").has_value());
    CHECK(!v.id("b").has_value());
    CHECK(v.id("<en>").has_value());
    CHECK(v.id("<ase>").has_value());
    CHECK(v.size() == 5);  // pad, unk, cls, <ase>, <en>
  }
  SUBCASE("deterministic id assignment across rebuilds") {
    auto m = text_manifest({"the quick brown fox", "the lazy dog", "the fox"});
    auto a = build_vocab(m, 1);
    auto b = build_vocab(m, 1);
    CHECK(a.to_json_string() == b.to_json_string());
    CHECK(a.hash() == b.hash());
  }
  SUBCASE("serialization round-trip") {
    const auto dir = testutil::tmp_dir("vocab");
    auto v = build_vocab(text_manifest({"alpha beta gamma"}), 1);
    v.save(dir / "v.json");
    auto back = Vocabulary::load(dir / "v.json");
    CHECK(back.to_json_string() == v.to_json_string());
  }
  SUBCASE("empty corpus rejected") {
    DatasetManifest m;
    CHECK_THROWS_AS((void)build_vocab(m, 1), ValidationError);
  }
}

TEST_CASE("tokenize") {
  auto vocab = build_vocab(text_manifest({"hello can i help you today"}), 1);

  SUBCASE("100-word prompt truncates to exactly max_text_len ids") {
    std::string big;
    for (int i = 0; i < 100; ++i) big += "hello ";
    auto seq = tokenize(build_prompt(big, "en", "ase"), vocab, 64);
    CHECK(seq.ids.size() == 64);
    CHECK(seq.length == 64);
  }
  SUBCASE("empty text: cls + tags + padding") {
    auto seq = tokenize(build_prompt("", "en", "ase"), vocab, 8);
    CHECK(seq.ids.size() == 8);
    CHECK(seq.length == 3);
    CHECK(seq.ids[0] == Vocabulary::kCls);
    CHECK(seq.ids[1] == *vocab.id("<en>"));
    CHECK(seq.ids[2] == *vocab.id("<ase>"));
    for (std::size_t i = 3; i < 8; ++i) CHECK(seq.ids[i] == Vocabulary::kPad);
  }
  SUBCASE("unknown words become unk; tokenization is deterministic") {
    auto a = tokenize(build_prompt("zebra hello", "en", "ase"), vocab, 8);
    auto b = tokenize(build_prompt("zebra hello", "en", "ase"), vocab, 8);
    CHECK(a.ids == b.ids);
    CHECK(a.ids[3] == Vocabulary::kUnk);
    CHECK(a.ids[4] == *vocab.id("hello"));
  }
}

TEST_CASE("gloss normalization is idempotent") {
  CHECK(normalize_gloss("BOOK_2") == "book");
  CHECK(normalize_gloss("Snake_Case_3") == "snake_case");
  CHECK(normalize_gloss("plain") == "plain");
  CHECK(normalize_gloss("trailing-12") == "trailing");
  for (const auto& g : {"BOOK_2", "Snake_Case_3", "plain", "42", "a2b"}) {
    const auto once = normalize_gloss(g);
    CHECK(normalize_gloss(once) == once);
  }
}

TEST_CASE("filter_by_known_labels keeps vocabulary-known classes") {
  auto vocab = build_vocab(text_manifest({"house tree water"}), 1);
  DatasetManifest m;
  auto add = [&](const std::string& id, const std::string& label) {
    ManifestRecord r;
    r.id = id;
    r.pose_path = "p.spse";
    r.text = label;
    r.spoken_lang = "en";
    r.signed_lang = "ase";
    r.split = Split::Test;
    r.label = label;
    m.records.push_back(r);
  };
  add("a", "HOUSE_2");
  add("b", "unicorn");
  add("c", "TREE");
  auto filtered = filter_by_known_labels(m, vocab);
  REQUIRE(filtered.records.size() == 2);
  CHECK(filtered.records[0].label == "house");
  CHECK(filtered.records[1].label == "tree");
}
