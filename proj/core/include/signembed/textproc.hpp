#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "signembed/manifest.hpp"

namespace signembed {

// Language-tagged text prompt. Rendered form: "<spoken> <signed> text"
// with single spaces; empty text renders as "<spoken> <signed>".
struct Prompt {
  std::string spoken_tag;  // ISO 639 code, e.g. "en"
  std::string signed_tag;  // ISO 639 code, e.g. "ase"
  std::string text;

  std::string render() const;
};

Prompt build_prompt(const std::string& text, const std::string& spoken,
                    const std::string& signed_lang);

// Inverse of Prompt::render.
Prompt parse_prompt(const std::string& rendered);

// Word-level vocabulary with reserved ids pad=0, unk=1, cls=2 and one token
// per language tag ("<en>", "<ase>", ...). Replaces a pretrained-embedding
// lookup with trainable embeddings over a corpus-built vocabulary.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;

  Vocabulary();

  int size() const { return static_cast<int>(id_to_token_.size()); }
  std::optional<int> id(const std::string& token) const;
  const std::string& token(int id) const;

  // Appends a token with the next id; duplicate tokens are rejected.
  int add_token(const std::string& token);

  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  std::string to_json_string() const;
  static Vocabulary from_json_string(const std::string& s);

 private:
  std::map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Lowercased alphanumeric word tokens of a text (ASCII-aware; non-ASCII
// bytes are kept inside tokens).
std::vector<std::string> word_tokens(const std::string& text);

// Builds a vocabulary from the manifest's train split: reserved tokens,
// then every language tag (sorted), then words with count >= min_count
// ordered by descending frequency, ties broken lexicographically.
Vocabulary build_vocab(const DatasetManifest& manifest, std::size_t min_count = 1);

struct TokenSequence {
  std::vector<int> ids;     // padded with kPad to max_text_len
  std::size_t length = 0;   // true (unpadded) length, used as pooling mask
};

// [cls, <spoken>, <signed>, words...] truncated to max_text_len, padded
// with pad. Unknown words map to unk.
TokenSequence tokenize(const Prompt& prompt, const Vocabulary& vocab,
                       std::size_t max_text_len = 64);

// Downstream gloss preprocessing: lowercase and strip the trailing variant
// index ("BOOK_2" -> "book"). Idempotent.
std::string normalize_gloss(const std::string& gloss);

// Keeps records whose normalized label tokenizes without unknown words.
DatasetManifest filter_by_known_labels(const DatasetManifest& manifest,
                                       const Vocabulary& vocab);

}  // namespace signembed
