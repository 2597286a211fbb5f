#include "signembed/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "signembed/common.hpp"

namespace signembed {

using nlohmann::json;

namespace {

const std::regex kTagPattern("[a-z]{2,3}");

void check_tag(const std::string& tag) {
  if (!std::regex_match(tag, kTagPattern))
    throw ValidationError("language tag '" + tag + "' does not match [a-z]{2,3}");
}

std::string tag_token(const std::string& tag) { return "<" + tag + ">"; }

}  // namespace

std::string Prompt::render() const {
  std::string out = tag_token(spoken_tag) + " " + tag_token(signed_tag);
  if (!text.empty()) out += " " + text;
  return out;
}

Prompt build_prompt(const std::string& text, const std::string& spoken,
                    const std::string& signed_lang) {
  check_tag(spoken);
  check_tag(signed_lang);
  return Prompt{spoken, signed_lang, text};
}

Prompt parse_prompt(const std::string& rendered) {
  static const std::regex pattern("^<([a-z]{2,3})> <([a-z]{2,3})>(?: (.*))?$");
  std::smatch m;
  if (!std::regex_match(rendered, m, pattern))
    throw ValidationError("cannot parse prompt '" + rendered + "'");
  return Prompt{m[1].str(), m[2].str(), m[3].matched ? m[3].str() : ""};
}

Vocabulary::Vocabulary() {
  add_token("<pad>");
  add_token("<unk>");
  add_token("<cls>");
}

std::optional<int> Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ValidationError("token id out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

int Vocabulary::add_token(const std::string& token) {
  if (token.empty()) throw ValidationError("cannot add empty token");
  auto [it, inserted] = token_to_id_.emplace(token, size());
  if (!inserted) throw ValidationError("duplicate token '" + token + "'");
  id_to_token_.push_back(token);
  return it->second;
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(to_json_string()); }

std::string Vocabulary::to_json_string() const {
  json j = json::object();
  for (int i = 0; i < size(); ++i) j[id_to_token_[static_cast<std::size_t>(i)]] = i;
  return j.dump();
}

Vocabulary Vocabulary::from_json_string(const std::string& s) {
  json j;
  try {
    j = json::parse(s);
  } catch (const json::exception& e) {
    throw FormatError("vocabulary is not valid JSON: " + std::string(e.what()));
  }
  std::vector<std::string> by_id(j.size());
  for (const auto& [token, id] : j.items()) {
    const auto i = id.get<std::size_t>();
    if (i >= by_id.size()) throw FormatError("vocabulary ids are not dense");
    by_id[i] = token;
  }
  if (by_id.size() < 3 || by_id[0] != "<pad>" || by_id[1] != "<unk>" || by_id[2] != "<cls>")
    throw FormatError("vocabulary reserved tokens missing or misplaced");
  Vocabulary v;
  for (std::size_t i = 3; i < by_id.size(); ++i) v.add_token(by_id[i]);
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_json_string() << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return from_json_string(content);
}

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary build_vocab(const DatasetManifest& manifest, std::size_t min_count) {
  auto train = manifest.split_records(Split::Train);
  if (train.empty()) throw ValidationError("cannot build vocabulary: train split empty");

  std::set<std::string> tags;
  std::map<std::string, std::size_t> counts;
  for (const auto* r : train) {
    tags.insert(tag_token(r->spoken_lang));
    tags.insert(tag_token(r->signed_lang));
    for (auto& w : word_tokens(r->text)) ++counts[w];
  }

  Vocabulary v;
  for (const auto& t : tags) v.add_token(t);

  std::vector<std::pair<std::string, std::size_t>> words(counts.begin(), counts.end());
  std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [w, c] : words)
    if (c >= min_count) v.add_token(w);
  return v;
}

TokenSequence tokenize(const Prompt& prompt, const Vocabulary& vocab,
                       std::size_t max_text_len) {
  if (max_text_len < 1) throw ValidationError("max_text_len must be >= 1");
  std::vector<int> ids;
  ids.push_back(Vocabulary::kCls);
  auto push = [&](const std::string& token) {
    if (ids.size() >= max_text_len) return;
    ids.push_back(vocab.id(token).value_or(Vocabulary::kUnk));
  };
  push(tag_token(prompt.spoken_tag));
  push(tag_token(prompt.signed_tag));
  for (const auto& w : word_tokens(prompt.text)) push(w);

  TokenSequence seq;
  seq.length = ids.size();
  ids.resize(max_text_len, Vocabulary::kPad);
  seq.ids = std::move(ids);
  return seq;
}

std::string normalize_gloss(const std::string& gloss) {
  std::string s;
  s.reserve(gloss.size());
  for (unsigned char c : gloss) s.push_back(static_cast<char>(std::tolower(c)));
  // strip the trailing variant index: digits and separators
  std::size_t end = s.size();
  while (end > 0) {
    const char c = s[end - 1];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
        c == '.' || c == ' ')
      --end;
    else
      break;
  }
  if (end == 0) return s;  // all-digit gloss: keep it rather than erase it
  return s.substr(0, end);
}

DatasetManifest filter_by_known_labels(const DatasetManifest& manifest,
                                       const Vocabulary& vocab) {
  DatasetManifest out;
  out.base_dir = manifest.base_dir;
  for (const auto& r : manifest.records) {
    if (r.label.empty()) continue;
    const std::string norm = normalize_gloss(r.label);
    bool known = true;
    auto words = word_tokens(norm);
    if (words.empty()) known = false;
    for (const auto& w : words)
      if (!vocab.id(w)) known = false;
    if (!known) continue;
    ManifestRecord copy = r;
    copy.label = norm;
    copy.text = norm;
    out.records.push_back(std::move(copy));
  }
  return out;
}

}  // namespace signembed
