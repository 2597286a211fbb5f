#include "signembed/manifest.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "signembed/common.hpp"

namespace signembed {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + s + "' (expected train/valid/test)");
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(Split s) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

std::filesystem::path DatasetManifest::resolve_path(const ManifestRecord& r) const {
  std::filesystem::path p(r.pose_path);
  if (p.is_absolute()) return p;
  return base_dir / p;
}

void DatasetManifest::validate(bool check_paths) const {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.id.empty()) throw ValidationError("manifest record with empty id");
    if (!ids.insert(r.id).second)
      throw ValidationError("duplicate manifest id '" + r.id + "'");
    if (check_paths && !std::filesystem::exists(resolve_path(r)))
      throw ValidationError("pose file not found: " + resolve_path(r).string());
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        " is not valid JSON: " + e.what());
    }
    ManifestRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.pose_path = j.at("pose_path").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.spoken_lang = j.at("spoken_lang").get<std::string>();
      r.signed_lang = j.at("signed_lang").get<std::string>();
      r.split = split_from_string(j.at("split").get<std::string>());
      if (j.contains("label") && !j["label"].is_null())
        r.label = j["label"].get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        " missing fields: " + e.what());
    }
    m.records.push_back(std::move(r));
  }
  m.validate(check_paths);
  return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : m.records) {
    json j = {
        {"id", r.id},
        {"pose_path", r.pose_path},
        {"text", r.text},
        {"spoken_lang", r.spoken_lang},
        {"signed_lang", r.signed_lang},
        {"split", to_string(r.split)},
    };
    if (!r.label.empty()) j["label"] = r.label;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

}  // namespace signembed
