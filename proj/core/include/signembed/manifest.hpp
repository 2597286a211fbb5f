#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace signembed {

enum class Split { Train, Valid, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestRecord {
  std::string id;
  std::string pose_path;  // relative paths resolve against the manifest dir
  std::string text;
  std::string spoken_lang;  // ISO 639 code
  std::string signed_lang;  // ISO 639 code
  Split split = Split::Train;
  std::string label;  // optional class label, empty if absent
};

// Dataset manifest: JSON Lines, one record per line.
struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;

  std::vector<const ManifestRecord*> split_records(Split s) const;
  std::filesystem::path resolve_path(const ManifestRecord& r) const;
  void validate(bool check_paths) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path, bool check_paths = true);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

}  // namespace signembed
