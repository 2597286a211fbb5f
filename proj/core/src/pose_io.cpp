#include "signembed/pose_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "signembed/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "pose IO assumes a little-endian host");

namespace signembed {

namespace {

using nlohmann::json;

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw IoError(std::string("pose file truncated while reading ") + what);
}

}  // namespace

void save_pose(const PoseSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

  json header = {
      {"layout_name", seq.layout.name()},
      {"fps", seq.fps},
      {"frames", seq.frames},
      {"keypoints", seq.keypoints},
  };
  const std::string header_str = header.dump();

  write_bytes(out, kPoseMagic, 4);
  const std::uint16_t version = kPoseFormatVersion;
  write_bytes(out, &version, 2);
  const std::uint32_t header_len = static_cast<std::uint32_t>(header_str.size());
  write_bytes(out, &header_len, 4);
  write_bytes(out, header_str.data(), header_str.size());
  write_bytes(out, seq.coords.data(), seq.coords.size() * sizeof(float));
  write_bytes(out, seq.confidence.data(), seq.confidence.size() * sizeof(float));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

PoseSequence load_pose(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kPoseMagic, 4) != 0)
    throw FormatError("'" + path.string() + "' is not a pose file (bad magic)");
  std::uint16_t version = 0;
  read_bytes(in, &version, 2, "version");
  if (version != kPoseFormatVersion)
    throw FormatError("unsupported pose format version " + std::to_string(version));
  std::uint32_t header_len = 0;
  read_bytes(in, &header_len, 4, "header length");
  std::string header_str(header_len, '\0');
  read_bytes(in, header_str.data(), header_len, "header");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw FormatError("pose header is not valid JSON: " + std::string(e.what()));
  }
  std::string layout_name;
  float fps = 0.0f;
  std::size_t frames = 0, keypoints = 0;
  try {
    layout_name = header.at("layout_name").get<std::string>();
    fps = header.at("fps").get<float>();
    frames = header.at("frames").get<std::size_t>();
    keypoints = header.at("keypoints").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError("pose header missing fields: " + std::string(e.what()));
  }

  KeypointLayout layout;
  try {
    layout = resolve_layout(layout_name);
  } catch (const ValidationError&) {
    layout = KeypointLayout(layout_name, {{"POINTS", keypoints}}, {}, {}, {});
  }
  if (layout.total() != keypoints)
    throw ValidationError("pose file keypoints (" + std::to_string(keypoints) +
                          ") do not match layout '" + layout_name + "' (" +
                          std::to_string(layout.total()) + ")");

  PoseSequence seq;
  seq.layout = std::move(layout);
  seq.fps = fps;
  seq.frames = frames;
  seq.keypoints = keypoints;
  seq.coords.resize(frames * keypoints * 3);
  seq.confidence.resize(frames * keypoints);
  read_bytes(in, seq.coords.data(), seq.coords.size() * sizeof(float), "coords");
  read_bytes(in, seq.confidence.data(), seq.confidence.size() * sizeof(float),
             "confidence");
  seq.validate();
  return seq;
}

}  // namespace signembed
