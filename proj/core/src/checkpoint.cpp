#include <bit>
#include <fstream>

#include "signembed/train.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace signembed {

using nlohmann::json;

namespace {

json pipeline_to_json(const PreprocessPipeline& p) {
  json steps = json::array();
  for (const auto& s : p.steps) steps.push_back(s.to_string());
  return json{{"steps", steps}, {"stats_path", p.stats_path}};
}

PreprocessPipeline pipeline_from_json(const json& j) {
  std::vector<std::string> steps;
  for (const auto& s : j.at("steps")) steps.push_back(s.get<std::string>());
  return PreprocessPipeline::parse(steps, j.value("stats_path", std::string()));
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  const auto& schema = cp.net.params().schema();
  json manifest = json::array();
  for (const auto& t : schema.tensors())
    manifest.push_back(
        {{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", t.offset}});

  json header = {
      {"format", "signembed-checkpoint"},
      {"version", 1},
      {"model_config", cp.net.config().to_json()},
      {"train_config", cp.train_config.to_json()},
      {"pipeline", pipeline_to_json(cp.pipeline)},
      {"vocab", json::parse(cp.vocab.to_json_string())},
      {"vocab_hash", hash_hex(cp.vocab.hash())},
      {"best_epoch", cp.best_epoch},
      {"valid_loss", cp.valid_loss},
      {"param_count", schema.total()},
      {"params", manifest},
  };
  if (cp.stats) {
    header["corpus_stats"] = {{"keypoints", cp.stats->keypoints},
                              {"mean", cp.stats->mean},
                              {"std", cp.stats->stddev}};
  }
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(reinterpret_cast<const char*>(cp.net.params().data().data()),
            static_cast<std::streamsize>(cp.net.params().data().size() * sizeof(float)));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* expected_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");

  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  if (in.gcount() != 8) throw IoError("checkpoint truncated (header length)");
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint64_t>(in.gcount()) != len)
    throw IoError("checkpoint truncated (header)");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != "signembed-checkpoint")
    throw FormatError("'" + path.string() + "' is not a checkpoint file");

  Checkpoint cp(nn::ModelConfig::from_json(header.at("model_config")));
  cp.train_config = TrainConfig::from_json(header.at("train_config"));
  cp.pipeline = pipeline_from_json(header.at("pipeline"));
  cp.vocab = Vocabulary::from_json_string(header.at("vocab").dump());
  cp.best_epoch = header.at("best_epoch").get<std::size_t>();
  cp.valid_loss = header.at("valid_loss").get<double>();
  if (header.contains("corpus_stats")) {
    CorpusStats st;
    st.keypoints = header["corpus_stats"].at("keypoints").get<std::size_t>();
    st.mean = header["corpus_stats"].at("mean").get<std::vector<double>>();
    st.stddev = header["corpus_stats"].at("std").get<std::vector<double>>();
    cp.stats = std::move(st);
  }

  const std::string stored_hash = header.at("vocab_hash").get<std::string>();
  if (stored_hash != hash_hex(cp.vocab.hash()))
    throw ValidationError("checkpoint vocab hash does not match its vocabulary");
  if (expected_vocab && expected_vocab->hash() != cp.vocab.hash())
    throw ValidationError("provided vocabulary does not match the checkpoint's");

  // Verify the stored manifest against the schema rebuilt from the config.
  const auto& schema = cp.net.params().schema();
  const auto& manifest = header.at("params");
  if (manifest.size() != schema.tensors().size())
    throw FormatError("checkpoint parameter manifest does not match the model config");
  for (std::size_t i = 0; i < schema.tensors().size(); ++i) {
    const auto& t = schema.tensor(i);
    const auto& m = manifest[i];
    if (m.at("name") != t.name || m.at("rows") != t.rows || m.at("cols") != t.cols ||
        m.at("offset") != t.offset)
      throw FormatError("checkpoint tensor '" + t.name + "' mismatches the model config");
  }
  if (header.at("param_count").get<std::size_t>() != schema.total())
    throw FormatError("checkpoint parameter count mismatch");

  auto& data = cp.net.params().data();
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != data.size() * sizeof(float))
    throw IoError("checkpoint truncated (parameter blob)");
  return cp;
}

}  // namespace signembed
