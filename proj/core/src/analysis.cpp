#include "signembed/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace signembed {

Eigen::VectorXf centroid(const EmbeddingGroup& group) {
  if (group.members.empty())
    throw ValidationError("centroid of empty group '" + group.key + "'");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(group.members.front().second.size());
  for (const auto& [tag, v] : group.members) {
    if (v.size() != sum.size())
      throw ValidationError("group '" + group.key + "' members disagree on dimension");
    sum += v.cast<double>();
  }
  return (sum / static_cast<double>(group.members.size())).cast<float>();
}

std::vector<std::pair<std::string, double>> analogy(
    const Eigen::VectorXf& a, const Eigen::VectorXf& b, const Eigen::VectorXf& c,
    const std::vector<std::pair<std::string, Eigen::VectorXf>>& candidates,
    const std::set<std::string>& exclude) {
  if (a.size() != b.size() || a.size() != c.size())
    throw ValidationError("analogy vectors disagree on dimension");
  const Eigen::VectorXd target = (a - b + c).cast<double>();
  const double tnorm = target.norm();

  std::vector<std::pair<std::string, double>> scored;
  for (const auto& [key, v] : candidates) {
    if (exclude.count(key)) continue;
    if (v.size() != a.size())
      throw ValidationError("analogy candidate '" + key + "' dimension mismatch");
    const Eigen::VectorXd vd = v.cast<double>();
    const double denom = tnorm * vd.norm();
    scored.emplace_back(key, denom > 0.0 ? target.dot(vd) / denom : 0.0);
  }
  if (scored.empty())
    throw ValidationError("no analogy candidates left after exclusion");
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  return scored;
}

std::vector<std::pair<std::string, double>> iconicity_rank(
    const std::vector<EmbeddingGroup>& groups, std::vector<std::string>* warnings) {
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& g : groups) {
    if (g.members.size() < 2) {
      if (warnings)
        warnings->push_back("group '" + g.key + "' has fewer than 2 members; excluded");
      continue;
    }
    const Eigen::Index d = g.members.front().second.size();
    const std::size_t n = g.members.size();
    // Shift by the first member before the two-pass variance so a group of
    // identical embeddings scores exactly zero.
    const Eigen::VectorXd ref = g.members.front().second.cast<double>();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& [tag, v] : g.members) {
      if (v.size() != d)
        throw ValidationError("group '" + g.key + "' members disagree on dimension");
      mean += v.cast<double>() - ref;
    }
    mean /= static_cast<double>(n);
    double score = 0.0;
    for (const auto& [tag, v] : g.members)
      score += ((v.cast<double>() - ref) - mean).squaredNorm();
    score /= static_cast<double>(n);
    scored.emplace_back(g.key, score);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.second < y.second; });
  return scored;
}

std::vector<EmbeddingGroup> group_embeddings(const DatasetManifest& manifest,
                                             const Checkpoint& checkpoint,
                                             const std::string& group_by,
                                             const std::string& tag_by,
                                             std::vector<std::string>* warnings) {
  auto field = [](const ManifestRecord& r, const std::string& name) -> std::string {
    if (name == "label") return r.label;
    if (name == "text") return r.text;
    if (name == "signed_lang") return r.signed_lang;
    if (name == "spoken_lang") return r.spoken_lang;
    if (name == "id") return r.id;
    throw ValidationError("unknown record field '" + name + "'");
  };

  Embedder embedder(checkpoint);
  std::map<std::string, EmbeddingGroup> groups;
  std::vector<std::optional<Eigen::VectorXf>> maybe(manifest.records.size());
  std::vector<std::string> errs(manifest.records.size());
  parallel_for(manifest.records.size(), [&](std::size_t i) {
    try {
      maybe[i] = embedder.embed_record(manifest, manifest.records[i]);
    } catch (const Error& e) {
      errs[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (!maybe[i]) {
      if (warnings) warnings->push_back(r.id + ": " + errs[i]);
      continue;
    }
    const std::string key = field(r, group_by);
    if (key.empty()) continue;
    auto& g = groups[key];
    g.key = key;
    g.members.emplace_back(field(r, tag_by), std::move(*maybe[i]));
  }

  std::vector<EmbeddingGroup> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

std::vector<std::string> export_embeddings(const Checkpoint& checkpoint,
                                           const DatasetManifest& manifest,
                                           const std::filesystem::path& out_path) {
  std::vector<const ManifestRecord*> ordered;
  for (const auto& r : manifest.records) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });

  Embedder embedder(checkpoint);
  std::vector<std::optional<Eigen::VectorXf>> maybe(ordered.size());
  std::vector<std::string> errs(ordered.size());
  parallel_for(ordered.size(), [&](std::size_t i) {
    try {
      maybe[i] = embedder.embed_record(manifest, *ordered[i]);
    } catch (const Error& e) {
      errs[i] = e.what();
    }
  });

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + out_path.string() + "' for writing");
  const Eigen::Index d =
      static_cast<Eigen::Index>(checkpoint.net.config().embed_dim);
  out << "id,label,spoken_lang,signed_lang";
  for (Eigen::Index j = 0; j < d; ++j) out << ",e" << j;
  out << '\n';

  std::vector<std::string> skipped;
  char buf[64];
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!maybe[i]) {
      skipped.push_back(ordered[i]->id + ": " + errs[i]);
      continue;
    }
    out << ordered[i]->id << ',' << ordered[i]->label << ',' << ordered[i]->spoken_lang
        << ',' << ordered[i]->signed_lang;
    for (Eigen::Index j = 0; j < d; ++j) {
      // %.9g round-trips float32 through text
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>((*maybe[i])(j)));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + out_path.string() + "'");
  return skipped;
}

}  // namespace signembed
