#pragma once

#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signembed/train.hpp"

namespace signembed {

// Embeddings of one concept/class across languages or signers.
struct EmbeddingGroup {
  std::string key;
  std::vector<std::pair<std::string, Eigen::VectorXf>> members;  // (tag, embedding)
};

Eigen::VectorXf centroid(const EmbeddingGroup& group);

// Candidates ranked by cosine similarity to a - b + c; candidates whose key
// is in `exclude` (typically the a/b/c keys) are dropped first.
std::vector<std::pair<std::string, double>> analogy(
    const Eigen::VectorXf& a, const Eigen::VectorXf& b, const Eigen::VectorXf& c,
    const std::vector<std::pair<std::string, Eigen::VectorXf>>& candidates,
    const std::set<std::string>& exclude = {});

// Total dispersion per group: the trace of the member-embedding covariance
// (population convention), i.e. the summed per-dimension variance. Sorted
// ascending, stable on ties; the lowest score is the most iconic. Groups
// with fewer than 2 members are excluded with a warning.
std::vector<std::pair<std::string, double>> iconicity_rank(
    const std::vector<EmbeddingGroup>& groups,
    std::vector<std::string>* warnings = nullptr);

// Groups a manifest's embeddings by a record field ("label" or "text"),
// tagging members by another ("signed_lang", "spoken_lang" or "id").
std::vector<EmbeddingGroup> group_embeddings(const DatasetManifest& manifest,
                                             const Checkpoint& checkpoint,
                                             const std::string& group_by,
                                             const std::string& tag_by,
                                             std::vector<std::string>* warnings = nullptr);

// CSV export: id,label,spoken_lang,signed_lang,e0..e{d-1}, ordered by id.
// Unreadable files are skipped and returned.
std::vector<std::string> export_embeddings(const Checkpoint& checkpoint,
                                           const DatasetManifest& manifest,
                                           const std::filesystem::path& out_path);

}  // namespace signembed
