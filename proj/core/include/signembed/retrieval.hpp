#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "signembed/train.hpp"

namespace signembed {

// A query's full candidate ranking: descending score, ties broken by
// ascending candidate index (stable and platform-independent).
struct RankedList {
  std::string query_id;
  std::vector<std::pair<std::size_t, double>> ranked;  // (candidate index, score)
  std::set<std::size_t> relevant;
};

RankedList rank_candidates(const Eigen::VectorXf& query,
                           const std::vector<Eigen::VectorXf>& candidates,
                           bool cosine = false);

// |top-k ∩ relevant| / k. k beyond the candidate count is computed over the
// available candidates (callers may warn).
double precision_at_k(const RankedList& ranked, std::size_t k);

// |top-k ∩ relevant| / |relevant|. Throws on an empty relevance set; the
// aggregator excludes such queries with a warning.
double recall_at_k(const RankedList& ranked, std::size_t k);

// 1-based rank of the first relevant candidate.
std::size_t first_relevant_rank(const RankedList& ranked);

// Median of per-query first-relevant ranks; an even count averages the two
// middle values.
double median_rank(const std::vector<std::size_t>& first_ranks);

enum class Direction { TextToVideo, VideoToText };
std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct RetrievalReport {
  Direction direction = Direction::VideoToText;
  std::size_t queries = 0;
  std::size_t candidate_pool = 0;  // deduplicated prompt count for v2t
  std::map<std::size_t, double> precision;  // t2v
  std::map<std::size_t, double> recall;     // v2t
  double median = 0.0;
  std::vector<std::pair<std::string, std::size_t>> first_ranks;  // per query
  std::vector<std::string> skipped;  // unreadable pose files
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// Embeds a manifest split and evaluates retrieval.
//   t2v: queries are deduplicated prompts; every video sharing the prompt
//        is relevant; precision@k (plus median rank) is reported.
//   v2t: queries are videos, candidates are deduplicated prompts, exactly
//        one relevant prompt per video; recall@k and median rank.
RetrievalReport evaluate_retrieval(const Checkpoint& checkpoint,
                                   const DatasetManifest& manifest, Split split,
                                   Direction direction, const std::vector<std::size_t>& ks,
                                   bool flip_right_at_test = false);

}  // namespace signembed
