#include "signembed/retrieval.hpp"

#include <algorithm>
#include <cmath>

namespace signembed {

RankedList rank_candidates(const Eigen::VectorXf& query,
                           const std::vector<Eigen::VectorXf>& candidates, bool cosine) {
  if (candidates.empty()) throw ValidationError("rank_candidates: no candidates");
  auto unit = [&](const Eigen::VectorXf& v) {
    Eigen::VectorXd u = v.cast<double>();
    const double n = u.norm();
    if (cosine && n > 0.0) u /= n;
    return u;
  };
  const Eigen::VectorXd q = unit(query);
  RankedList out;
  out.ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].size() != query.size())
      throw ValidationError("rank_candidates: dimension mismatch");
    out.ranked.emplace_back(i, q.dot(unit(candidates[i])));
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

double precision_at_k(const RankedList& ranked, std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  const std::size_t take = std::min(k, ranked.ranked.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < take; ++i)
    if (ranked.relevant.count(ranked.ranked[i].first)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(k);
}

double recall_at_k(const RankedList& ranked, std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (ranked.relevant.empty())
    throw ValidationError("recall undefined for an empty relevance set");
  const std::size_t take = std::min(k, ranked.ranked.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < take; ++i)
    if (ranked.relevant.count(ranked.ranked[i].first)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(ranked.relevant.size());
}

std::size_t first_relevant_rank(const RankedList& ranked) {
  for (std::size_t i = 0; i < ranked.ranked.size(); ++i)
    if (ranked.relevant.count(ranked.ranked[i].first)) return i + 1;
  throw ValidationError("ranked list has no relevant candidate");
}

double median_rank(const std::vector<std::size_t>& first_ranks) {
  if (first_ranks.empty()) throw ValidationError("median of an empty rank list");
  std::vector<std::size_t> sorted = first_ranks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return static_cast<double>(sorted[n / 2]);
  return 0.5 * (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2]));
}

std::string to_string(Direction d) {
  return d == Direction::TextToVideo ? "t2v" : "v2t";
}

Direction direction_from_string(const std::string& s) {
  if (s == "t2v") return Direction::TextToVideo;
  if (s == "v2t") return Direction::VideoToText;
  throw ValidationError("unknown direction '" + s + "' (expected t2v or v2t)");
}

nlohmann::json RetrievalReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : precision) metrics["P@" + std::to_string(k)] = v;
  for (const auto& [k, v] : recall) metrics["R@" + std::to_string(k)] = v;
  metrics["MedianR"] = median;
  // Table-style "MedianR/total" notation
  char median_str[64];
  if (median == std::floor(median))
    std::snprintf(median_str, sizeof median_str, "%lld/%zu",
                  static_cast<long long>(median), candidate_pool);
  else
    std::snprintf(median_str, sizeof median_str, "%.1f/%zu", median, candidate_pool);
  return nlohmann::json{{"direction", to_string(direction)},
                        {"queries", queries},
                        {"candidate_pool", candidate_pool},
                        {"metrics", metrics},
                        {"median_over_pool", std::string(median_str)},
                        {"skipped", skipped},
                        {"warnings", warnings}};
}

RetrievalReport evaluate_retrieval(const Checkpoint& checkpoint,
                                   const DatasetManifest& manifest, Split split,
                                   Direction direction, const std::vector<std::size_t>& ks,
                                   bool flip_right_at_test) {
  auto records = manifest.split_records(split);
  if (records.empty()) throw ValidationError("split has no records");

  Embedder embedder(checkpoint, flip_right_at_test);

  RetrievalReport report;
  report.direction = direction;

  // Embed videos (skipping unreadable/over-length files) and deduplicate
  // prompts by rendered string.
  std::vector<const ManifestRecord*> kept;
  std::vector<Eigen::VectorXf> video_emb;
  {
    std::vector<std::optional<Eigen::VectorXf>> maybe(records.size());
    std::vector<std::string> errors(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
      try {
        maybe[i] = embedder.embed_record(manifest, *records[i]);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (maybe[i]) {
        kept.push_back(records[i]);
        video_emb.push_back(std::move(*maybe[i]));
      } else {
        report.skipped.push_back(records[i]->id + ": " + errors[i]);
      }
    }
  }
  if (kept.empty()) throw ValidationError("no usable examples in the split");

  std::vector<std::string> prompt_keys;         // unique rendered prompts
  std::map<std::string, std::size_t> prompt_of;  // render -> unique index
  std::vector<std::size_t> record_prompt(kept.size());
  std::vector<Prompt> prompts;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const Prompt p =
        build_prompt(kept[i]->text, kept[i]->spoken_lang, kept[i]->signed_lang);
    const std::string key = p.render();
    auto [it, inserted] = prompt_of.emplace(key, prompt_keys.size());
    if (inserted) {
      prompt_keys.push_back(key);
      prompts.push_back(p);
    }
    record_prompt[i] = it->second;
  }

  std::vector<Eigen::VectorXf> prompt_emb(prompts.size());
  parallel_for(prompts.size(), [&](std::size_t i) {
    prompt_emb[i] = embedder.embed_prompt(prompts[i]);
  });

  const bool cosine = checkpoint.net.config().cosine_similarity;
  std::vector<std::size_t> first_ranks;

  if (direction == Direction::VideoToText) {
    report.queries = kept.size();
    report.candidate_pool = prompts.size();
    std::vector<RankedList> lists(kept.size());
    parallel_for(kept.size(), [&](std::size_t i) {
      RankedList rl = rank_candidates(video_emb[i], prompt_emb, cosine);
      rl.query_id = kept[i]->id;
      rl.relevant = {record_prompt[i]};
      lists[i] = std::move(rl);
    });
    for (std::size_t k : ks) {
      double sum = 0.0;
      for (const auto& rl : lists) sum += recall_at_k(rl, k);
      report.recall[k] = sum / static_cast<double>(lists.size());
    }
    for (const auto& rl : lists) {
      const std::size_t r = first_relevant_rank(rl);
      first_ranks.push_back(r);
      report.first_ranks.emplace_back(rl.query_id, r);
    }
  } else {
    report.queries = prompts.size();
    report.candidate_pool = video_emb.size();
    std::vector<RankedList> lists(prompts.size());
    parallel_for(prompts.size(), [&](std::size_t q) {
      RankedList rl = rank_candidates(prompt_emb[q], video_emb, cosine);
      rl.query_id = prompt_keys[q];
      for (std::size_t i = 0; i < kept.size(); ++i)
        if (record_prompt[i] == q) rl.relevant.insert(i);
      lists[q] = std::move(rl);
    });
    for (std::size_t k : ks) {
      double sum = 0.0;
      for (const auto& rl : lists) sum += precision_at_k(rl, k);
      report.precision[k] = sum / static_cast<double>(lists.size());
      if (k > video_emb.size())
        report.warnings.push_back("P@" + std::to_string(k) +
                                  " computed with fewer candidates than k");
    }
    for (const auto& rl : lists) {
      const std::size_t r = first_relevant_rank(rl);
      first_ranks.push_back(r);
      report.first_ranks.emplace_back(rl.query_id, r);
    }
  }
  report.median = median_rank(first_ranks);
  return report;
}

}  // namespace signembed
