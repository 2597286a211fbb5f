#include "signembed/preprocess.hpp"

#include <cmath>

#include "signembed/common.hpp"
#include "signembed/pose_io.hpp"

namespace signembed {

void CorpusStats::save(const std::filesystem::path& path) const {
  PoseSequence seq;
  seq.layout = KeypointLayout("stats", {{"POINTS", keypoints}}, {}, {}, {});
  seq.fps = 1.0f;
  seq.frames = 2;
  seq.keypoints = keypoints;
  seq.coords.resize(2 * keypoints * 3);
  seq.confidence.assign(2 * keypoints, 1.0f);
  for (std::size_t i = 0; i < keypoints * 3; ++i) {
    seq.coords[i] = static_cast<float>(mean[i]);
    seq.coords[keypoints * 3 + i] = static_cast<float>(stddev[i]);
  }
  save_pose(seq, path);
}

CorpusStats CorpusStats::load(const std::filesystem::path& path) {
  PoseSequence seq = load_pose(path);
  if (seq.layout.name() != "stats" || seq.frames != 2)
    throw FormatError("'" + path.string() + "' is not a corpus stats file");
  CorpusStats st;
  st.keypoints = seq.keypoints;
  st.mean.resize(st.keypoints * 3);
  st.stddev.resize(st.keypoints * 3);
  for (std::size_t i = 0; i < st.keypoints * 3; ++i) {
    st.mean[i] = seq.coords[i];
    st.stddev[i] = seq.coords[st.keypoints * 3 + i];
  }
  return st;
}

PoseSequence normalize_pose(const PoseSequence& seq) {
  auto ls = seq.layout.anchor("left_shoulder");
  auto rs = seq.layout.anchor("right_shoulder");
  if (!ls || !rs)
    throw ValidationError("layout '" + seq.layout.name() + "' has no shoulder anchors");

  double width_sum = 0.0, mid_sum[3] = {0.0, 0.0, 0.0};
  std::size_t valid = 0;
  for (std::size_t f = 0; f < seq.frames; ++f) {
    if (seq.conf(f, *ls) <= 0.0f || seq.conf(f, *rs) <= 0.0f) continue;
    double d2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double l = seq.at(f, *ls, a), r = seq.at(f, *rs, a);
      d2 += (l - r) * (l - r);
      mid_sum[a] += 0.5 * (l + r);
    }
    width_sum += std::sqrt(d2);
    ++valid;
  }
  if (valid == 0)
    throw DegenerateInputError("no frame with both shoulders visible");
  const double w = width_sum / static_cast<double>(valid);
  if (w < 1e-8) throw DegenerateInputError("mean shoulder width below 1e-8");
  const double m[3] = {mid_sum[0] / valid, mid_sum[1] / valid, mid_sum[2] / valid};

  PoseSequence out = seq;
  for (std::size_t f = 0; f < out.frames; ++f)
    for (std::size_t k = 0; k < out.keypoints; ++k)
      for (std::size_t a = 0; a < 3; ++a)
        out.at(f, k, a) = static_cast<float>((seq.at(f, k, a) - m[a]) / w);
  return out;
}

PoseSequence reduce_and_reposition(const PoseSequence& seq) {
  struct HandRef {
    std::optional<std::size_t> body_wrist, hand_wrist;
    std::vector<std::size_t> hand_points;
  };
  const auto& layout = seq.layout;
  HandRef left{layout.anchor("left_wrist_body"), layout.anchor("left_wrist_hand"), {}};
  HandRef right{layout.anchor("right_wrist_body"), layout.anchor("right_wrist_hand"), {}};
  if ((!left.body_wrist || !left.hand_wrist) && (!right.body_wrist || !right.hand_wrist))
    throw ValidationError("layout '" + layout.name() +
                          "' lacks body/hand wrist anchors for repositioning");
  if (layout.has_tag("left_hand")) left.hand_points = layout.tag_indices("left_hand");
  if (layout.has_tag("right_hand")) right.hand_points = layout.tag_indices("right_hand");

  PoseSequence out = seq;
  for (const HandRef& h : {left, right}) {
    if (!h.body_wrist || !h.hand_wrist || h.hand_points.empty()) continue;
    for (std::size_t f = 0; f < seq.frames; ++f) {
      if (seq.conf(f, *h.body_wrist) <= 0.0f) continue;
      bool any_confident = false;
      for (std::size_t k : h.hand_points)
        if (seq.conf(f, k) > 0.0f) { any_confident = true; break; }
      if (!any_confident) continue;
      double offset[3];
      for (std::size_t a = 0; a < 3; ++a)
        offset[a] = static_cast<double>(seq.at(f, *h.body_wrist, a)) -
                    static_cast<double>(seq.at(f, *h.hand_wrist, a));
      for (std::size_t k : h.hand_points)
        for (std::size_t a = 0; a < 3; ++a)
          out.at(f, k, a) = static_cast<float>(seq.at(f, k, a) + offset[a]);
    }
  }

  const auto kept = reduction_kept_indices(layout);
  if (kept.size() == layout.total()) {
    out.layout = layout;  // nothing to drop; keep the name stable
    return out;
  }
  KeypointLayout reduced = layout.subset(kept, layout.name() + "|reduced");
  PoseSequence shrunk;
  shrunk.layout = std::move(reduced);
  shrunk.fps = out.fps;
  shrunk.frames = out.frames;
  shrunk.keypoints = kept.size();
  shrunk.coords.resize(out.frames * kept.size() * 3);
  shrunk.confidence.resize(out.frames * kept.size());
  for (std::size_t f = 0; f < out.frames; ++f)
    for (std::size_t n = 0; n < kept.size(); ++n) {
      for (std::size_t a = 0; a < 3; ++a) shrunk.at(f, n, a) = out.at(f, kept[n], a);
      shrunk.conf(f, n) = out.conf(f, kept[n]);
    }
  return shrunk;
}

CorpusStats compute_corpus_stats(const std::vector<PoseSequence>& train_sequences) {
  if (train_sequences.empty())
    throw ValidationError("corpus stats need at least one training sequence");
  const std::size_t kp = train_sequences.front().keypoints;
  for (const auto& s : train_sequences)
    if (s.keypoints != kp)
      throw ValidationError("corpus sequences disagree on keypoint count");

  std::vector<double> sum(kp * 3, 0.0), sumsq(kp * 3, 0.0);
  std::vector<std::size_t> count(kp, 0);
  for (const auto& s : train_sequences) {
    for (std::size_t f = 0; f < s.frames; ++f)
      for (std::size_t k = 0; k < kp; ++k) {
        if (s.conf(f, k) <= 0.0f) continue;
        ++count[k];
        for (std::size_t a = 0; a < 3; ++a) {
          const double v = s.at(f, k, a);
          sum[k * 3 + a] += v;
          sumsq[k * 3 + a] += v * v;
        }
      }
  }

  CorpusStats st;
  st.keypoints = kp;
  st.mean.assign(kp * 3, 0.0);
  st.stddev.assign(kp * 3, 1.0);
  for (std::size_t k = 0; k < kp; ++k) {
    if (count[k] == 0) continue;  // documented fallback: mean 0, std 1
    const double n = static_cast<double>(count[k]);
    for (std::size_t a = 0; a < 3; ++a) {
      const double m = sum[k * 3 + a] / n;
      double var = sumsq[k * 3 + a] / n - m * m;
      if (var < 0.0) var = 0.0;
      st.mean[k * 3 + a] = m;
      st.stddev[k * 3 + a] = std::max(std::sqrt(var), CorpusStats::kStdFloor);
    }
  }
  return st;
}

CorpusStats compute_corpus_stats(
    const DatasetManifest& manifest,
    const std::function<PoseSequence(const PoseSequence&)>& pre) {
  auto train = manifest.split_records(Split::Train);
  if (train.empty()) throw ValidationError("manifest train split is empty");
  std::vector<PoseSequence> seqs;
  seqs.reserve(train.size());
  for (const auto* r : train) {
    PoseSequence s = load_pose(manifest.resolve_path(*r));
    seqs.push_back(pre ? pre(s) : std::move(s));
  }
  return compute_corpus_stats(seqs);
}

PoseSequence standardize(const PoseSequence& seq, const CorpusStats& stats) {
  if (stats.keypoints != seq.keypoints)
    throw ValidationError("corpus stats shape does not match sequence layout");
  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t k = 0; k < seq.keypoints; ++k) {
      if (seq.conf(f, k) <= 0.0f) {
        for (std::size_t a = 0; a < 3; ++a) out.at(f, k, a) = 0.0f;
        continue;
      }
      for (std::size_t a = 0; a < 3; ++a)
        out.at(f, k, a) = static_cast<float>(
            (seq.at(f, k, a) - stats.mean_at(k, a)) / stats.std_at(k, a));
    }
  return out;
}

PoseSequence anonymize(const PoseSequence& seq, const CorpusStats& stats) {
  if (stats.keypoints != seq.keypoints)
    throw ValidationError("corpus stats shape does not match sequence layout");
  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t k = 0; k < seq.keypoints; ++k)
      for (std::size_t a = 0; a < 3; ++a) {
        // (x - x0) + mean: frame 0 lands on the mean pose exactly.
        const double moved = (static_cast<double>(seq.at(f, k, a)) -
                              static_cast<double>(seq.at(0, k, a))) +
                             stats.mean_at(k, a);
        out.at(f, k, a) = static_cast<float>(moved);
      }
  return out;
}

PoseSequence mirror_pose(const PoseSequence& seq) {
  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t k = 0; k < seq.keypoints; ++k)
      out.at(f, k, 0) = -seq.at(f, k, 0);
  for (const auto& [a, b] : seq.layout.left_right_pairs()) {
    for (std::size_t f = 0; f < seq.frames; ++f) {
      for (std::size_t ax = 0; ax < 3; ++ax)
        std::swap(out.at(f, a, ax), out.at(f, b, ax));
      std::swap(out.conf(f, a), out.conf(f, b));
    }
  }
  return out;
}

PoseSequence flip_to_right_handed(const PoseSequence& seq) {
  const auto& layout = seq.layout;
  if (!layout.has_tag("right_hand") || !layout.has_tag("left_hand")) return seq;
  auto any_confident = [&](const std::vector<std::size_t>& pts) {
    for (std::size_t f = 0; f < seq.frames; ++f)
      for (std::size_t k : pts)
        if (seq.conf(f, k) > 0.0f) return true;
    return false;
  };
  const bool right_present = any_confident(layout.tag_indices("right_hand"));
  const bool left_present = any_confident(layout.tag_indices("left_hand"));
  if (right_present || !left_present) return seq;
  return mirror_pose(seq);
}

std::string to_string(PreprocessStep s) {
  switch (s) {
    case PreprocessStep::Normalize: return "normalize";
    case PreprocessStep::Reduce: return "reduce";
    case PreprocessStep::Standardize: return "standardize";
    case PreprocessStep::Anonymize: return "anonymize";
    case PreprocessStep::FlipRight: return "flip_right";
    case PreprocessStep::Select: return "select";
  }
  return "normalize";
}

PreprocessStep preprocess_step_from_string(const std::string& s) {
  if (s == "normalize") return PreprocessStep::Normalize;
  if (s == "reduce") return PreprocessStep::Reduce;
  if (s == "standardize") return PreprocessStep::Standardize;
  if (s == "anonymize") return PreprocessStep::Anonymize;
  if (s == "flip_right" || s == "flip-right") return PreprocessStep::FlipRight;
  if (s == "select") return PreprocessStep::Select;
  throw ValidationError("unknown preprocess step '" + s + "'");
}

std::string PipelineStep::to_string() const {
  if (kind == PreprocessStep::Select) return "select:" + arg;
  return signembed::to_string(kind);
}

PipelineStep PipelineStep::parse(const std::string& s) {
  PipelineStep step;
  if (s.rfind("select:", 0) == 0) {
    step.kind = PreprocessStep::Select;
    step.arg = s.substr(7);
    if (step.arg.empty()) throw ValidationError("select step needs a selector expression");
  } else {
    step.kind = preprocess_step_from_string(s);
  }
  return step;
}

bool PreprocessPipeline::needs_stats() const {
  for (const auto& s : steps)
    if (s.kind == PreprocessStep::Standardize || s.kind == PreprocessStep::Anonymize)
      return true;
  return false;
}

PreprocessPipeline PreprocessPipeline::head_before_stats() const {
  PreprocessPipeline out;
  for (const auto& s : steps) {
    if (s.kind == PreprocessStep::Standardize || s.kind == PreprocessStep::Anonymize)
      break;
    out.steps.push_back(s);
  }
  return out;
}

PoseSequence PreprocessPipeline::apply(const PoseSequence& seq,
                                       const CorpusStats* stats) const {
  PoseSequence cur = seq;
  for (const auto& s : steps) {
    switch (s.kind) {
      case PreprocessStep::Normalize: cur = normalize_pose(cur); break;
      case PreprocessStep::Reduce: cur = reduce_and_reposition(cur); break;
      case PreprocessStep::Standardize:
        if (!stats) throw ValidationError("standardize step requires corpus stats");
        cur = standardize(cur, *stats);
        break;
      case PreprocessStep::Anonymize:
        if (!stats) throw ValidationError("anonymize step requires corpus stats");
        cur = anonymize(cur, *stats);
        break;
      case PreprocessStep::FlipRight: cur = flip_to_right_handed(cur); break;
      case PreprocessStep::Select: cur = select_components(cur, s.arg); break;
    }
  }
  return cur;
}

PreprocessPipeline PreprocessPipeline::parse(const std::vector<std::string>& step_strings,
                                             const std::string& stats_path) {
  PreprocessPipeline p;
  for (const auto& s : step_strings) p.steps.push_back(PipelineStep::parse(s));
  p.stats_path = stats_path;
  return p;
}

}  // namespace signembed
