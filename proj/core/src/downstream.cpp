#include "signembed/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace signembed {

std::size_t SupportSet::total() const {
  std::size_t n = 0;
  for (const auto& [label, vecs] : by_class) n += vecs.size();
  return n;
}

void SupportSet::validate() const {
  if (by_class.empty()) throw ValidationError("support set is empty");
  for (const auto& [label, vecs] : by_class)
    if (vecs.empty())
      throw ValidationError("support class '" + label + "' has no examples");
}

SupportSet build_support(const DatasetManifest& manifest, const Checkpoint& checkpoint,
                         std::size_t shots, std::uint64_t seed,
                         std::vector<std::string>* warnings, bool flip_right_at_test) {
  if (shots < 1) throw ValidationError("shots must be >= 1");
  std::map<std::string, std::vector<const ManifestRecord*>> train_by_class;
  std::set<std::string> all_classes;
  for (const auto& r : manifest.records) {
    if (r.label.empty()) continue;
    all_classes.insert(r.label);
    if (r.split == Split::Train) train_by_class[r.label].push_back(&r);
  }
  if (train_by_class.empty())
    throw ValidationError("no labeled training examples for support sampling");
  for (const auto& c : all_classes) {
    if (!train_by_class.count(c) && warnings)
      warnings->push_back("class '" + c + "' absent from train split; omitted");
  }

  Embedder embedder(checkpoint, flip_right_at_test);
  SupportSet support;
  for (auto& [label, records] : train_by_class) {
    RandomSource rng(derive_seed(seed, fnv1a64(label)));
    std::vector<const ManifestRecord*> pool = records;
    rng.shuffle(pool);
    const std::size_t take = std::min(shots, pool.size());
    auto& out = support.by_class[label];
    for (std::size_t i = 0; i < take; ++i)
      out.push_back(embedder.embed_record(manifest, *pool[i]));
  }
  support.validate();
  return support;
}

namespace {

double cosine_sim(const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
  const Eigen::VectorXd ad = a.cast<double>(), bd = b.cast<double>();
  const double na = ad.norm(), nb = bd.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return ad.dot(bd) / (na * nb);
}

}  // namespace

std::vector<std::string> knn_ranked(const SupportSet& support,
                                    const Eigen::VectorXf& query, std::size_t k) {
  support.validate();
  const std::size_t total = support.total();
  if (k < 1 || k > total)
    throw ValidationError("k must be in [1, support size]");

  struct Entry {
    double sim;
    std::size_t order;  // insertion order, for deterministic ties
    const std::string* label;
  };
  std::vector<Entry> entries;
  entries.reserve(total);
  std::size_t order = 0;
  for (const auto& [label, vecs] : support.by_class)
    for (const auto& v : vecs) entries.push_back({cosine_sim(query, v), order++, &label});
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.order < b.order;
  });

  std::map<std::string, std::pair<std::size_t, double>> votes;  // label -> (count, simsum)
  for (std::size_t i = 0; i < k; ++i) {
    auto& v = votes[*entries[i].label];
    v.first += 1;
    v.second += entries[i].sim;
  }

  std::vector<std::string> classes;
  for (const auto& [label, vecs] : support.by_class) classes.push_back(label);
  std::stable_sort(classes.begin(), classes.end(),
                   [&](const std::string& a, const std::string& b) {
                     const auto va = votes.count(a) ? votes.at(a) : std::make_pair<std::size_t, double>(0, 0.0);
                     const auto vb = votes.count(b) ? votes.at(b) : std::make_pair<std::size_t, double>(0, 0.0);
                     if (va.first != vb.first) return va.first > vb.first;
                     if (va.second != vb.second) return va.second > vb.second;
                     return a < b;
                   });
  return classes;
}

std::string knn_classify(const SupportSet& support, const Eigen::VectorXf& query,
                         std::size_t k) {
  return knn_ranked(support, query, k).front();
}

double probe_objective(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       std::size_t classes, const Eigen::MatrixXd& w,
                       const Eigen::VectorXd& b, double l2_penalty, Eigen::MatrixXd* dw,
                       Eigen::VectorXd* db) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd logits = x * w;  // n x C
  logits.rowwise() += b.transpose();

  double ce = 0.0;
  Eigen::MatrixXd p(n, static_cast<Eigen::Index>(classes));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::VectorXd e = (logits.row(i).transpose().array() - m).exp();
    const double z = e.sum();
    p.row(i) = (e / z).transpose();
    ce += std::log(z) + m - logits(i, y[static_cast<std::size_t>(i)]);
  }
  ce /= static_cast<double>(n);
  const double obj = ce + 0.5 * l2_penalty * w.squaredNorm();

  if (dw || db) {
    Eigen::MatrixXd g = p;
    for (Eigen::Index i = 0; i < n; ++i) g(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    g /= static_cast<double>(n);
    if (dw) *dw = x.transpose() * g + l2_penalty * w;
    if (db) *db = g.colwise().sum().transpose();
  }
  return obj;
}

ProbeModel linear_probe_train(const std::vector<Eigen::VectorXf>& embeddings,
                              const std::vector<std::string>& labels, double l2_penalty,
                              double tol, std::size_t max_iterations,
                              ProbeTrainInfo* info) {
  if (embeddings.size() != labels.size() || embeddings.empty())
    throw ValidationError("probe needs matching non-empty embeddings and labels");

  std::vector<std::string> classes;
  {
    std::set<std::string> unique(labels.begin(), labels.end());
    classes.assign(unique.begin(), unique.end());
  }
  if (classes.size() < 2) throw ValidationError("probe needs at least 2 classes");
  std::map<std::string, int> class_index;
  for (std::size_t i = 0; i < classes.size(); ++i)
    class_index[classes[i]] = static_cast<int>(i);

  const Eigen::Index d = embeddings.front().size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(embeddings.size()), d);
  std::vector<int> y(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != d)
      throw ValidationError("probe embeddings disagree on dimension");
    if (!embeddings[i].allFinite())
      throw ValidationError("probe embeddings contain non-finite values");
    x.row(static_cast<Eigen::Index>(i)) = embeddings[i].cast<double>().transpose();
    y[i] = class_index[labels[i]];
  }

  const std::size_t cc = classes.size();
  const std::size_t dim = static_cast<std::size_t>(d) * cc + cc;
  auto unpack = [&](const Eigen::VectorXd& theta, Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    w = Eigen::Map<const Eigen::MatrixXd>(theta.data(), d, static_cast<Eigen::Index>(cc));
    b = theta.tail(static_cast<Eigen::Index>(cc));
  };
  auto eval = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
    unpack(theta, w, b);
    Eigen::MatrixXd dw;
    Eigen::VectorXd db;
    const double f =
        probe_objective(x, y, cc, w, b, l2_penalty, grad ? &dw : nullptr,
                        grad ? &db : nullptr);
    if (grad) {
      grad->resize(static_cast<Eigen::Index>(dim));
      Eigen::Map<Eigen::MatrixXd>(grad->data(), d, static_cast<Eigen::Index>(cc)) = dw;
      grad->tail(static_cast<Eigen::Index>(cc)) = db;
    }
    return f;
  };

  // L-BFGS (memory 10) with Armijo backtracking, deterministic from zero.
  const std::size_t memory = 10;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  Eigen::VectorXd grad;
  double f = eval(theta, &grad);
  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;
  std::size_t iter = 0;
  while (iter < max_iterations && grad.cwiseAbs().maxCoeff() >= tol) {
    // two-loop recursion
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& yv = y_hist.back();
      q *= s.dot(yv) / yv.dot(yv);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double dir_deriv = grad.dot(dir);
    if (dir_deriv >= 0) {  // not a descent direction: fall back
      dir = -grad;
      dir_deriv = grad.dot(dir);
    }

    double step = s_hist.empty() ? 1.0 / std::max(1.0, grad.norm()) : 1.0;
    Eigen::VectorXd theta_new;
    Eigen::VectorXd grad_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      theta_new = theta + step * dir;
      f_new = eval(theta_new, &grad_new);
      if (f_new <= f + 1e-4 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search stalled at numerical precision

    Eigen::VectorXd s = theta_new - theta;
    Eigen::VectorXd yv = grad_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
    theta = std::move(theta_new);
    grad = std::move(grad_new);
    f = f_new;
    ++iter;
  }

  ProbeModel probe;
  Eigen::VectorXd b;
  unpack(theta, probe.weights, b);
  probe.bias = b;
  probe.classes = classes;
  if (info) {
    info->objective = f;
    info->iterations = iter;
    info->grad_max_norm = grad.cwiseAbs().maxCoeff();
  }
  return probe;
}

std::vector<std::pair<std::string, double>> linear_probe_predict(
    const ProbeModel& probe, const Eigen::VectorXf& embedding) {
  if (embedding.size() != probe.weights.rows())
    throw ValidationError("probe dimension mismatch");
  const Eigen::VectorXd logits =
      probe.weights.transpose() * embedding.cast<double>() + probe.bias;
  std::vector<std::pair<std::string, double>> out;
  out.reserve(probe.classes.size());
  for (std::size_t c = 0; c < probe.classes.size(); ++c)
    out.emplace_back(probe.classes[c], logits(static_cast<Eigen::Index>(c)));
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

namespace {

std::vector<std::pair<std::string, double>> rank_prompts(
    const Checkpoint& checkpoint, const Eigen::VectorXf& video_embedding,
    const std::vector<std::pair<std::string, Prompt>>& named_prompts) {
  Embedder embedder(checkpoint);
  std::vector<Eigen::VectorXf> prompt_emb(named_prompts.size());
  parallel_for(named_prompts.size(), [&](std::size_t i) {
    prompt_emb[i] = embedder.embed_prompt(named_prompts[i].second);
  });
  RankedList rl =
      rank_candidates(video_embedding, prompt_emb, checkpoint.net.config().cosine_similarity);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(rl.ranked.size());
  for (const auto& [idx, score] : rl.ranked)
    out.emplace_back(named_prompts[idx].first, score);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, double>> zero_shot_classify(
    const Checkpoint& checkpoint, const Eigen::VectorXf& video_embedding,
    const std::vector<std::pair<std::string, Prompt>>& class_prompts) {
  if (class_prompts.size() < 2)
    throw ValidationError("zero-shot classification needs at least 2 classes");
  std::set<std::string> rendered;
  for (const auto& [cls, p] : class_prompts)
    if (!rendered.insert(p.render()).second)
      throw ValidationError("duplicate class prompt '" + p.render() + "'");
  return rank_prompts(checkpoint, video_embedding, class_prompts);
}

std::vector<std::pair<std::string, double>> identify_language(
    const Checkpoint& checkpoint, const Eigen::VectorXf& video_embedding,
    const std::vector<std::string>& language_tags, const std::string& spoken_tag) {
  if (language_tags.empty())
    throw ValidationError("language identification needs at least 1 tag");
  std::set<std::string> seen;
  std::vector<std::pair<std::string, Prompt>> prompts;
  for (const auto& tag : language_tags) {
    if (!seen.insert(tag).second)
      throw ValidationError("duplicate language tag '" + tag + "'");
    prompts.emplace_back(tag, build_prompt("", spoken_tag, tag));
  }
  return rank_prompts(checkpoint, video_embedding, prompts);
}

IslrMode islr_mode_from_string(const std::string& s) {
  if (s == "zero") return IslrMode::ZeroShot;
  if (s == "knn") return IslrMode::Knn;
  if (s == "probe") return IslrMode::Probe;
  throw ValidationError("unknown eval mode '" + s + "' (expected zero/knn/probe)");
}

std::string to_string(IslrMode m) {
  switch (m) {
    case IslrMode::ZeroShot: return "zero";
    case IslrMode::Knn: return "knn";
    case IslrMode::Probe: return "probe";
  }
  return "zero";
}

nlohmann::json IslrReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : recall) metrics["R@" + std::to_string(k)] = v;
  metrics["MedianR"] = median;
  return nlohmann::json{{"mode", mode},
                        {"queries", queries},
                        {"classes", classes},
                        {"metrics", metrics},
                        {"warnings", warnings}};
}

IslrReport evaluate_islr(const DatasetManifest& manifest, const Checkpoint& checkpoint,
                         const IslrOptions& options) {
  IslrReport report;
  report.mode = to_string(options.mode);

  // class prompt/tag sources: first train record per label
  std::map<std::string, const ManifestRecord*> class_record;
  for (const auto& r : manifest.records) {
    if (r.split != Split::Train || r.label.empty()) continue;
    class_record.emplace(r.label, &r);
  }
  if (class_record.size() < 2)
    throw ValidationError("ISLR evaluation needs at least 2 labeled train classes");
  report.classes = class_record.size();

  Embedder embedder(checkpoint, options.flip_right_at_test);

  auto test_records = manifest.split_records(Split::Test);
  std::vector<const ManifestRecord*> queries;
  std::vector<Eigen::VectorXf> query_emb;
  {
    std::vector<std::optional<Eigen::VectorXf>> maybe(test_records.size());
    std::vector<std::string> errs(test_records.size());
    parallel_for(test_records.size(), [&](std::size_t i) {
      if (test_records[i]->label.empty()) {
        errs[i] = "unlabeled";
        return;
      }
      if (!class_record.count(test_records[i]->label)) {
        errs[i] = "label not in train classes";
        return;
      }
      try {
        maybe[i] = embedder.embed_record(manifest, *test_records[i]);
      } catch (const Error& e) {
        errs[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < test_records.size(); ++i) {
      if (maybe[i]) {
        queries.push_back(test_records[i]);
        query_emb.push_back(std::move(*maybe[i]));
      } else {
        report.warnings.push_back(test_records[i]->id + ": " + errs[i]);
      }
    }
  }
  if (queries.empty()) throw ValidationError("no usable test examples");
  report.queries = queries.size();

  // rank classes per query under the chosen mode
  std::vector<std::vector<std::string>> rankings(queries.size());
  if (options.mode == IslrMode::ZeroShot) {
    std::vector<std::pair<std::string, Prompt>> prompts;
    for (const auto& [label, rec] : class_record) {
      const std::string text = rec->text.empty() ? label : rec->text;
      prompts.emplace_back(label,
                           build_prompt(text, rec->spoken_lang, rec->signed_lang));
    }
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto ranked = zero_shot_classify(checkpoint, query_emb[i], prompts);
      auto& out = rankings[i];
      out.reserve(ranked.size());
      for (const auto& [cls, score] : ranked) out.push_back(cls);
    }
  } else if (options.mode == IslrMode::Knn) {
    SupportSet support = build_support(manifest, checkpoint, options.shots, options.seed,
                                       &report.warnings, options.flip_right_at_test);
    const std::size_t k = std::min(options.knn_k, support.total());
    parallel_for(queries.size(), [&](std::size_t i) {
      rankings[i] = knn_ranked(support, query_emb[i], k);
    });
  } else {
    std::vector<Eigen::VectorXf> train_emb;
    std::vector<std::string> train_labels;
    auto train_records = manifest.split_records(Split::Train);
    std::vector<std::optional<Eigen::VectorXf>> maybe(train_records.size());
    parallel_for(train_records.size(), [&](std::size_t i) {
      if (train_records[i]->label.empty()) return;
      try {
        maybe[i] = embedder.embed_record(manifest, *train_records[i]);
      } catch (const Error&) {
      }
    });
    for (std::size_t i = 0; i < train_records.size(); ++i) {
      if (!maybe[i]) continue;
      train_emb.push_back(std::move(*maybe[i]));
      train_labels.push_back(train_records[i]->label);
    }
    ProbeModel probe =
        linear_probe_train(train_emb, train_labels, options.l2_penalty, options.probe_tol);
    parallel_for(queries.size(), [&](std::size_t i) {
      auto ranked = linear_probe_predict(probe, query_emb[i]);
      auto& out = rankings[i];
      out.reserve(ranked.size());
      for (const auto& [cls, score] : ranked) out.push_back(cls);
    });
  }

  std::vector<std::size_t> first_ranks;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& truth = queries[i]->label;
    std::size_t rank = rankings[i].size();
    for (std::size_t p = 0; p < rankings[i].size(); ++p)
      if (rankings[i][p] == truth) {
        rank = p + 1;
        break;
      }
    first_ranks.push_back(rank);
  }
  for (std::size_t k : options.ks) {
    std::size_t hit = 0;
    for (std::size_t r : first_ranks)
      if (r <= k) ++hit;
    report.recall[k] = static_cast<double>(hit) / static_cast<double>(first_ranks.size());
  }
  report.median = median_rank(first_ranks);
  return report;
}

}  // namespace signembed
