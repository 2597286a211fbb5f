#include "cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "signembed/analysis.hpp"
#include "signembed/downstream.hpp"
#include "signembed/pose_io.hpp"
#include "signembed/retrieval.hpp"
#include "signembed/synthgen.hpp"
#include "signembed/train.hpp"

namespace signembed::cli {

using nlohmann::json;

namespace {

enum LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
  bool json_errors = false;
  std::string log_level = "info";

  int level() const {
    if (log_level == "debug") return kDebug;
    if (log_level == "info") return kInfo;
    if (log_level == "warn") return kWarn;
    return kError;
  }
};

void log_line(const GlobalOptions& g, int level, const std::string& msg) {
  if (level >= g.level()) std::cerr << msg << '\n';
}

void print_resolved_config(const GlobalOptions& g, const std::string& command,
                           const json& resolved) {
  json j = {{"command", command}, {"config", resolved}};
  if (g.seed_set) j["seed"] = g.seed;
  j["deterministic"] = g.deterministic;
  log_line(g, kInfo, "resolved config: " + j.dump());
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + std::string(e.what()));
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<std::size_t> parse_ks(const std::string& csv) {
  std::vector<std::size_t> ks;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok =
        csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) ks.push_back(static_cast<std::size_t>(std::stoull(tok)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (ks.empty()) throw ValidationError("--k needs at least one value");
  return ks;
}

std::vector<std::string> parse_tags(const std::string& csv) {
  std::vector<std::string> tags;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok =
        csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) tags.push_back(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return tags;
}

// Pipeline step flags in the order they were typed.
PreprocessPipeline pipeline_from_argv(const std::vector<std::string>& args) {
  PreprocessPipeline p;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto value_of = [&](const std::string& flag) -> std::string {
      if (a.rfind(flag + "=", 0) == 0) return a.substr(flag.size() + 1);
      if (a == flag && i + 1 < args.size()) return args[i + 1];
      throw ValidationError(flag + " needs a value");
    };
    if (a == "--normalize") {
      p.steps.push_back({PreprocessStep::Normalize, ""});
    } else if (a == "--reduce") {
      p.steps.push_back({PreprocessStep::Reduce, ""});
    } else if (a == "--anonymize") {
      p.steps.push_back({PreprocessStep::Anonymize, ""});
    } else if (a == "--flip-right") {
      p.steps.push_back({PreprocessStep::FlipRight, ""});
    } else if (a == "--standardize" || a.rfind("--standardize=", 0) == 0) {
      p.steps.push_back({PreprocessStep::Standardize, ""});
      p.stats_path = value_of("--standardize");
    } else if (a == "--select" || a.rfind("--select=", 0) == 0) {
      p.steps.push_back({PreprocessStep::Select, value_of("--select")});
    }
  }
  return p;
}

json pipeline_json(const PreprocessPipeline& p) {
  json steps = json::array();
  for (const auto& s : p.steps) steps.push_back(s.to_string());
  return json{{"steps", steps}, {"stats_path", p.stats_path}};
}

int run_synth(const GlobalOptions& g, const std::string& config_path,
              const std::string& out_dir, const std::string& report_path) {
  SynthConfig config = SynthConfig::from_json(load_json_file(config_path));
  if (g.seed_set) config.seed = g.seed;
  print_resolved_config(g, "synth", config.to_json());
  DatasetManifest manifest = generate_dataset(config, out_dir);
  std::map<std::string, std::size_t> per_split;
  for (const auto& r : manifest.records) ++per_split[to_string(r.split)];
  json report = {{"examples", manifest.records.size()},
                 {"classes", config.classes},
                 {"languages", config.languages},
                 {"splits", per_split},
                 {"manifest", (std::filesystem::path(out_dir) / "manifest.jsonl").string()}};
  if (!report_path.empty()) write_json_file(report, report_path);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_preprocess(const GlobalOptions& g, const std::vector<std::string>& raw_args,
                   const std::string& in_path, const std::string& out_path,
                   const std::string& manifest_path, const std::string& out_dir,
                   const std::string& fit_stats_path) {
  PreprocessPipeline pipeline = pipeline_from_argv(raw_args);
  print_resolved_config(g, "preprocess", pipeline_json(pipeline));

  std::optional<CorpusStats> stats;
  if (!pipeline.stats_path.empty() && fit_stats_path.empty())
    stats = CorpusStats::load(pipeline.stats_path);

  if (!fit_stats_path.empty()) {
    if (manifest_path.empty())
      throw ValidationError("--fit-stats requires --manifest");
    DatasetManifest manifest = load_manifest(manifest_path);
    CorpusStats fitted = compute_corpus_stats(manifest, [&](const PoseSequence& s) {
      return pipeline.apply(s, nullptr);
    });
    fitted.save(fit_stats_path);
    log_line(g, kInfo, "wrote corpus stats to " + fit_stats_path);
    return 0;
  }

  if (!in_path.empty()) {
    if (out_path.empty()) throw ValidationError("--in requires --out");
    PoseSequence seq = load_pose(in_path);
    save_pose(pipeline.apply(seq, stats ? &*stats : nullptr), out_path);
    log_line(g, kInfo, "wrote " + out_path);
    return 0;
  }

  if (!manifest_path.empty()) {
    if (out_dir.empty()) throw ValidationError("--manifest mode requires --out-dir");
    DatasetManifest manifest = load_manifest(manifest_path);
    std::filesystem::create_directories(std::filesystem::path(out_dir) / "poses");
    DatasetManifest out = manifest;
    out.base_dir = out_dir;
    parallel_for(manifest.records.size(), [&](std::size_t i) {
      const auto& r = manifest.records[i];
      PoseSequence seq = load_pose(manifest.resolve_path(r));
      const std::string rel = "poses/" + r.id + ".spse";
      save_pose(pipeline.apply(seq, stats ? &*stats : nullptr),
                std::filesystem::path(out_dir) / rel);
      out.records[i].pose_path = rel;
    });
    save_manifest(out, std::filesystem::path(out_dir) / "manifest.jsonl");
    log_line(g, kInfo, "wrote " + (std::filesystem::path(out_dir) / "manifest.jsonl").string());
    return 0;
  }

  throw ValidationError("preprocess needs --in/--out, --manifest/--out-dir, or --fit-stats");
}

int run_vocab_build(const GlobalOptions& g, const std::string& manifest_path,
                    std::size_t min_count, const std::string& out_path) {
  print_resolved_config(
      g, "vocab build",
      json{{"manifest", manifest_path}, {"min_count", min_count}, {"out", out_path}});
  DatasetManifest manifest = load_manifest(manifest_path, false);
  Vocabulary vocab = build_vocab(manifest, min_count);
  vocab.save(out_path);
  std::cout << json{{"tokens", vocab.size()}, {"out", out_path}}.dump(2) << '\n';
  return 0;
}

int run_train(const GlobalOptions& g, const std::string& config_path,
              const std::string& manifest_path, const std::string& out_dir,
              const std::string& vocab_path) {
  json config = load_json_file(config_path);
  nn::ModelConfig model_cfg;
  if (config.contains("model")) {
    // allow sparse configs: fill defaults, then overwrite from file
    json defaults = model_cfg.to_json();
    defaults.merge_patch(config["model"]);
    // input_dim/vocab_size are derived during training when 0
    if (!defaults.contains("input_dim") || defaults["input_dim"].is_null())
      defaults["input_dim"] = 0;
    defaults["input_dim"] = defaults.value("input_dim", 0);
    defaults["vocab_size"] = std::max<std::size_t>(3, defaults.value("vocab_size", 3));
    model_cfg = nn::ModelConfig::from_json(defaults);
  }
  TrainConfig train_cfg =
      config.contains("train") ? TrainConfig::from_json(config["train"]) : TrainConfig{};
  if (g.seed_set) train_cfg.seed = g.seed;
  PreprocessPipeline pipeline;
  if (config.contains("preprocess")) {
    std::vector<std::string> steps;
    for (const auto& s : config["preprocess"].value("steps", json::array()))
      steps.push_back(s.get<std::string>());
    pipeline = PreprocessPipeline::parse(
        steps, config["preprocess"].value("stats_path", std::string()));
  }
  print_resolved_config(g, "train",
                        json{{"model", model_cfg.to_json()},
                             {"train", train_cfg.to_json()},
                             {"preprocess", pipeline_json(pipeline)},
                             {"manifest", manifest_path},
                             {"out", out_dir}});

  DatasetManifest manifest = load_manifest(manifest_path);
  std::optional<Vocabulary> vocab;
  if (!vocab_path.empty()) vocab = Vocabulary::load(vocab_path);

  std::filesystem::create_directories(out_dir);
  std::ofstream metrics_log(std::filesystem::path(out_dir) / "metrics.jsonl",
                            std::ios::trunc);
  TrainResult result = train_model(manifest, pipeline, model_cfg, train_cfg,
                                   vocab ? &*vocab : nullptr, &metrics_log);
  if (result.excluded_too_long > 0)
    log_line(g, kWarn,
             std::to_string(result.excluded_too_long) +
                 " sequences over max_video_len were excluded");

  const auto ckpt_path = std::filesystem::path(out_dir) / "checkpoint.spck";
  save_checkpoint(result.checkpoint, ckpt_path);
  result.checkpoint.vocab.save(std::filesystem::path(out_dir) / "vocab.json");
  json summary = {{"checkpoint", ckpt_path.string()},
                  {"best_epoch", result.checkpoint.best_epoch},
                  {"valid_loss", result.checkpoint.valid_loss},
                  {"epochs", result.metrics.size()},
                  {"excluded_too_long", result.excluded_too_long}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_embed(const GlobalOptions& g, const std::string& checkpoint_path,
              const std::string& manifest_path, const std::string& out_path) {
  print_resolved_config(g, "embed",
                        json{{"checkpoint", checkpoint_path},
                             {"manifest", manifest_path},
                             {"out", out_path}});
  Checkpoint cp = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_manifest(manifest_path);
  auto skipped = export_embeddings(cp, manifest, out_path);
  for (const auto& s : skipped) log_line(g, kWarn, "skipped " + s);
  std::cout << json{{"out", out_path}, {"skipped", skipped.size()}}.dump(2) << '\n';
  return 0;
}

int run_retrieve(const GlobalOptions& g, const std::string& checkpoint_path,
                 const std::string& manifest_path, const std::string& split,
                 const std::string& direction, const std::string& ks_csv,
                 const std::string& report_path, const std::string& per_query_csv,
                 bool flip_right) {
  print_resolved_config(g, "retrieve",
                        json{{"checkpoint", checkpoint_path},
                             {"manifest", manifest_path},
                             {"split", split},
                             {"direction", direction},
                             {"k", ks_csv},
                             {"flip_right", flip_right}});
  Checkpoint cp = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_manifest(manifest_path, false);
  RetrievalReport report =
      evaluate_retrieval(cp, manifest, split_from_string(split),
                         direction_from_string(direction), parse_ks(ks_csv), flip_right);
  const json j = report.to_json();
  if (!report_path.empty()) write_json_file(j, report_path);
  if (!per_query_csv.empty()) {
    std::ofstream csv(per_query_csv, std::ios::trunc);
    if (!csv) throw IoError("cannot open '" + per_query_csv + "'");
    csv << "query,first_correct_rank\n";
    for (const auto& [id, rank] : report.first_ranks) csv << id << ',' << rank << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_eval_islr(const GlobalOptions& g, const std::string& checkpoint_path,
                  const std::string& manifest_path, const std::string& mode,
                  std::size_t shots, std::size_t k, const std::string& report_path,
                  bool flip_right, bool gloss_preprocess) {
  print_resolved_config(g, "eval-islr",
                        json{{"checkpoint", checkpoint_path},
                             {"manifest", manifest_path},
                             {"mode", mode},
                             {"shots", shots},
                             {"k", k},
                             {"flip_right", flip_right},
                             {"gloss_preprocess", gloss_preprocess}});
  Checkpoint cp = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_manifest(manifest_path, false);
  if (gloss_preprocess) manifest = filter_by_known_labels(manifest, cp.vocab);
  IslrOptions options;
  options.mode = islr_mode_from_string(mode);
  options.shots = shots;
  options.knn_k = k;
  options.seed = g.seed_set ? g.seed : cp.train_config.seed;
  options.flip_right_at_test = flip_right;
  IslrReport report = evaluate_islr(manifest, cp, options);
  const json j = report.to_json();
  if (!report_path.empty()) write_json_file(j, report_path);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_identify_language(const GlobalOptions& g, const std::string& checkpoint_path,
                          const std::string& manifest_path, const std::string& split,
                          const std::string& tags_csv, const std::string& report_path) {
  print_resolved_config(g, "identify-language",
                        json{{"checkpoint", checkpoint_path},
                             {"manifest", manifest_path},
                             {"split", split},
                             {"tags", tags_csv}});
  Checkpoint cp = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_manifest(manifest_path, false);
  std::vector<std::string> tags = parse_tags(tags_csv);
  if (tags.empty()) {
    std::set<std::string> seen;
    for (const auto& r : manifest.records) seen.insert(r.signed_lang);
    tags.assign(seen.begin(), seen.end());
  }
  if (tags.size() < 2)
    throw ValidationError("identify-language needs at least 2 candidate tags");

  Embedder embedder(cp);
  auto records = manifest.split_records(split_from_string(split));
  if (records.empty()) throw ValidationError("split has no records");
  std::size_t correct = 0, total = 0;
  std::vector<std::string> warnings;
  for (const auto* r : records) {
    Eigen::VectorXf emb;
    try {
      emb = embedder.embed_record(manifest, *r);
    } catch (const Error& e) {
      warnings.push_back(r->id + ": " + e.what());
      continue;
    }
    auto ranked = identify_language(cp, emb, tags);
    if (ranked.front().first == r->signed_lang) ++correct;
    ++total;
  }
  if (total == 0) throw ValidationError("no usable examples in the split");
  json report = {{"tags", tags},
                 {"queries", total},
                 {"accuracy", static_cast<double>(correct) / static_cast<double>(total)},
                 {"warnings", warnings}};
  if (!report_path.empty()) write_json_file(report, report_path);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_analyze_iconicity(const GlobalOptions& g, const std::string& checkpoint_path,
                          const std::string& manifest_path, const std::string& group_by,
                          const std::string& tag_by, const std::string& report_path) {
  print_resolved_config(g, "analyze iconicity",
                        json{{"checkpoint", checkpoint_path},
                             {"manifest", manifest_path},
                             {"group_by", group_by},
                             {"tag_by", tag_by}});
  Checkpoint cp = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_manifest(manifest_path, false);
  std::vector<std::string> warnings;
  auto groups = group_embeddings(manifest, cp, group_by, tag_by, &warnings);
  auto ranking = iconicity_rank(groups, &warnings);
  json items = json::array();
  for (const auto& [key, score] : ranking)
    items.push_back({{"key", key}, {"score", score}});
  json report = {{"ranking", items}, {"groups", groups.size()}, {"warnings", warnings}};
  if (!report_path.empty()) write_json_file(report, report_path);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_analyze_analogy(const GlobalOptions& g, const std::string& checkpoint_path,
                        const std::string& manifest_path, const std::string& a,
                        const std::string& b, const std::string& c,
                        const std::string& report_path) {
  print_resolved_config(g, "analyze analogy",
                        json{{"checkpoint", checkpoint_path},
                             {"manifest", manifest_path},
                             {"a", a},
                             {"b", b},
                             {"c", c}});
  Checkpoint cp = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_manifest(manifest_path, false);
  std::vector<std::string> warnings;
  auto groups = group_embeddings(manifest, cp, "label", "id", &warnings);

  std::map<std::string, Eigen::VectorXf> centroids;
  for (const auto& gr : groups) centroids[gr.key] = centroid(gr);
  for (const auto& key : {a, b, c})
    if (!centroids.count(key))
      throw ValidationError("no embeddings for analogy term '" + key + "'");

  std::vector<std::pair<std::string, Eigen::VectorXf>> candidates(centroids.begin(),
                                                                  centroids.end());
  auto ranked = analogy(centroids[a], centroids[b], centroids[c], candidates, {a, b, c});
  json items = json::array();
  for (const auto& [key, score] : ranked) items.push_back({{"key", key}, {"score", score}});
  json report = {
      {"a", a}, {"b", b}, {"c", c}, {"ranking", items}, {"warnings", warnings}};
  if (!report_path.empty()) write_json_file(report, report_path);
  std::cout << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  GlobalOptions g;

  CLI::App app{"signembed: sign-language pose / text contrastive embedding toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough(false);

  app.add_option("--seed", g.seed, "Override the configured random seed")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_flag("--deterministic", g.deterministic,
               "Single-threaded reductions for bit-stable output");
  app.add_option("--log-level", g.log_level, "debug|info|warn|error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
  app.add_flag("--json-errors", g.json_errors, "Emit errors as JSON on stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic pose dataset");
  std::string synth_config, synth_out, synth_report;
  synth->add_option("--config", synth_config, "SynthConfig JSON file")->required();
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--report", synth_report, "Write a JSON summary here");

  // preprocess
  auto* prep = app.add_subcommand(
      "preprocess", "Apply pose preprocessing steps (in the order the flags are given)");
  std::string prep_in, prep_out, prep_manifest, prep_out_dir, prep_fit_stats;
  std::string prep_stats_value, prep_select_value;
  prep->add_option("--in", prep_in, "Input pose file");
  prep->add_option("--out", prep_out, "Output pose file");
  prep->add_option("--manifest", prep_manifest, "Process every pose in this manifest");
  prep->add_option("--out-dir", prep_out_dir, "Output directory for --manifest mode");
  prep->add_option("--fit-stats", prep_fit_stats,
                   "Fit corpus stats on the manifest's train split and write them here");
  prep->add_flag("--normalize", "Shoulder-width normalization");
  prep->add_flag("--reduce", "Keypoint reduction & wrist repositioning");
  prep->add_option("--standardize", prep_stats_value, "Standardize with this stats file");
  prep->add_flag("--anonymize", "First-frame appearance removal");
  prep->add_flag("--flip-right", "Mirror when only the left hand is present");
  prep->add_option("--select", prep_select_value,
                   "Keep keypoints matching a selector expression (e.g. all-legs)");

  // vocab build
  auto* vocab = app.add_subcommand("vocab", "Vocabulary utilities");
  auto* vocab_build = vocab->add_subcommand("build", "Build a vocabulary from a manifest");
  std::string vocab_manifest, vocab_out;
  std::size_t vocab_min_count = 1;
  vocab_build->add_option("--manifest", vocab_manifest, "Dataset manifest")->required();
  vocab_build->add_option("--min-count", vocab_min_count, "Minimum word frequency");
  vocab_build->add_option("--out", vocab_out, "Output vocabulary JSON")->required();

  // train
  auto* train = app.add_subcommand("train", "Contrastive training");
  std::string train_config, train_manifest, train_out, train_vocab;
  train->add_option("--config", train_config, "Training config JSON")->required();
  train->add_option("--manifest", train_manifest, "Dataset manifest")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--vocab", train_vocab, "Use this vocabulary instead of building one");

  // embed
  auto* embed = app.add_subcommand("embed", "Export embeddings as CSV");
  std::string embed_ckpt, embed_manifest, embed_out;
  embed->add_option("--checkpoint", embed_ckpt, "Checkpoint file")->required();
  embed->add_option("--manifest", embed_manifest, "Dataset manifest")->required();
  embed->add_option("--out", embed_out, "Output CSV")->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Retrieval evaluation");
  std::string ret_ckpt, ret_manifest, ret_split = "test", ret_dir = "v2t";
  std::string ret_ks = "1,5,10", ret_report, ret_csv;
  bool ret_flip = false;
  retrieve->add_option("--checkpoint", ret_ckpt, "Checkpoint file")->required();
  retrieve->add_option("--manifest", ret_manifest, "Dataset manifest")->required();
  retrieve->add_option("--split", ret_split, "train|valid|test");
  retrieve->add_option("--direction", ret_dir, "t2v|v2t");
  retrieve->add_option("--k", ret_ks, "Comma-separated cutoffs, e.g. 1,5,10");
  retrieve->add_option("--report", ret_report, "Write the JSON report here");
  retrieve->add_option("--per-query-csv", ret_csv, "Write per-query first-correct ranks");
  retrieve->add_flag("--flip-right", ret_flip, "Test-time flip to right-handed");

  // eval-islr
  auto* islr = app.add_subcommand("eval-islr", "Isolated sign recognition evaluation");
  std::string islr_ckpt, islr_manifest, islr_mode = "zero", islr_report;
  std::size_t islr_shots = 10, islr_k = 5;
  bool islr_flip = false, islr_gloss = false;
  islr->add_option("--checkpoint", islr_ckpt, "Checkpoint file")->required();
  islr->add_option("--manifest", islr_manifest, "Dataset manifest")->required();
  islr->add_option("--mode", islr_mode, "zero|knn|probe");
  islr->add_option("--shots", islr_shots, "Support examples per class (knn)");
  islr->add_option("--k", islr_k, "Neighbors for knn");
  islr->add_option("--report", islr_report, "Write the JSON report here");
  islr->add_flag("--flip-right", islr_flip, "Test-time flip to right-handed");
  islr->add_flag("--gloss-preprocess", islr_gloss,
                 "Normalize gloss labels and keep only vocabulary-known classes");

  // identify-language
  auto* ident = app.add_subcommand("identify-language",
                                   "Rank content-free language prompts per video");
  std::string id_ckpt, id_manifest, id_split = "test", id_tags, id_report;
  ident->add_option("--checkpoint", id_ckpt, "Checkpoint file")->required();
  ident->add_option("--manifest", id_manifest, "Dataset manifest")->required();
  ident->add_option("--split", id_split, "train|valid|test");
  ident->add_option("--tags", id_tags,
                    "Comma-separated candidate tags (default: all in the manifest)");
  ident->add_option("--report", id_report, "Write the JSON report here");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Latent-space analysis");
  auto* icon = analyze->add_subcommand("iconicity", "Cross-group dispersion ranking");
  std::string icon_ckpt, icon_manifest, icon_group = "label", icon_tag = "signed_lang";
  std::string icon_report;
  icon->add_option("--checkpoint", icon_ckpt, "Checkpoint file")->required();
  icon->add_option("--manifest", icon_manifest, "Dataset manifest")->required();
  icon->add_option("--group-by", icon_group, "Record field that names a group");
  icon->add_option("--tag-by", icon_tag, "Record field that tags group members");
  icon->add_option("--report", icon_report, "Write the JSON report here");
  auto* ana = analyze->add_subcommand("analogy", "a - b + c nearest-centroid ranking");
  std::string ana_ckpt, ana_manifest, ana_a, ana_b, ana_c, ana_report;
  ana->add_option("--checkpoint", ana_ckpt, "Checkpoint file")->required();
  ana->add_option("--manifest", ana_manifest, "Dataset manifest")->required();
  ana->add_option("--a", ana_a, "Label of term a")->required();
  ana->add_option("--b", ana_b, "Label of term b")->required();
  ana->add_option("--c", ana_c, "Label of term c")->required();
  ana->add_option("--report", ana_report, "Write the JSON report here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (g.deterministic) set_max_threads(1);

  try {
    if (synth->parsed()) return run_synth(g, synth_config, synth_out, synth_report);
    if (prep->parsed())
      return run_preprocess(g, args, prep_in, prep_out, prep_manifest, prep_out_dir,
                            prep_fit_stats);
    if (vocab->parsed()) {
      if (!vocab_build->parsed())
        throw ValidationError("vocab needs a subcommand (build)");
      return run_vocab_build(g, vocab_manifest, vocab_min_count, vocab_out);
    }
    if (train->parsed())
      return run_train(g, train_config, train_manifest, train_out, train_vocab);
    if (embed->parsed()) return run_embed(g, embed_ckpt, embed_manifest, embed_out);
    if (retrieve->parsed())
      return run_retrieve(g, ret_ckpt, ret_manifest, ret_split, ret_dir, ret_ks,
                          ret_report, ret_csv, ret_flip);
    if (islr->parsed())
      return run_eval_islr(g, islr_ckpt, islr_manifest, islr_mode, islr_shots, islr_k,
                           islr_report, islr_flip, islr_gloss);
    if (ident->parsed())
      return run_identify_language(g, id_ckpt, id_manifest, id_split, id_tags, id_report);
    if (analyze->parsed()) {
      if (icon->parsed())
        return run_analyze_iconicity(g, icon_ckpt, icon_manifest, icon_group, icon_tag,
                                     icon_report);
      if (ana->parsed())
        return run_analyze_analogy(g, ana_ckpt, ana_manifest, ana_a, ana_b, ana_c,
                                   ana_report);
      throw ValidationError("analyze needs a subcommand (iconicity or analogy)");
    }
    std::cerr << app.help();
    return args.empty() ? 0 : 1;
  } catch (const ValidationError& e) {
    if (g.json_errors)
      std::cerr << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump()
                << '\n';
    else
      std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    if (g.json_errors)
      std::cerr << json{{"error", {{"type", "io"}, {"message", e.what()}}}}.dump() << '\n';
    else
      std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    if (g.json_errors)
      std::cerr << json{{"error", {{"type", "format"}, {"message", e.what()}}}}.dump()
                << '\n';
    else
      std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    if (g.json_errors)
      std::cerr << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump()
                << '\n';
    else
      std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace signembed::cli
