#include "signembed/synthgen.hpp"

#include <cmath>

#include "signembed/common.hpp"
#include "signembed/pose_io.hpp"
#include "signembed/preprocess.hpp"

namespace signembed {

void SynthConfig::validate() const {
  if (classes < 2) throw ValidationError("synth: classes must be >= 2");
  if (languages < 1) throw ValidationError("synth: languages must be >= 1");
  if (examples_per < 1) throw ValidationError("synth: examples_per must be >= 1");
  if (frames_min < 2 || frames_max < frames_min)
    throw ValidationError("synth: need 2 <= frames_min <= frames_max");
  for (double s : {jitter_sigma, language_offset_sigma, transform_sigma}) {
    if (!(s >= 0.0)) throw ValidationError("synth: sigmas must be non-negative");
  }
  if (!(left_handed_fraction >= 0.0 && left_handed_fraction <= 1.0))
    throw ValidationError("synth: left_handed_fraction must be in [0, 1]");
  if (iconic_classes > classes)
    throw ValidationError("synth: iconic_classes exceeds classes");
  if (!(fps > 0.0f)) throw ValidationError("synth: fps must be positive");
}

nlohmann::json SynthConfig::to_json() const {
  return nlohmann::json{{"classes", classes},
                        {"languages", languages},
                        {"examples_per", examples_per},
                        {"frames_min", frames_min},
                        {"frames_max", frames_max},
                        {"layout", layout_name},
                        {"jitter_sigma", jitter_sigma},
                        {"language_offset_sigma", language_offset_sigma},
                        {"left_handed_fraction", left_handed_fraction},
                        {"iconic_classes", iconic_classes},
                        {"transform_sigma", transform_sigma},
                        {"fps", fps},
                        {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.classes = j.value("classes", c.classes);
  c.languages = j.value("languages", c.languages);
  c.examples_per = j.value("examples_per", c.examples_per);
  c.frames_min = j.value("frames_min", c.frames_min);
  c.frames_max = j.value("frames_max", c.frames_max);
  c.layout_name = j.value("layout", c.layout_name);
  c.jitter_sigma = j.value("jitter_sigma", c.jitter_sigma);
  c.language_offset_sigma = j.value("language_offset_sigma", c.language_offset_sigma);
  c.left_handed_fraction = j.value("left_handed_fraction", c.left_handed_fraction);
  c.iconic_classes = j.value("iconic_classes", c.iconic_classes);
  c.transform_sigma = j.value("transform_sigma", c.transform_sigma);
  c.fps = j.value("fps", c.fps);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::string synth_language_tag(std::size_t index) {
  static const char* known[] = {"ase", "gsg", "bfi", "fsl", "ssp",
                                "rsl", "jos", "csq", "ins", "psr"};
  if (index < std::size(known)) return known[index];
  // sba, sbb, ... deterministic 3-letter tags beyond the known list
  const std::size_t i = index - std::size(known);
  std::string tag = "s";
  tag += static_cast<char>('a' + (i / 26) % 26);
  tag += static_cast<char>('a' + i % 26);
  return tag;
}

std::string synth_class_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "sign%03zu", index);
  return buf;
}

namespace {

struct Harmonic {
  double amp[3];
  double phase[3];
};

// Per keypoint: base position plus <= 3 harmonics per axis.
struct KeypointMotion {
  double base[3];
  Harmonic h[3];
};

}  // namespace

DatasetManifest generate_dataset(const SynthConfig& config,
                                 const std::filesystem::path& out_dir) {
  config.validate();
  const KeypointLayout layout = resolve_layout(config.layout_name);
  const std::size_t kp = layout.total();
  for (const char* tag : {"shoulders", "left_hand", "right_hand"}) {
    if (!layout.has_tag(tag))
      throw ValidationError(std::string("synth layout needs the '") + tag + "' tag");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "poses", ec);
  if (ec) throw IoError("cannot create '" + (out_dir / "poses").string() + "'");

  const auto& right_hand = layout.tag_indices("right_hand");
  const auto& left_hand = layout.tag_indices("left_hand");
  const auto& shoulders = layout.tag_indices("shoulders");
  std::vector<bool> is_right(kp, false), is_left(kp, false), is_shoulder(kp, false);
  for (auto i : right_hand) is_right[i] = true;
  for (auto i : left_hand) is_left[i] = true;
  for (auto i : shoulders) is_shoulder[i] = true;

  // Neutral skeleton shared by the whole dataset.
  std::vector<std::array<double, 3>> base(kp);
  {
    RandomSource rng(derive_seed(config.seed, fnv1a64("skeleton")));
    for (std::size_t k = 0; k < kp; ++k) {
      if (is_shoulder[k]) {
        const bool left = (k == shoulders[0]);
        base[k] = {left ? 0.35 : -0.35, 0.0, 0.0};
      } else if (is_right[k]) {
        base[k] = {-0.45 + 0.03 * rng.normal(), 0.55 + 0.03 * rng.normal(),
                   0.02 * rng.normal()};
      } else if (is_left[k]) {
        base[k] = {0.45 + 0.03 * rng.normal(), 0.55 + 0.03 * rng.normal(),
                   0.02 * rng.normal()};
      } else {
        base[k] = {0.25 * rng.normal(), 0.6 + 0.4 * rng.normal(), 0.05 * rng.normal()};
      }
    }
  }

  // Class prototypes: hand-path harmonics (shared by the dominant hand's
  // points) plus small per-keypoint body motion.
  struct ClassProto {
    Harmonic hand_path;
    std::vector<KeypointMotion> per_point;
  };
  std::vector<ClassProto> protos(config.classes);
  for (std::size_t cls = 0; cls < config.classes; ++cls) {
    RandomSource rng(derive_seed(config.seed, fnv1a64("class"), cls));
    ClassProto& p = protos[cls];
    // dominant-hand trajectory: the class's main signature
    for (std::size_t a = 0; a < 3; ++a) {
      p.hand_path.amp[a] = 0.15 + 0.1 * rng.uniform01();
      p.hand_path.phase[a] = rng.uniform(0.0, 2.0 * M_PI);
    }
    p.per_point.resize(kp);
    for (std::size_t k = 0; k < kp; ++k) {
      KeypointMotion& m = p.per_point[k];
      for (std::size_t a = 0; a < 3; ++a) m.base[a] = base[k][a];
      const double scale = is_right[k] ? 0.05 : (is_shoulder[k] ? 0.005 : 0.015);
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t a = 0; a < 3; ++a) {
          m.h[h].amp[a] = scale * rng.normal();
          m.h[h].phase[a] = rng.uniform(0.0, 2.0 * M_PI);
        }
    }
  }

  // Per-language appearance offsets, shared across non-iconic classes.
  std::vector<std::vector<std::array<double, 3>>> lang_offset(config.languages);
  for (std::size_t l = 0; l < config.languages; ++l) {
    RandomSource rng(derive_seed(config.seed, fnv1a64("lang"), l));
    lang_offset[l].resize(kp);
    for (std::size_t k = 0; k < kp; ++k)
      for (std::size_t a = 0; a < 3; ++a)
        lang_offset[l][k][a] = config.language_offset_sigma * rng.normal();
  }

  DatasetManifest manifest;
  manifest.base_dir = out_dir;

  for (std::size_t cls = 0; cls < config.classes; ++cls) {
    const bool iconic = cls < config.iconic_classes;
    for (std::size_t lang = 0; lang < config.languages; ++lang) {
      // deterministic 8:1:1 split within the (class, language) cell
      std::vector<Split> splits(config.examples_per, Split::Train);
      {
        const std::size_t n = config.examples_per;
        const std::size_t n_test = n >= 3 ? std::max<std::size_t>(1, n / 10) : 0;
        const std::size_t n_valid = n >= 4 ? std::max<std::size_t>(1, n / 10) : 0;
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        RandomSource rng(derive_seed(config.seed, fnv1a64("split"),
                                     cls * 1000003 + lang));
        rng.shuffle(order);
        for (std::size_t i = 0; i < n_test; ++i) splits[order[i]] = Split::Test;
        for (std::size_t i = n_test; i < n_test + n_valid; ++i)
          splits[order[i]] = Split::Valid;
      }

      for (std::size_t ex = 0; ex < config.examples_per; ++ex) {
        RandomSource rng(derive_seed(config.seed, fnv1a64("example"),
                                     (cls * 1000003 + lang) * 1009 + ex));
        const std::size_t frames =
            config.frames_min +
            rng.uniform_int(config.frames_max - config.frames_min + 1);

        // per-example variation: jitter field, similarity transform, handedness
        std::vector<std::array<double, 3>> jitter(kp);
        for (std::size_t k = 0; k < kp; ++k)
          for (std::size_t a = 0; a < 3; ++a)
            jitter[k][a] = config.jitter_sigma * rng.normal();
        const double scale = std::exp(config.transform_sigma * rng.normal());
        double shift[3];
        for (auto& s : shift) s = config.transform_sigma * rng.normal();
        const bool left_handed = rng.bernoulli(config.left_handed_fraction);

        PoseSequence seq;
        seq.layout = layout;
        seq.fps = config.fps;
        seq.frames = frames;
        seq.keypoints = kp;
        seq.coords.resize(frames * kp * 3);
        seq.confidence.assign(frames * kp, 1.0f);

        const ClassProto& proto = protos[cls];
        for (std::size_t f = 0; f < frames; ++f) {
          const double t = static_cast<double>(f) / static_cast<double>(frames - 1);
          for (std::size_t k = 0; k < kp; ++k) {
            for (std::size_t a = 0; a < 3; ++a) {
              double v = proto.per_point[k].base[a];
              for (std::size_t h = 0; h < 3; ++h)
                v += proto.per_point[k].h[h].amp[a] *
                     std::sin(2.0 * M_PI * (h + 1) * t + proto.per_point[k].h[h].phase[a]);
              if (is_right[k])
                v += proto.hand_path.amp[a] *
                     std::sin(2.0 * M_PI * (a == 0 ? 1 : 2) * t + proto.hand_path.phase[a]);
              if (!iconic) v += lang_offset[lang][k][a];
              v += jitter[k][a];
              v = scale * v + shift[a];
              seq.at(f, k, a) = static_cast<float>(v);
            }
            if (is_left[k]) seq.conf(f, k) = 0.0f;  // off hand missing
          }
        }
        if (left_handed) seq = mirror_pose(seq);

        char id[64];
        std::snprintf(id, sizeof id, "c%03zu_l%02zu_e%03zu", cls, lang, ex);
        const std::string rel = std::string("poses/") + id + ".spse";
        save_pose(seq, out_dir / rel);

        ManifestRecord rec;
        rec.id = id;
        rec.pose_path = rel;
        rec.text = synth_class_name(cls);
        rec.spoken_lang = "en";
        rec.signed_lang = synth_language_tag(lang);
        rec.split = splits[ex];
        rec.label = synth_class_name(cls);
        manifest.records.push_back(std::move(rec));
      }
    }
  }

  save_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace signembed
