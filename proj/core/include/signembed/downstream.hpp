#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signembed/retrieval.hpp"
#include "signembed/train.hpp"

namespace signembed {

// Frozen train-split embeddings per class, for few-shot classification.
struct SupportSet {
  std::map<std::string, std::vector<Eigen::VectorXf>> by_class;

  std::size_t total() const;
  void validate() const;
};

// Samples min(shots, available) train examples per class (seeded) and
// embeds them with the frozen checkpoint. Classes absent from the train
// split are omitted with a warning entry.
SupportSet build_support(const DatasetManifest& manifest, const Checkpoint& checkpoint,
                         std::size_t shots, std::uint64_t seed,
                         std::vector<std::string>* warnings = nullptr,
                         bool flip_right_at_test = false);

// Classes ordered by vote count among the k most (cosine-)similar support
// examples; ties broken by summed similarity, then lexicographically.
std::vector<std::string> knn_ranked(const SupportSet& support,
                                    const Eigen::VectorXf& query, std::size_t k);
std::string knn_classify(const SupportSet& support, const Eigen::VectorXf& query,
                         std::size_t k);

// Multinomial logistic regression on frozen embeddings.
struct ProbeModel {
  Eigen::MatrixXd weights;  // d x C
  Eigen::VectorXd bias;     // C
  std::vector<std::string> classes;
};

struct ProbeTrainInfo {
  double objective = 0.0;     // mean cross-entropy + l2/2 ||W||^2
  std::size_t iterations = 0;
  double grad_max_norm = 0.0;
};

// Deterministic from zero initialization; minimizes mean cross-entropy
// plus (l2_penalty/2)*||W||^2 (bias unpenalized) by L-BFGS with Armijo
// backtracking until the gradient max-norm drops below tol.
ProbeModel linear_probe_train(const std::vector<Eigen::VectorXf>& embeddings,
                              const std::vector<std::string>& labels,
                              double l2_penalty = 1e-2, double tol = 1e-5,
                              std::size_t max_iterations = 2000,
                              ProbeTrainInfo* info = nullptr);

// The probe's regularized objective at given parameters (shared with tests).
double probe_objective(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       std::size_t classes, const Eigen::MatrixXd& w,
                       const Eigen::VectorXd& b, double l2_penalty,
                       Eigen::MatrixXd* dw = nullptr, Eigen::VectorXd* db = nullptr);

std::vector<std::pair<std::string, double>> linear_probe_predict(
    const ProbeModel& probe, const Eigen::VectorXf& embedding);

// Ranks class prompts by similarity to the video embedding: v2t retrieval
// with the class prompts as the candidate pool.
std::vector<std::pair<std::string, double>> zero_shot_classify(
    const Checkpoint& checkpoint, const Eigen::VectorXf& video_embedding,
    const std::vector<std::pair<std::string, Prompt>>& class_prompts);

// Content-free prompts "<spoken> <tag>" per candidate sign language,
// ranked by similarity to the video embedding.
std::vector<std::pair<std::string, double>> identify_language(
    const Checkpoint& checkpoint, const Eigen::VectorXf& video_embedding,
    const std::vector<std::string>& language_tags, const std::string& spoken_tag = "en");

enum class IslrMode { ZeroShot, Knn, Probe };
IslrMode islr_mode_from_string(const std::string& s);
std::string to_string(IslrMode m);

struct IslrOptions {
  IslrMode mode = IslrMode::ZeroShot;
  std::size_t shots = 10;
  std::size_t knn_k = 5;
  double l2_penalty = 1e-2;
  double probe_tol = 1e-5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> ks = {1, 5, 10};
  bool flip_right_at_test = false;
};

struct IslrReport {
  std::string mode;
  std::size_t queries = 0;
  std::size_t classes = 0;
  std::map<std::size_t, double> recall;  // R@k over the test split
  double median = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

// Test-split ISLR evaluation in the chosen mode. Classes come from the
// train split's labels; zero-shot prompts reuse each class's tags.
IslrReport evaluate_islr(const DatasetManifest& manifest, const Checkpoint& checkpoint,
                         const IslrOptions& options);

}  // namespace signembed
