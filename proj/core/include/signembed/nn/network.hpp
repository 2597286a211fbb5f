#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "signembed/common.hpp"
#include "signembed/nn/config.hpp"
#include "signembed/nn/params.hpp"

namespace signembed::nn {

// Dual-encoder network with explicit analytic gradients.
//
// Video side: per-frame MLP projection to embed_dim, learned positional
// embeddings, pre-norm transformer stack, masked average pooling, optional
// linear multimodal projection. Text side: token + positional embeddings,
// its own transformer stack, the same pooling and optional projection.
//
// Sequences are laid out as embed_dim x length matrices (one column per
// token); only the first true_len tokens of an input exist inside the
// network, which is what makes the padding-masking contract hold.
//
// Instantiated for float (training) and double (gradient verification).
template <typename S>
class Network {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  explicit Network(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }
  std::shared_ptr<const ParamSchema> schema_ptr() const { return schema_; }
  ParamStore<S> make_grad_store() const { return ParamStore<S>(schema_); }

  // Deterministic initialization: transformer weights and embeddings
  // N(0, 0.02), multimodal projections N(0, 1/sqrt(d)), layer-norm gains 1,
  // all biases 0.
  void init_params(std::uint64_t seed);

  // frames: input_dim x padded_len with 1 <= true_len <= max_video_len
  // real columns. Padding columns are never read.
  Vec embed_video(const Mat& frames, std::size_t true_len) const;

  // ids: padded token-id sequence; the first true_len entries are used.
  Vec embed_text(const std::vector<int>& ids, std::size_t true_len) const;

  // Recomputes the forward pass with caches and accumulates d(loss)/d(param)
  // into `grads`, given the loss gradient w.r.t. the pooled embedding.
  void backward_video(const Mat& frames, std::size_t true_len, const Vec& d_embedding,
                      ParamStore<S>& grads) const;
  void backward_text(const std::vector<int>& ids, std::size_t true_len,
                     const Vec& d_embedding, ParamStore<S>& grads) const;

 private:
  enum class Init { Zero, One, Normal02, NormalInvSqrtDim };

  struct LayerRefs {
    std::size_t ln1_g, ln1_b;
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_g, ln2_b;
    std::size_t ff_w1, ff_b1, ff_w2, ff_b2;
  };
  struct StackRefs {
    std::vector<LayerRefs> layers;
    std::size_t lnf_g, lnf_b;
    std::size_t pos;
  };

  struct LnCache {
    Mat xhat;
    Vec inv_sigma;  // one entry per token column
  };
  struct BlockCache {
    LnCache ln1;
    Mat ln1_out, q, k, v;
    std::vector<Mat> attn;  // per-head row-softmax matrices, L x L
    Mat heads_out;          // concatenated head outputs before the out proj
    LnCache ln2;
    Mat ln2_out, ff_h, ff_g;
  };
  struct StackCache {
    std::vector<BlockCache> blocks;
    LnCache lnf;
  };
  struct VideoCache {
    Mat x0, h1, g1;  // MLP projection intermediates
    StackCache stack;
    Mat stack_out;
    Vec pooled;
  };
  struct TextCache {
    StackCache stack;
    Mat stack_out;
    Vec pooled;
  };

  std::size_t add_tensor(const std::string& name, std::size_t rows, std::size_t cols,
                         Init init);
  StackRefs build_stack(const std::string& prefix, std::size_t layers,
                        std::size_t pos_len);

  Mat layer_norm(const Mat& x, std::size_t g_idx, std::size_t b_idx,
                 LnCache* cache) const;
  void layer_norm_backward(const Mat& dy, const LnCache& cache, std::size_t g_idx,
                           std::size_t b_idx, ParamStore<S>& grads, Mat& dx) const;

  Mat run_stack(const StackRefs& refs, Mat x, StackCache* cache) const;
  // Returns the gradient w.r.t. the stack input.
  Mat run_stack_backward(const StackRefs& refs, const StackCache& cache, Mat dx,
                         ParamStore<S>& grads) const;

  Vec forward_video(const Mat& frames, std::size_t true_len, VideoCache* cache) const;
  Vec forward_text(const std::vector<int>& ids, std::size_t true_len,
                   TextCache* cache) const;

  ModelConfig config_;
  std::shared_ptr<ParamSchema> schema_build_;
  std::shared_ptr<const ParamSchema> schema_;
  ParamStore<S> params_;
  std::vector<Init> init_kinds_;

  // tensor indices
  std::size_t vp_w1_, vp_b1_, vp_w2_, vp_b2_;
  std::size_t tok_emb_;
  StackRefs video_stack_, text_stack_;
  std::size_t mm_video_ = SIZE_MAX, mm_text_ = SIZE_MAX;
};

extern template class Network<float>;
extern template class Network<double>;

// S[i][j] = zv_i . zt_j, optionally on L2-normalized embeddings.
template <typename S>
Eigen::MatrixXd similarity_matrix(
    const std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>>& video_embeddings,
    const std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>>& text_embeddings,
    bool cosine);

extern template Eigen::MatrixXd similarity_matrix<float>(
    const std::vector<Eigen::VectorXf>&, const std::vector<Eigen::VectorXf>&, bool);
extern template Eigen::MatrixXd similarity_matrix<double>(
    const std::vector<Eigen::VectorXd>&, const std::vector<Eigen::VectorXd>&, bool);

}  // namespace signembed::nn
