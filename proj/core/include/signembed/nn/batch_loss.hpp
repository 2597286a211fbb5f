#pragma once

#include <vector>

#include "signembed/loss.hpp"
#include "signembed/nn/network.hpp"

namespace signembed::nn {

// One video-text pair prepared for the encoders.
template <typename S>
struct BatchItem {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> video;  // input_dim x len
  std::size_t video_len = 0;
  std::vector<int> token_ids;
  std::size_t token_len = 0;
};

struct LossOptions {
  double tau = 0.07;
  bool symmetric = true;
};

// InfoNCE over a batch, end to end through both encoders. When `grads` is
// non-null, analytic parameter gradients are accumulated into it (members
// are re-embedded with activation caches and backpropagated; per-worker
// gradient buffers are reduced in worker order).
//
// Shared by the trainer (float) and by gradient verification (double).
template <typename S>
double contrastive_batch_loss(const Network<S>& net,
                              const std::vector<BatchItem<S>>& batch,
                              const LossOptions& options, ParamStore<S>* grads) {
  using Vec = typename Network<S>::Vec;
  const std::size_t n = batch.size();
  if (n == 0) throw ValidationError("empty batch");

  std::vector<Vec> zv(n), zt(n);
  parallel_for(n, [&](std::size_t i) {
    zv[i] = net.embed_video(batch[i].video, batch[i].video_len);
    zt[i] = net.embed_text(batch[i].token_ids, batch[i].token_len);
  });

  const bool cosine = net.config().cosine_similarity;
  const Eigen::MatrixXd sims = similarity_matrix<S>(zv, zt, cosine);
  const InfoNceResult nce = info_nce_loss(sims, options.tau, options.symmetric);
  if (!grads) return nce.loss;

  // dS -> d(embedding), chaining through L2 normalization in cosine mode.
  std::vector<Vec> dzv(n), dzt(n);
  const Eigen::Index d = zv[0].size();
  auto normalize_back = [&](const Vec& z, Eigen::VectorXd du) {
    const Eigen::VectorXd zd = z.template cast<double>();
    const double norm = zd.norm();
    if (norm <= 0.0) return du;  // zero embedding: pass-through safeguard
    const Eigen::VectorXd u = zd / norm;
    return Eigen::VectorXd(((du - u * u.dot(du)) / norm));
  };
  auto unit = [&](const Vec& z) {
    Eigen::VectorXd u = z.template cast<double>();
    const double norm = u.norm();
    if (cosine && norm > 0.0) u /= norm;
    return u;
  };
  std::vector<Eigen::VectorXd> uv(n), ut(n);
  for (std::size_t i = 0; i < n; ++i) {
    uv[i] = unit(zv[i]);
    ut[i] = unit(zt[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd dv = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd dt = Eigen::VectorXd::Zero(d);
    for (std::size_t j = 0; j < n; ++j) {
      dv += nce.grad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * ut[j];
      dt += nce.grad(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * uv[j];
    }
    if (cosine) {
      dv = normalize_back(zv[i], std::move(dv));
      dt = normalize_back(zt[i], std::move(dt));
    }
    dzv[i] = dv.template cast<S>();
    dzt[i] = dt.template cast<S>();
  }

  // Per-worker gradient buffers, reduced in worker order.
  const unsigned max_workers =
      static_cast<unsigned>(std::min<std::size_t>(effective_threads(), n));
  std::vector<ParamStore<S>> buffers;
  buffers.reserve(max_workers);
  for (unsigned t = 0; t < max_workers; ++t) buffers.emplace_back(net.schema_ptr());
  const unsigned used = parallel_for_indexed(n, [&](unsigned worker, std::size_t i) {
    net.backward_video(batch[i].video, batch[i].video_len, dzv[i], buffers[worker]);
    net.backward_text(batch[i].token_ids, batch[i].token_len, dzt[i], buffers[worker]);
  });
  for (unsigned t = 0; t < used; ++t) grads->add_scaled(buffers[t], S(1));
  return nce.loss;
}

}  // namespace signembed::nn
