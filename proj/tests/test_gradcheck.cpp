#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "signembed/nn/batch_loss.hpp"

using namespace signembed;
using nn::BatchItem;
using nn::ModelConfig;
using nn::Network;

namespace {

ModelConfig grad_config(bool cosine) {
  ModelConfig c;
  c.embed_dim = 16;
  c.video_layers = 2;
  c.text_layers = 2;
  c.heads = 4;
  c.ff_dim = 32;
  c.max_video_len = 6;
  c.max_text_len = 5;
  c.input_dim = 9;
  c.vocab_size = 12;
  c.use_multimodal_projection = true;
  c.cosine_similarity = cosine;
  return c;
}

std::vector<BatchItem<double>> make_batch(const ModelConfig& cfg, std::uint64_t seed) {
  RandomSource rng(seed);
  std::vector<BatchItem<double>> batch(3);
  const std::size_t lens[3] = {6, 3, 4};
  const std::size_t tlens[3] = {5, 3, 4};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& item = batch[i];
    item.video.resize(cfg.input_dim, lens[i]);
    for (Eigen::Index c = 0; c < item.video.cols(); ++c)
      for (Eigen::Index r = 0; r < item.video.rows(); ++r)
        item.video(r, c) = rng.normal(0.0, 0.5);
    item.video_len = lens[i];
    item.token_ids.assign(cfg.max_text_len, 0);
    item.token_ids[0] = 2;
    for (std::size_t t = 1; t < tlens[i]; ++t)
      item.token_ids[t] = static_cast<int>(3 + rng.uniform_int(cfg.vocab_size - 3));
    item.token_len = tlens[i];
  }
  return batch;
}

// Max-norm relative error per tensor. Gradients below the central-difference
// noise floor (structurally invariant parameters, e.g. a key bias under the
// attention softmax) compare as zero.
double tensor_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double num = (a - b).cwiseAbs().maxCoeff();
  if (num < 1e-7) return 0.0;
  const double den = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return num / den;
}

void run_gradcheck(bool cosine, bool symmetric) {
  const auto cfg = grad_config(cosine);
  Network<double> net(cfg);
  net.init_params(7);
  auto batch = make_batch(cfg, 11);
  nn::LossOptions opts{0.07, symmetric};

  auto analytic = net.make_grad_store();
  (void)nn::contrastive_batch_loss<double>(net, batch, opts, &analytic);

  const double eps = 1e-4;
  auto& params = net.params().data();
  const auto& schema = net.params().schema();
  for (std::size_t t = 0; t < schema.tensors().size(); ++t) {
    const auto& spec = schema.tensor(t);
    Eigen::MatrixXd fd(spec.rows, spec.cols);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const std::size_t at = spec.offset + i;
      const double saved = params[at];
      params[at] = saved + eps;
      const double up = nn::contrastive_batch_loss<double>(net, batch, opts, nullptr);
      params[at] = saved - eps;
      const double down = nn::contrastive_batch_loss<double>(net, batch, opts, nullptr);
      params[at] = saved;
      fd.data()[i] = (up - down) / (2.0 * eps);
    }
    const Eigen::MatrixXd got = analytic.view(t);
    const double rel = tensor_rel_error(got, fd);
    INFO("tensor ", spec.name, " rel err ", rel);
    CHECK(rel < 1e-4);
  }
}

}  // namespace

TEST_CASE("InfoNCE gradient w.r.t. the similarity matrix matches finite differences") {
  RandomSource rng(3);
  for (bool symmetric : {true, false}) {
    Eigen::MatrixXd s(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) s(i, j) = rng.normal(0.0, 1.0);
    const double tau = 0.3;
    auto base = info_nce_loss(s, tau, symmetric);
    const double eps = 1e-6;
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) {
        Eigen::MatrixXd up = s, dn = s;
        up(i, j) += eps;
        dn(i, j) -= eps;
        const double fd =
            (info_nce_loss(up, tau, symmetric).loss - info_nce_loss(dn, tau, symmetric).loss) /
            (2 * eps);
        CHECK(base.grad(i, j) == doctest::Approx(fd).epsilon(1e-5));
      }
  }
}

TEST_CASE("encoder gradients match central finite differences (dot, symmetric)") {
  run_gradcheck(false, true);
}

TEST_CASE("encoder gradients match central finite differences (cosine, symmetric)") {
  run_gradcheck(true, true);
}

TEST_CASE("encoder gradients match central finite differences (dot, one-direction)") {
  run_gradcheck(false, false);
}
