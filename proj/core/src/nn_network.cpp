#include "signembed/nn/network.hpp"

namespace signembed::nn {

void ModelConfig::validate() const {
  if (embed_dim == 0 || heads == 0) throw ValidationError("embed_dim and heads must be positive");
  if (embed_dim % heads != 0) throw ValidationError("embed_dim must be divisible by heads");
  if (ff_dim == 0) throw ValidationError("ff_dim must be positive");
  if (max_video_len == 0 || max_text_len == 0)
    throw ValidationError("context lengths must be positive");
  if (input_dim == 0) throw ValidationError("input_dim must be set (keypoints * 3)");
  if (vocab_size < 3) throw ValidationError("vocab_size must cover the reserved tokens");
}

nlohmann::json ModelConfig::to_json() const {
  return nlohmann::json{{"embed_dim", embed_dim},
                        {"video_layers", video_layers},
                        {"text_layers", text_layers},
                        {"heads", heads},
                        {"ff_dim", ff_dim},
                        {"max_video_len", max_video_len},
                        {"max_text_len", max_text_len},
                        {"input_dim", input_dim},
                        {"vocab_size", vocab_size},
                        {"use_multimodal_projection", use_multimodal_projection},
                        {"cosine_similarity", cosine_similarity}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.video_layers = j.at("video_layers").get<std::size_t>();
  c.text_layers = j.at("text_layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ff_dim = j.at("ff_dim").get<std::size_t>();
  c.max_video_len = j.at("max_video_len").get<std::size_t>();
  c.max_text_len = j.at("max_text_len").get<std::size_t>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.use_multimodal_projection = j.at("use_multimodal_projection").get<bool>();
  c.cosine_similarity = j.value("cosine_similarity", false);
  return c;
}

namespace {

constexpr double kLnEps = 1e-5;

template <typename S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x / S(M_SQRT2)));
}

template <typename S>
S gelu_grad(S x) {
  const S phi = S(0.5) * (S(1) + std::erf(x / S(M_SQRT2)));
  const S pdf = std::exp(S(-0.5) * x * x) / S(std::sqrt(2.0 * M_PI));
  return phi + x * pdf;
}

}  // namespace

template <typename S>
Network<S>::Network(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  schema_build_ = std::make_shared<ParamSchema>();

  const std::size_t d = config_.embed_dim;
  vp_w1_ = add_tensor("video_proj.w1", d, config_.input_dim, Init::Normal02);
  vp_b1_ = add_tensor("video_proj.b1", d, 1, Init::Zero);
  vp_w2_ = add_tensor("video_proj.w2", d, d, Init::Normal02);
  vp_b2_ = add_tensor("video_proj.b2", d, 1, Init::Zero);

  video_stack_ = build_stack("video", config_.video_layers, config_.max_video_len);

  tok_emb_ = add_tensor("tok_emb", d, config_.vocab_size, Init::Normal02);
  text_stack_ = build_stack("text", config_.text_layers, config_.max_text_len);

  if (config_.use_multimodal_projection) {
    mm_video_ = add_tensor("mm_proj.video", d, d, Init::NormalInvSqrtDim);
    mm_text_ = add_tensor("mm_proj.text", d, d, Init::NormalInvSqrtDim);
  }

  schema_ = schema_build_;
  params_ = ParamStore<S>(schema_);
}

template <typename S>
std::size_t Network<S>::add_tensor(const std::string& name, std::size_t rows,
                                   std::size_t cols, Init init) {
  std::size_t idx = schema_build_->add(name, rows, cols);
  init_kinds_.push_back(init);
  return idx;
}

template <typename S>
typename Network<S>::StackRefs Network<S>::build_stack(const std::string& prefix,
                                                       std::size_t layers,
                                                       std::size_t pos_len) {
  const std::size_t d = config_.embed_dim;
  StackRefs refs;
  refs.pos = add_tensor(prefix + ".pos", d, pos_len, Init::Normal02);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l) + ".";
    LayerRefs lr;
    lr.ln1_g = add_tensor(p + "ln1.g", d, 1, Init::One);
    lr.ln1_b = add_tensor(p + "ln1.b", d, 1, Init::Zero);
    lr.wq = add_tensor(p + "attn.wq", d, d, Init::Normal02);
    lr.bq = add_tensor(p + "attn.bq", d, 1, Init::Zero);
    lr.wk = add_tensor(p + "attn.wk", d, d, Init::Normal02);
    lr.bk = add_tensor(p + "attn.bk", d, 1, Init::Zero);
    lr.wv = add_tensor(p + "attn.wv", d, d, Init::Normal02);
    lr.bv = add_tensor(p + "attn.bv", d, 1, Init::Zero);
    lr.wo = add_tensor(p + "attn.wo", d, d, Init::Normal02);
    lr.bo = add_tensor(p + "attn.bo", d, 1, Init::Zero);
    lr.ln2_g = add_tensor(p + "ln2.g", d, 1, Init::One);
    lr.ln2_b = add_tensor(p + "ln2.b", d, 1, Init::Zero);
    lr.ff_w1 = add_tensor(p + "ff.w1", config_.ff_dim, d, Init::Normal02);
    lr.ff_b1 = add_tensor(p + "ff.b1", config_.ff_dim, 1, Init::Zero);
    lr.ff_w2 = add_tensor(p + "ff.w2", d, config_.ff_dim, Init::Normal02);
    lr.ff_b2 = add_tensor(p + "ff.b2", d, 1, Init::Zero);
    refs.layers.push_back(lr);
  }
  refs.lnf_g = add_tensor(prefix + ".lnf.g", d, 1, Init::One);
  refs.lnf_b = add_tensor(prefix + ".lnf.b", d, 1, Init::Zero);
  return refs;
}

template <typename S>
void Network<S>::init_params(std::uint64_t seed) {
  RandomSource rng(seed);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
  for (std::size_t t = 0; t < schema_->tensors().size(); ++t) {
    auto view = params_.view(t);
    switch (init_kinds_[t]) {
      case Init::Zero: view.setZero(); break;
      case Init::One: view.setOnes(); break;
      case Init::Normal02:
        for (Eigen::Index c = 0; c < view.cols(); ++c)
          for (Eigen::Index r = 0; r < view.rows(); ++r)
            view(r, c) = static_cast<S>(rng.normal(0.0, 0.02));
        break;
      case Init::NormalInvSqrtDim:
        for (Eigen::Index c = 0; c < view.cols(); ++c)
          for (Eigen::Index r = 0; r < view.rows(); ++r)
            view(r, c) = static_cast<S>(rng.normal(0.0, inv_sqrt_d));
        break;
    }
  }
}

template <typename S>
typename Network<S>::Mat Network<S>::layer_norm(const Mat& x, std::size_t g_idx,
                                                std::size_t b_idx, LnCache* cache) const {
  const auto gamma = params_.view(g_idx);
  const auto beta = params_.view(b_idx);
  const Eigen::Index d = x.rows(), L = x.cols();
  Mat xhat(d, L);
  Vec inv_sigma(L);
  for (Eigen::Index j = 0; j < L; ++j) {
    const S mu = x.col(j).mean();
    const S var = (x.col(j).array() - mu).square().sum() / static_cast<S>(d);
    const S inv = S(1) / std::sqrt(var + S(kLnEps));
    xhat.col(j) = (x.col(j).array() - mu) * inv;
    inv_sigma(j) = inv;
  }
  Mat y = (xhat.array().colwise() * gamma.col(0).array()).colwise() + beta.col(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_sigma = std::move(inv_sigma);
  }
  return y;
}

template <typename S>
void Network<S>::layer_norm_backward(const Mat& dy, const LnCache& cache,
                                     std::size_t g_idx, std::size_t b_idx,
                                     ParamStore<S>& grads, Mat& dx) const {
  const auto gamma = params_.view(g_idx);
  auto dgamma = grads.view(g_idx);
  auto dbeta = grads.view(b_idx);
  const Eigen::Index d = dy.rows(), L = dy.cols();

  dgamma.col(0) += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
  dbeta.col(0) += dy.rowwise().sum();

  dx.resize(d, L);
  for (Eigen::Index j = 0; j < L; ++j) {
    const auto dxhat = (dy.col(j).array() * gamma.col(0).array()).eval();
    const S mean_dxhat = dxhat.mean();
    const S mean_dxhat_xhat = (dxhat * cache.xhat.col(j).array()).mean();
    dx.col(j) = (cache.inv_sigma(j) *
                 (dxhat - mean_dxhat - cache.xhat.col(j).array() * mean_dxhat_xhat))
                    .matrix();
  }
}

template <typename S>
typename Network<S>::Mat Network<S>::run_stack(const StackRefs& refs, Mat x,
                                               StackCache* cache) const {
  const std::size_t heads = config_.heads;
  const std::size_t dh = config_.embed_dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const Eigen::Index L = x.cols();

  if (cache) cache->blocks.resize(refs.layers.size());
  for (std::size_t l = 0; l < refs.layers.size(); ++l) {
    const auto& lr = refs.layers[l];
    BlockCache* bc = cache ? &cache->blocks[l] : nullptr;
    BlockCache local;
    BlockCache& c = bc ? *bc : local;

    // pre-norm self-attention with residual
    Mat a_in = layer_norm(x, lr.ln1_g, lr.ln1_b, bc ? &c.ln1 : nullptr);
    Mat q = (params_.view(lr.wq) * a_in).colwise() + params_.view(lr.bq).col(0);
    Mat k = (params_.view(lr.wk) * a_in).colwise() + params_.view(lr.bk).col(0);
    Mat v = (params_.view(lr.wv) * a_in).colwise() + params_.view(lr.bv).col(0);

    Mat heads_out(config_.embed_dim, L);
    if (bc) c.attn.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto qh = q.middleRows(h * dh, dh);
      const auto kh = k.middleRows(h * dh, dh);
      const auto vh = v.middleRows(h * dh, dh);
      Mat scores = (qh.transpose() * kh) * scale;  // L x L, rows are queries
      for (Eigen::Index i = 0; i < L; ++i) {
        const S m = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - m).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      heads_out.middleRows(h * dh, dh) = vh * scores.transpose();
      if (bc) c.attn[h] = std::move(scores);
    }
    Mat attn = (params_.view(lr.wo) * heads_out).colwise() + params_.view(lr.bo).col(0);
    Mat x1 = x + attn;

    // pre-norm feed-forward with residual
    Mat f_in = layer_norm(x1, lr.ln2_g, lr.ln2_b, bc ? &c.ln2 : nullptr);
    Mat h1 = (params_.view(lr.ff_w1) * f_in).colwise() + params_.view(lr.ff_b1).col(0);
    Mat g1 = h1.unaryExpr([](S t) { return gelu(t); });
    Mat ff = (params_.view(lr.ff_w2) * g1).colwise() + params_.view(lr.ff_b2).col(0);

    if (bc) {
      c.ln1_out = std::move(a_in);
      c.q = std::move(q);
      c.k = std::move(k);
      c.v = std::move(v);
      c.heads_out = std::move(heads_out);
      c.ln2_out = std::move(f_in);
      c.ff_h = std::move(h1);
      c.ff_g = std::move(g1);
    }
    x = x1 + ff;
  }
  return layer_norm(x, refs.lnf_g, refs.lnf_b, cache ? &cache->lnf : nullptr);
}

template <typename S>
typename Network<S>::Mat Network<S>::run_stack_backward(const StackRefs& refs,
                                                        const StackCache& cache, Mat dy,
                                                        ParamStore<S>& grads) const {
  const std::size_t heads = config_.heads;
  const std::size_t dh = config_.embed_dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  Mat dx;
  layer_norm_backward(dy, cache.lnf, refs.lnf_g, refs.lnf_b, grads, dx);

  for (std::size_t li = refs.layers.size(); li-- > 0;) {
    const auto& lr = refs.layers[li];
    const auto& c = cache.blocks[li];
    const Eigen::Index L = dx.cols();

    // feed-forward branch: dx covers x2 = x1 + ff
    const Mat& dff = dx;
    grads.view(lr.ff_w2) += dff * c.ff_g.transpose();
    grads.view(lr.ff_b2).col(0) += dff.rowwise().sum();
    Mat dg1 = params_.view(lr.ff_w2).transpose() * dff;
    Mat dh1 = dg1.array() * c.ff_h.unaryExpr([](S t) { return gelu_grad(t); }).array();
    grads.view(lr.ff_w1) += dh1 * c.ln2_out.transpose();
    grads.view(lr.ff_b1).col(0) += dh1.rowwise().sum();
    Mat df_in = params_.view(lr.ff_w1).transpose() * dh1;

    Mat dx1_ln;
    layer_norm_backward(df_in, c.ln2, lr.ln2_g, lr.ln2_b, grads, dx1_ln);
    Mat dx1 = dx + dx1_ln;  // residual

    // attention branch: dx1 covers x1 = x + attn
    const Mat& dattn = dx1;
    grads.view(lr.wo) += dattn * c.heads_out.transpose();
    grads.view(lr.bo).col(0) += dattn.rowwise().sum();
    Mat dheads = params_.view(lr.wo).transpose() * dattn;

    Mat dq(config_.embed_dim, L), dk(config_.embed_dim, L), dv(config_.embed_dim, L);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto doh = dheads.middleRows(h * dh, dh);
      const auto qh = c.q.middleRows(h * dh, dh);
      const auto kh = c.k.middleRows(h * dh, dh);
      const auto vh = c.v.middleRows(h * dh, dh);
      const Mat& a = c.attn[h];

      dv.middleRows(h * dh, dh) = doh * a;
      Mat da = doh.transpose() * vh;  // L x L
      Mat ds(L, L);
      for (Eigen::Index i = 0; i < L; ++i) {
        const S dot = (da.row(i).array() * a.row(i).array()).sum();
        ds.row(i) = (a.row(i).array() * (da.row(i).array() - dot)).matrix();
      }
      dq.middleRows(h * dh, dh) = (kh * ds.transpose()) * scale;
      dk.middleRows(h * dh, dh) = (qh * ds) * scale;
    }

    Mat da_in = params_.view(lr.wq).transpose() * dq +
                params_.view(lr.wk).transpose() * dk +
                params_.view(lr.wv).transpose() * dv;
    grads.view(lr.wq) += dq * c.ln1_out.transpose();
    grads.view(lr.bq).col(0) += dq.rowwise().sum();
    grads.view(lr.wk) += dk * c.ln1_out.transpose();
    grads.view(lr.bk).col(0) += dk.rowwise().sum();
    grads.view(lr.wv) += dv * c.ln1_out.transpose();
    grads.view(lr.bv).col(0) += dv.rowwise().sum();

    Mat dx_ln;
    layer_norm_backward(da_in, c.ln1, lr.ln1_g, lr.ln1_b, grads, dx_ln);
    dx = dx1 + dx_ln;  // residual
  }
  return dx;
}

template <typename S>
typename Network<S>::Vec Network<S>::forward_video(const Mat& frames,
                                                   std::size_t true_len,
                                                   VideoCache* cache) const {
  if (true_len < 1) throw ValidationError("embed_video: true_len must be >= 1");
  if (true_len > config_.max_video_len)
    throw ValidationError("embed_video: sequence longer than max_video_len");
  if (static_cast<std::size_t>(frames.cols()) < true_len)
    throw ValidationError("embed_video: fewer frames than true_len");
  if (static_cast<std::size_t>(frames.rows()) != config_.input_dim)
    throw ValidationError("embed_video: frame feature size != input_dim");
  Mat x0 = frames.leftCols(true_len);
  if (!x0.allFinite()) throw ValidationError("embed_video: non-finite input");

  Mat h1 = (params_.view(vp_w1_) * x0).colwise() + params_.view(vp_b1_).col(0);
  Mat g1 = h1.unaryExpr([](S t) { return gelu(t); });
  Mat xv = (params_.view(vp_w2_) * g1).colwise() + params_.view(vp_b2_).col(0);
  xv += params_.view(video_stack_.pos).leftCols(true_len);

  Mat out = run_stack(video_stack_, std::move(xv), cache ? &cache->stack : nullptr);
  Vec pooled = out.leftCols(true_len).rowwise().mean();

  Vec z = pooled;
  if (mm_video_ != SIZE_MAX) z = params_.view(mm_video_) * pooled;
  if (cache) {
    cache->x0 = std::move(x0);
    cache->h1 = std::move(h1);
    cache->g1 = std::move(g1);
    cache->stack_out = std::move(out);
    cache->pooled = std::move(pooled);
  }
  return z;
}

template <typename S>
typename Network<S>::Vec Network<S>::forward_text(const std::vector<int>& ids,
                                                  std::size_t true_len,
                                                  TextCache* cache) const {
  if (true_len < 1) throw ValidationError("embed_text: true_len must be >= 1");
  if (true_len > config_.max_text_len)
    throw ValidationError("embed_text: sequence longer than max_text_len");
  if (ids.size() < true_len) throw ValidationError("embed_text: fewer ids than true_len");

  const auto emb = params_.view(tok_emb_);
  const auto pos = params_.view(text_stack_.pos);
  Mat x(config_.embed_dim, true_len);
  for (std::size_t i = 0; i < true_len; ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size)
      throw ValidationError("embed_text: token id out of vocabulary range");
    x.col(static_cast<Eigen::Index>(i)) =
        emb.col(id) + pos.col(static_cast<Eigen::Index>(i));
  }

  Mat out = run_stack(text_stack_, std::move(x), cache ? &cache->stack : nullptr);
  Vec pooled = out.rowwise().mean();

  Vec z = pooled;
  if (mm_text_ != SIZE_MAX) z = params_.view(mm_text_) * pooled;
  if (cache) {
    cache->stack_out = std::move(out);
    cache->pooled = std::move(pooled);
  }
  return z;
}

template <typename S>
typename Network<S>::Vec Network<S>::embed_video(const Mat& frames,
                                                 std::size_t true_len) const {
  return forward_video(frames, true_len, nullptr);
}

template <typename S>
typename Network<S>::Vec Network<S>::embed_text(const std::vector<int>& ids,
                                                std::size_t true_len) const {
  return forward_text(ids, true_len, nullptr);
}

template <typename S>
void Network<S>::backward_video(const Mat& frames, std::size_t true_len,
                                const Vec& d_embedding, ParamStore<S>& grads) const {
  VideoCache cache;
  forward_video(frames, true_len, &cache);

  Vec dpooled = d_embedding;
  if (mm_video_ != SIZE_MAX) {
    grads.view(mm_video_) += d_embedding * cache.pooled.transpose();
    dpooled = params_.view(mm_video_).transpose() * d_embedding;
  }

  const Eigen::Index L = static_cast<Eigen::Index>(true_len);
  Mat dout = Mat::Zero(config_.embed_dim, L);
  dout.colwise() += (dpooled / static_cast<S>(true_len)).eval();

  Mat dxv = run_stack_backward(video_stack_, cache.stack, std::move(dout), grads);

  grads.view(video_stack_.pos).leftCols(L) += dxv;
  grads.view(vp_w2_) += dxv * cache.g1.transpose();
  grads.view(vp_b2_).col(0) += dxv.rowwise().sum();
  Mat dg1 = params_.view(vp_w2_).transpose() * dxv;
  Mat dh1 = dg1.array() * cache.h1.unaryExpr([](S t) { return gelu_grad(t); }).array();
  grads.view(vp_w1_) += dh1 * cache.x0.transpose();
  grads.view(vp_b1_).col(0) += dh1.rowwise().sum();
}

template <typename S>
void Network<S>::backward_text(const std::vector<int>& ids, std::size_t true_len,
                               const Vec& d_embedding, ParamStore<S>& grads) const {
  TextCache cache;
  forward_text(ids, true_len, &cache);

  Vec dpooled = d_embedding;
  if (mm_text_ != SIZE_MAX) {
    grads.view(mm_text_) += d_embedding * cache.pooled.transpose();
    dpooled = params_.view(mm_text_).transpose() * d_embedding;
  }

  const Eigen::Index L = static_cast<Eigen::Index>(true_len);
  Mat dout = Mat::Zero(config_.embed_dim, L);
  dout.colwise() += (dpooled / static_cast<S>(true_len)).eval();

  Mat dx = run_stack_backward(text_stack_, cache.stack, std::move(dout), grads);

  auto demb = grads.view(tok_emb_);
  auto dpos = grads.view(text_stack_.pos);
  for (std::size_t i = 0; i < true_len; ++i) {
    demb.col(ids[i]) += dx.col(static_cast<Eigen::Index>(i));
    dpos.col(static_cast<Eigen::Index>(i)) += dx.col(static_cast<Eigen::Index>(i));
  }
}

template <typename S>
Eigen::MatrixXd similarity_matrix(
    const std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>>& video_embeddings,
    const std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>>& text_embeddings,
    bool cosine) {
  if (video_embeddings.size() != text_embeddings.size())
    throw ValidationError("similarity_matrix: batch sizes differ");
  const std::size_t n = video_embeddings.size();
  if (n == 0) throw ValidationError("similarity_matrix: empty batch");

  auto normalized = [](const Eigen::Matrix<S, Eigen::Dynamic, 1>& v) {
    const double norm = v.template cast<double>().norm();
    Eigen::VectorXd out = v.template cast<double>();
    if (norm > 0) out /= norm;
    return out;
  };

  Eigen::MatrixXd s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd zv = cosine ? normalized(video_embeddings[i])
                                      : video_embeddings[i].template cast<double>();
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::VectorXd zt = cosine ? normalized(text_embeddings[j])
                                        : text_embeddings[j].template cast<double>();
      if (zv.size() != zt.size())
        throw ValidationError("similarity_matrix: embedding dimensions differ");
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = zv.dot(zt);
    }
  }
  return s;
}

template class Network<float>;
template class Network<double>;
template Eigen::MatrixXd similarity_matrix<float>(const std::vector<Eigen::VectorXf>&,
                                                  const std::vector<Eigen::VectorXf>&,
                                                  bool);
template Eigen::MatrixXd similarity_matrix<double>(const std::vector<Eigen::VectorXd>&,
                                                   const std::vector<Eigen::VectorXd>&,
                                                   bool);

}  // namespace signembed::nn
