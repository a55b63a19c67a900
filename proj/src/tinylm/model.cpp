#include "halluguard/tinylm/model.hpp"

#include <cmath>
#include <random>

#include "blocks.hpp"
#include "halluguard/error.hpp"

namespace halluguard::tinylm {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstMap = Eigen::Map<const MatrixXd>;
using MutMap = Eigen::Map<MatrixXd>;

void TinyLMConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(d_model, "d_model");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(d_ff, "d_ff");
  positive(context_len, "context_len");
  if (d_model % n_heads != 0) {
    throw Error(ErrorCode::kInvalidArgument, "d_model must be divisible by n_heads");
  }
  if (context_len < 2) throw Error(ErrorCode::kInvalidArgument, "context_len must be >= 2");
}

TinyLM::TinyLM(const TinyLMConfig& config) : config_(config) {
  config_.validate();
  const int d = config_.d_model, v = config_.vocab_size, ff = config_.d_ff;
  auto add = [&](std::string name, int rows, int cols) {
    const std::size_t offset = tensors_.empty() ? 0
                                                : tensors_.back().offset +
                                                      static_cast<std::size_t>(tensors_.back().rows) *
                                                          static_cast<std::size_t>(tensors_.back().cols);
    tensors_.push_back({std::move(name), rows, cols, offset});
  };
  add("tok_emb", v, d);
  add("pos_emb", config_.context_len, d);
  add("carry", d, d);
  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    add(p + "ln1_g", 1, d);
    add(p + "ln1_b", 1, d);
    add(p + "wq", d, d);
    add(p + "wk", d, d);
    add(p + "wv", d, d);
    add(p + "wo", d, d);
    add(p + "ln2_g", 1, d);
    add(p + "ln2_b", 1, d);
    add(p + "w1", d, ff);
    add(p + "b1", 1, ff);
    add(p + "w2", ff, d);
    add(p + "b2", 1, d);
  }
  add("lnf_g", 1, d);
  add("lnf_b", 1, d);
  add("unembed", d, v);
  add("unembed_b", 1, v);
  params_.assign(tensors_.back().offset + static_cast<std::size_t>(tensors_.back().rows) *
                                              static_cast<std::size_t>(tensors_.back().cols),
                 0.0);

  std::mt19937_64 rng(derive_seed(config_.seed, "tinylm.init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](int index, double stddev) {
    MutMap t = tensor_in(params_, index);
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = stddev * normal(rng);
    }
  };
  auto ones = [&](int index) { tensor_in(params_, index).setOnes(); };
  const double depth_scale = 1.0 / std::sqrt(2.0 * config_.n_layers);
  fill(kTokEmb, 0.5);
  fill(kPosEmb, 0.5);
  fill(kCarry, 0.5 / std::sqrt(d));
  for (int l = 0; l < config_.n_layers; ++l) {
    ones(block_tensor(l, kLn1G));
    fill(block_tensor(l, kWq), 1.0 / std::sqrt(d));
    fill(block_tensor(l, kWk), 1.0 / std::sqrt(d));
    fill(block_tensor(l, kWv), 1.0 / std::sqrt(d));
    fill(block_tensor(l, kWo), depth_scale / std::sqrt(d));
    ones(block_tensor(l, kLn2G));
    fill(block_tensor(l, kW1), 1.0 / std::sqrt(d));
    fill(block_tensor(l, kW2), depth_scale / std::sqrt(ff));
  }
  ones(final_ln_gain());
  fill(unembed(), 1.0 / std::sqrt(d));
}

Eigen::Map<const MatrixXd> TinyLM::tensor(int index) const {
  const TensorInfo& t = tensors_.at(static_cast<std::size_t>(index));
  return ConstMap(params_.data() + t.offset, t.rows, t.cols);
}

Eigen::Map<MatrixXd> TinyLM::tensor_in(std::vector<double>& buffer, int index) const {
  const TensorInfo& t = tensors_.at(static_cast<std::size_t>(index));
  return MutMap(buffer.data() + t.offset, t.rows, t.cols);
}

VectorXd log_softmax(const VectorXd& logits) {
  return logits.array() - log_sum_exp(logits);
}

double log_sum_exp(const VectorXd& logits) {
  const double mx = logits.maxCoeff();
  return mx + std::log((logits.array() - mx).exp().sum());
}

namespace detail {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

MatrixXd gelu(const MatrixXd& u) {
  return u.unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  });
}

MatrixXd gelu_grad(const MatrixXd& u) {
  return u.unaryExpr([](double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  });
}

void softmax_rows(MatrixXd& s) {
  for (Eigen::Index b = 0; b < s.rows(); ++b) {
    const double mx = s.row(b).maxCoeff();
    s.row(b) = (s.row(b).array() - mx).exp();
    s.row(b) /= s.row(b).sum();
  }
}

}  // namespace

void layer_norm(const MatrixXd& x, const ConstMap& gain, const ConstMap& bias, MatrixXd& xhat,
                VectorXd& rstd, MatrixXd& y) {
  const auto d = static_cast<double>(x.cols());
  const VectorXd mean = x.rowwise().sum() / d;
  xhat = x.colwise() - mean;
  rstd = ((xhat.array().square().rowwise().sum() / d) + kLnEps).rsqrt();
  xhat = rstd.asDiagonal() * xhat;
  y = (xhat.array().rowwise() * gain.row(0).array()).matrix();
  y.rowwise() += bias.row(0);
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const MatrixXd& xhat, const VectorXd& rstd,
                             const ConstMap& gain, MutMap* dgain, MutMap* dbias) {
  if (dgain) dgain->row(0) += (dy.cwiseProduct(xhat)).colwise().sum();
  if (dbias) dbias->row(0) += dy.colwise().sum();
  const MatrixXd dxhat = (dy.array().rowwise() * gain.row(0).array()).matrix();
  const auto d = static_cast<double>(dy.cols());
  const VectorXd mean_dxhat = dxhat.rowwise().sum() / d;
  const VectorXd mean_prod = dxhat.cwiseProduct(xhat).rowwise().sum() / d;
  MatrixXd dx = dxhat.colwise() - mean_dxhat;
  dx -= mean_prod.asDiagonal() * xhat;
  return rstd.asDiagonal() * dx;
}

MatrixXd layer_norm_jvp(const MatrixXd& dx, const MatrixXd& xhat, const VectorXd& rstd,
                        const ConstMap& gain) {
  const auto d = static_cast<double>(dx.cols());
  const VectorXd mean_dx = dx.rowwise().sum() / d;
  const VectorXd mean_prod = dx.cwiseProduct(xhat).rowwise().sum() / d;
  MatrixXd dxhat = dx.colwise() - mean_dx;
  dxhat -= mean_prod.asDiagonal() * xhat;
  dxhat = rstd.asDiagonal() * dxhat;
  return (dxhat.array().rowwise() * gain.row(0).array()).matrix();
}

void ensure_kv(KVCache& kv, int layers, int positions) {
  kv.k.resize(static_cast<std::size_t>(layers));
  kv.v.resize(static_cast<std::size_t>(layers));
  for (int l = 0; l < layers; ++l) {
    if (static_cast<int>(kv.k[l].size()) < positions) {
      kv.k[l].resize(static_cast<std::size_t>(positions));
      kv.v[l].resize(static_cast<std::size_t>(positions));
    }
  }
}

void forward_block(const TinyLM& m, int l, int p, MatrixXd& x, KVCache& kv, BlockCache& cache) {
  const auto& cfg = m.config();
  const int dh = cfg.head_dim();
  const Eigen::Index batch = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto w = [&](TinyLM::BlockTensor t) { return m.tensor(m.block_tensor(l, t)); };

  cache.x_in = x;
  layer_norm(x, w(TinyLM::kLn1G), w(TinyLM::kLn1B), cache.xhat1, cache.rstd1, cache.a);
  cache.q = cache.a * w(TinyLM::kWq);
  kv.k[l][p] = cache.a * w(TinyLM::kWk);
  kv.v[l][p] = cache.a * w(TinyLM::kWv);

  cache.att.resize(static_cast<std::size_t>(cfg.n_heads));
  cache.ctx = MatrixXd::Zero(batch, cfg.d_model);
  for (int h = 0; h < cfg.n_heads; ++h) {
    const Eigen::Index c0 = h * dh;
    MatrixXd s(batch, p + 1);
    for (int j = 0; j <= p; ++j) {
      s.col(j) = cache.q.middleCols(c0, dh).cwiseProduct(kv.k[l][j].middleCols(c0, dh)).rowwise().sum() * scale;
    }
    softmax_rows(s);
    for (int j = 0; j <= p; ++j) {
      cache.ctx.middleCols(c0, dh) +=
          (kv.v[l][j].middleCols(c0, dh).array().colwise() * s.col(j).array()).matrix();
    }
    cache.att[h] = std::move(s);
  }
  x += cache.ctx * w(TinyLM::kWo);
  cache.x_mid = x;

  layer_norm(x, w(TinyLM::kLn2G), w(TinyLM::kLn2B), cache.xhat2, cache.rstd2, cache.c);
  cache.u = cache.c * w(TinyLM::kW1);
  cache.u.rowwise() += w(TinyLM::kB1).row(0);
  cache.g = gelu(cache.u);
  x += cache.g * w(TinyLM::kW2);
  x.rowwise() += w(TinyLM::kB2).row(0);
}

void forward_position(const TinyLM& m, int p, const std::vector<TokenId>& tokens,
                      const MatrixXd& carry_in, KVCache& kv, const MatrixXd* noise,
                      PositionCache& out, MatrixXd& carry_out) {
  const auto& cfg = m.config();
  const auto batch = static_cast<Eigen::Index>(tokens.size());
  if (p >= cfg.context_len) {
    throw Error(ErrorCode::kContextOverflow,
                "position " + std::to_string(p) + " exceeds context length " +
                    std::to_string(cfg.context_len));
  }
  ensure_kv(kv, cfg.n_layers, p + 1);
  const ConstMap tok = m.tensor(TinyLM::kTokEmb);
  const ConstMap pos = m.tensor(TinyLM::kPosEmb);
  MatrixXd x(batch, cfg.d_model);
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (tokens[b] >= static_cast<TokenId>(cfg.vocab_size)) {
      throw Error(ErrorCode::kOutOfRange, "token id " + std::to_string(tokens[b]) + " outside vocabulary");
    }
    x.row(b) = tok.row(tokens[b]) + pos.row(p);
  }
  x += carry_in * m.tensor(TinyLM::kCarry);

  out.position = p;
  out.tokens = tokens;
  out.carry_in = carry_in;
  out.blocks.resize(static_cast<std::size_t>(cfg.n_layers));
  for (int l = 0; l < cfg.n_layers; ++l) {
    forward_block(m, l, p, x, kv, out.blocks[l]);
    if (l + 1 == cfg.mid_layer()) {
      out.h = x;
      if (noise) x += *noise;
      carry_out = x;
    }
  }
  out.xf = x;
  layer_norm(x, m.tensor(m.final_ln_gain()), m.tensor(m.final_ln_bias()), out.xhatf, out.rstdf, out.f);
  out.logits = out.f * m.tensor(m.unembed());
  out.logits.rowwise() += m.tensor(m.unembed_bias()).row(0);
}

void KVGrad::reset(int layers, int positions, int batch, int d) {
  dk.assign(static_cast<std::size_t>(layers),
            std::vector<MatrixXd>(static_cast<std::size_t>(positions), MatrixXd::Zero(batch, d)));
  dv = dk;
}

void backward_block(const TinyLM& m, int l, int p, const BlockCache& cache, const KVCache& kv,
                    MatrixXd& dx, KVGrad& dkv, std::vector<double>* grads) {
  const auto& cfg = m.config();
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto w = [&](TinyLM::BlockTensor t) { return m.tensor(m.block_tensor(l, t)); };
  auto g = [&](TinyLM::BlockTensor t) { return m.tensor_in(*grads, m.block_tensor(l, t)); };

  // MLP: out = x_mid + gelu(LN2(x_mid) W1 + b1) W2 + b2
  if (grads) {
    g(TinyLM::kW2).noalias() += cache.g.transpose() * dx;
    g(TinyLM::kB2).row(0) += dx.colwise().sum();
  }
  const MatrixXd du = (dx * w(TinyLM::kW2).transpose()).cwiseProduct(gelu_grad(cache.u));
  if (grads) {
    g(TinyLM::kW1).noalias() += cache.c.transpose() * du;
    g(TinyLM::kB1).row(0) += du.colwise().sum();
  }
  const MatrixXd dc = du * w(TinyLM::kW1).transpose();
  if (grads) {
    MutMap dg = g(TinyLM::kLn2G), db = g(TinyLM::kLn2B);
    dx += layer_norm_backward(dc, cache.xhat2, cache.rstd2, w(TinyLM::kLn2G), &dg, &db);
  } else {
    dx += layer_norm_backward(dc, cache.xhat2, cache.rstd2, w(TinyLM::kLn2G), nullptr, nullptr);
  }

  // Attention: x_mid = x_in + ctx Wo
  if (grads) g(TinyLM::kWo).noalias() += cache.ctx.transpose() * dx;
  const MatrixXd dctx = dx * w(TinyLM::kWo).transpose();
  MatrixXd dq = MatrixXd::Zero(dx.rows(), cfg.d_model);
  for (int h = 0; h < cfg.n_heads; ++h) {
    const Eigen::Index c0 = h * dh;
    const MatrixXd& att = cache.att[h];
    const auto dctx_h = dctx.middleCols(c0, dh);
    MatrixXd dw(dx.rows(), p + 1);
    for (int j = 0; j <= p; ++j) {
      dw.col(j) = dctx_h.cwiseProduct(kv.v[l][j].middleCols(c0, dh)).rowwise().sum();
      dkv.dv[l][j].middleCols(c0, dh) += (dctx_h.array().colwise() * att.col(j).array()).matrix();
    }
    const VectorXd dot = att.cwiseProduct(dw).rowwise().sum();
    const MatrixXd ds = att.cwiseProduct(dw.colwise() - dot) * scale;
    for (int j = 0; j <= p; ++j) {
      dq.middleCols(c0, dh) += (kv.k[l][j].middleCols(c0, dh).array().colwise() * ds.col(j).array()).matrix();
      dkv.dk[l][j].middleCols(c0, dh) +=
          (cache.q.middleCols(c0, dh).array().colwise() * ds.col(j).array()).matrix();
    }
  }
  const MatrixXd& dk = dkv.dk[l][p];
  const MatrixXd& dv = dkv.dv[l][p];
  if (grads) {
    g(TinyLM::kWq).noalias() += cache.a.transpose() * dq;
    g(TinyLM::kWk).noalias() += cache.a.transpose() * dk;
    g(TinyLM::kWv).noalias() += cache.a.transpose() * dv;
  }
  const MatrixXd da = dq * w(TinyLM::kWq).transpose() + dk * w(TinyLM::kWk).transpose() +
                      dv * w(TinyLM::kWv).transpose();
  if (grads) {
    MutMap dg = g(TinyLM::kLn1G), db = g(TinyLM::kLn1B);
    dx += layer_norm_backward(da, cache.xhat1, cache.rstd1, w(TinyLM::kLn1G), &dg, &db);
  } else {
    dx += layer_norm_backward(da, cache.xhat1, cache.rstd1, w(TinyLM::kLn1G), nullptr, nullptr);
  }
}

MatrixXd jvp_block(const TinyLM& m, int l, int p, const BlockCache& cache, const KVCache& kv,
                   const MatrixXd& dx_in) {
  const auto& cfg = m.config();
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto w = [&](TinyLM::BlockTensor t) { return m.tensor(m.block_tensor(l, t)); };

  const MatrixXd da = layer_norm_jvp(dx_in, cache.xhat1, cache.rstd1, w(TinyLM::kLn1G));
  const MatrixXd dq = da * w(TinyLM::kWq);
  const MatrixXd dk = da * w(TinyLM::kWk);
  const MatrixXd dv = da * w(TinyLM::kWv);
  MatrixXd dctx = MatrixXd::Zero(dx_in.rows(), cfg.d_model);
  for (int h = 0; h < cfg.n_heads; ++h) {
    const Eigen::Index c0 = h * dh;
    const MatrixXd& att = cache.att[h];
    MatrixXd ds(dx_in.rows(), p + 1);
    for (int j = 0; j <= p; ++j) {
      ds.col(j) = dq.middleCols(c0, dh).cwiseProduct(kv.k[l][j].middleCols(c0, dh)).rowwise().sum();
    }
    ds.col(p) += cache.q.middleCols(c0, dh).cwiseProduct(dk.middleCols(c0, dh)).rowwise().sum();
    ds *= scale;
    const VectorXd dot = att.cwiseProduct(ds).rowwise().sum();
    const MatrixXd dw = att.cwiseProduct(ds.colwise() - dot);
    for (int j = 0; j <= p; ++j) {
      dctx.middleCols(c0, dh) += (kv.v[l][j].middleCols(c0, dh).array().colwise() * dw.col(j).array()).matrix();
    }
    dctx.middleCols(c0, dh) += (dv.middleCols(c0, dh).array().colwise() * att.col(p).array()).matrix();
  }
  const MatrixXd dx_mid = dx_in + dctx * w(TinyLM::kWo);
  const MatrixXd dc = layer_norm_jvp(dx_mid, cache.xhat2, cache.rstd2, w(TinyLM::kLn2G));
  const MatrixXd dg = (dc * w(TinyLM::kW1)).cwiseProduct(gelu_grad(cache.u));
  return dx_mid + dg * w(TinyLM::kW2);
}

}  // namespace detail

Runner::Runner(const TinyLM& model, int batch) : model_(&model), batch_(batch) {
  if (batch < 1) throw Error(ErrorCode::kInvalidArgument, "batch must be >= 1");
  carry_ = MatrixXd::Zero(batch, model.config().d_model);
}

const MatrixXd& Runner::feed(const std::vector<TokenId>& tokens, const MatrixXd* noise,
                             PositionCache* record) {
  if (static_cast<int>(tokens.size()) != batch_) {
    throw Error(ErrorCode::kDimensionMismatch, "expected one token per batch row");
  }
  PositionCache local;
  PositionCache& cache = record ? *record : local;
  MatrixXd carry_out;
  detail::forward_position(*model_, position_, tokens, carry_, kv_, noise, cache, carry_out);
  carry_ = std::move(carry_out);
  h_ = cache.h;
  logits_ = cache.logits;
  ++position_;
  return logits_;
}

void Runner::reorder(const std::vector<int>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "reorder needs at least one row");
  for (int r : rows) {
    if (r < 0 || r >= batch_) throw Error(ErrorCode::kOutOfRange, "reorder row out of range");
  }
  auto pick = [&](const MatrixXd& m) {
    if (m.rows() == 0) return m;
    MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
  };
  for (auto* side : {&kv_.k, &kv_.v}) {
    for (auto& layer : *side) {
      for (int p = 0; p < position_; ++p) layer[p] = pick(layer[p]);
    }
  }
  carry_ = pick(carry_);
  h_ = pick(h_);
  logits_ = pick(logits_);
  batch_ = static_cast<int>(rows.size());
}

}  // namespace halluguard::tinylm
