#include "halluguard/tinylm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "blocks.hpp"
#include "halluguard/error.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double batch_loss(const TinyLM& model, const std::vector<Sequence>& batch, std::vector<double>* grads) {
  const auto& cfg = model.config();
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  std::size_t max_len = 0;
  for (const auto& s : batch) {
    if (s.tokens.size() < 2) throw Error(ErrorCode::kInvalidArgument, "sequence shorter than 2 tokens");
    if (s.loss_from < 1) throw Error(ErrorCode::kInvalidArgument, "loss_from must be >= 1");
    max_len = std::max(max_len, s.tokens.size());
  }
  const int n_pos = static_cast<int>(max_len) - 1;
  if (n_pos > cfg.context_len) {
    throw Error(ErrorCode::kContextOverflow, "sequence of " + std::to_string(max_len) +
                                                 " tokens exceeds context length " +
                                                 std::to_string(cfg.context_len));
  }
  const auto b_count = static_cast<Eigen::Index>(batch.size());
  auto supervised = [&](std::size_t b, int p) {
    const int target = p + 1;
    return target < static_cast<int>(batch[b].tokens.size()) && target >= batch[b].loss_from;
  };

  KVCache kv;
  std::vector<PositionCache> caches(static_cast<std::size_t>(n_pos));
  MatrixXd carry = MatrixXd::Zero(b_count, cfg.d_model);
  MatrixXd carry_out;
  std::vector<TokenId> tokens(batch.size());
  double loss = 0.0;
  std::size_t count = 0;
  for (int p = 0; p < n_pos; ++p) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      tokens[b] = p < static_cast<int>(batch[b].tokens.size()) ? batch[b].tokens[p] : Vocabulary::kPad;
    }
    detail::forward_position(model, p, tokens, carry, kv, nullptr, caches[p], carry_out);
    carry = carry_out;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (!supervised(b, p)) continue;
      const VectorXd row = caches[p].logits.row(static_cast<Eigen::Index>(b)).transpose();
      loss -= log_softmax(row)(batch[b].tokens[p + 1]);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "batch has no supervised targets");
  loss /= static_cast<double>(count);
  if (!grads) return loss;

  grads->assign(model.parameter_count(), 0.0);
  auto G = [&](int index) { return model.tensor_in(*grads, index); };
  detail::KVGrad dkv;
  dkv.reset(cfg.n_layers, n_pos, static_cast<int>(b_count), cfg.d_model);
  MatrixXd dcarry_next = MatrixXd::Zero(b_count, cfg.d_model);
  const auto unembed = model.tensor(model.unembed());
  const auto carry_w = model.tensor(TinyLM::kCarry);
  for (int p = n_pos - 1; p >= 0; --p) {
    const PositionCache& c = caches[p];
    MatrixXd dlogits = MatrixXd::Zero(b_count, cfg.vocab_size);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (!supervised(b, p)) continue;
      const VectorXd row = c.logits.row(static_cast<Eigen::Index>(b)).transpose();
      VectorXd probs = log_softmax(row).array().exp();
      probs(batch[b].tokens[p + 1]) -= 1.0;
      dlogits.row(static_cast<Eigen::Index>(b)) = probs.transpose() / static_cast<double>(count);
    }
    G(model.unembed()).noalias() += c.f.transpose() * dlogits;
    G(model.unembed_bias()).row(0) += dlogits.colwise().sum();
    const MatrixXd df = dlogits * unembed.transpose();
    auto dgf = G(model.final_ln_gain());
    auto dbf = G(model.final_ln_bias());
    MatrixXd dx = detail::layer_norm_backward(df, c.xhatf, c.rstdf, model.tensor(model.final_ln_gain()),
                                              &dgf, &dbf);
    for (int l = cfg.n_layers - 1; l >= 0; --l) {
      if (l + 1 == cfg.mid_layer()) dx += dcarry_next;
      detail::backward_block(model, l, p, c.blocks[l], kv, dx, dkv, grads);
    }
    auto dtok = G(TinyLM::kTokEmb);
    for (std::size_t b = 0; b < batch.size(); ++b) dtok.row(c.tokens[b]) += dx.row(static_cast<Eigen::Index>(b));
    G(TinyLM::kPosEmb).row(p) += dx.colwise().sum();
    G(TinyLM::kCarry).noalias() += c.carry_in.transpose() * dx;
    dcarry_next = dx * carry_w.transpose();
  }
  return loss;
}

TrainResult train_tiny_lm(TinyLM& model, const std::vector<Sequence>& corpus, const TrainConfig& config) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training corpus");
  if (config.steps < 0 || config.batch < 1 || !(config.lr > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "need steps >= 0, batch >= 1 and lr > 0");
  }
  std::mt19937_64 rng(derive_seed(config.seed, "tinylm.train"));
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  std::vector<double>& params = model.parameters();
  const std::size_t n = params.size();
  std::vector<double> m(n, 0.0), v(n, 0.0), grads;
  std::vector<Sequence> batch(static_cast<std::size_t>(config.batch));
  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(config.steps));
  const double pi = 3.14159265358979323846;

  for (int step = 0; step < config.steps; ++step) {
    for (auto& s : batch) s = corpus[pick(rng)];
    const double loss = batch_loss(model, batch, &grads);
    if (!std::isfinite(loss)) throw DivergenceError(step);
    result.loss_curve.push_back(loss);

    double norm = 0.0;
    for (double g : grads) norm += g * g;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm)) throw DivergenceError(step);
    const double clip = config.grad_clip > 0.0 && norm > config.grad_clip ? config.grad_clip / norm : 1.0;

    double lr = config.lr;
    if (step < config.warmup) {
      lr *= static_cast<double>(step + 1) / config.warmup;
    } else if (config.steps > config.warmup) {
      const double progress = static_cast<double>(step - config.warmup) / (config.steps - config.warmup);
      const double cosine = 0.5 * (1.0 + std::cos(pi * progress));
      lr *= config.final_lr_fraction + (1.0 - config.final_lr_fraction) * cosine;
    }
    const double bc1 = 1.0 - std::pow(config.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(config.beta2, step + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grads[i] * clip;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.adam_eps);
    }
    if (config.log_every > 0 && (step + 1) % config.log_every == 0) {
      std::fprintf(stderr, "step %d loss %.5f\n", step + 1, loss);
    }
  }
  return result;
}

}  // namespace halluguard::tinylm
