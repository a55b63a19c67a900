#pragma once

#include <cstdint>
#include <vector>

#include "halluguard/tinylm/model.hpp"

namespace halluguard::tinylm {

// tokens runs from BOS to EOS. Next-token loss covers predictions of
// tokens[i] for i >= loss_from (loss_from >= 1).
struct Sequence {
  std::vector<TokenId> tokens;
  int loss_from = 1;
};

struct TrainConfig {
  int steps = 4000;
  int batch = 32;
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  int warmup = 100;
  double final_lr_fraction = 0.1;  // cosine decay floor
  std::uint64_t seed = kDefaultSeed;
  int log_every = 0;  // 0 = silent
};

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per step
};

// Mean next-token cross-entropy over the supervised positions of `batch`;
// when `grads` is non-null it is resized to parameter_count() and receives
// the gradient.
double batch_loss(const TinyLM& model, const std::vector<Sequence>& batch,
                  std::vector<double>* grads = nullptr);

// Adam with linear warmup and cosine decay, batches drawn with replacement.
// Throws DivergenceError carrying the step index on a non-finite loss.
TrainResult train_tiny_lm(TinyLM& model, const std::vector<Sequence>& corpus,
                          const TrainConfig& config = {});

}  // namespace halluguard::tinylm
