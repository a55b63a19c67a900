#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "halluguard/bundle.hpp"
#include "halluguard/seed.hpp"

namespace halluguard::tinylm {

struct TinyLMConfig {
  int vocab_size = 0;
  int d_model = 32;
  int n_layers = 4;
  int n_heads = 2;
  int d_ff = 64;
  int context_len = 16;
  std::uint64_t seed = kDefaultSeed;

  // Blocks [0, mid_layer()) feed the recorded hidden state.
  int mid_layer() const { return (n_layers + 1) / 2; }
  int head_dim() const { return d_model / n_heads; }

  // Throws Error(kInvalidArgument) naming the offending field.
  void validate() const;
  bool operator==(const TinyLMConfig&) const = default;
};

// Pre-LN decoder-only transformer in double precision.
//
// The mid-layer state of the previous position is fed back into the input
// of the current one through a learned d x d map, so the state evolves as a
// recurrence h_t = F_t(h_{t-1}) once tokens are fixed. F_t is the step map
// whose Jacobian the amplification estimators measure.
class TinyLM {
 public:
  struct TensorInfo {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
  };

  // Global tensor indices; block l owns kBlockTensors consecutive tensors
  // starting at kFirstBlockTensor + l * kBlockTensors.
  static constexpr int kTokEmb = 0;
  static constexpr int kPosEmb = 1;
  static constexpr int kCarry = 2;
  static constexpr int kFirstBlockTensor = 3;
  static constexpr int kBlockTensors = 12;
  enum BlockTensor { kLn1G, kLn1B, kWq, kWk, kWv, kWo, kLn2G, kLn2B, kW1, kB1, kW2, kB2 };

  explicit TinyLM(const TinyLMConfig& config);

  const TinyLMConfig& config() const { return config_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  int block_tensor(int layer, BlockTensor which) const {
    return kFirstBlockTensor + layer * kBlockTensors + which;
  }
  int final_ln_gain() const { return kFirstBlockTensor + config_.n_layers * kBlockTensors; }
  int final_ln_bias() const { return final_ln_gain() + 1; }
  int unembed() const { return final_ln_gain() + 2; }
  int unembed_bias() const { return final_ln_gain() + 3; }

  Eigen::Map<const Eigen::MatrixXd> tensor(int index) const;
  // View of tensor `index` inside a buffer laid out like parameters().
  Eigen::Map<Eigen::MatrixXd> tensor_in(std::vector<double>& buffer, int index) const;

 private:
  TinyLMConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> params_;
};

// Activations of one block at one position for a batch of rows.
struct BlockCache {
  Eigen::MatrixXd x_in, xhat1, a;
  Eigen::VectorXd rstd1;
  Eigen::MatrixXd q;
  std::vector<Eigen::MatrixXd> att;  // per head, B x (p + 1)
  Eigen::MatrixXd ctx, x_mid, xhat2, c;
  Eigen::VectorXd rstd2;
  Eigen::MatrixXd u, g;
};

struct PositionCache {
  int position = 0;
  std::vector<TokenId> tokens;
  Eigen::MatrixXd carry_in;  // B x d
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd h;  // mid-layer state, before any injected noise
  Eigen::MatrixXd xf, xhatf, f;
  Eigen::VectorXd rstdf;
  Eigen::MatrixXd logits;  // B x V
};

// Keys and values per layer and position, each B x d.
struct KVCache {
  std::vector<std::vector<Eigen::MatrixXd>> k, v;
};

// Incremental batched decoding. Every row advances one position per feed().
class Runner {
 public:
  Runner(const TinyLM& model, int batch);

  int batch() const { return batch_; }
  int position() const { return position_; }

  // Feeds one token per row and returns the B x V logits. `noise` (B x d)
  // is added to the mid-layer state after it has been recorded, so it
  // reaches the upper blocks and the next position. Throws
  // Error(kContextOverflow) past context_len.
  const Eigen::MatrixXd& feed(const std::vector<TokenId>& tokens,
                              const Eigen::MatrixXd* noise = nullptr,
                              PositionCache* record = nullptr);

  const Eigen::MatrixXd& logits() const { return logits_; }
  const Eigen::MatrixXd& mid_state() const { return h_; }
  const KVCache& kv() const { return kv_; }

  // Rebuilds the batch from the given rows (repeats allowed).
  void reorder(const std::vector<int>& rows);

 private:
  const TinyLM* model_;
  int batch_;
  int position_ = 0;
  KVCache kv_;
  Eigen::MatrixXd carry_;
  Eigen::MatrixXd h_;
  Eigen::MatrixXd logits_;
};

// Log-softmax of one row of logits.
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);
double log_sum_exp(const Eigen::VectorXd& logits);

}  // namespace halluguard::tinylm
