#pragma once

// Shared forward, backward and tangent kernels of the tiny LM.

#include <vector>

#include <Eigen/Dense>

#include "halluguard/tinylm/model.hpp"

namespace halluguard::tinylm::detail {

inline constexpr double kLnEps = 1e-5;

void layer_norm(const Eigen::MatrixXd& x, const Eigen::Map<const Eigen::MatrixXd>& gain,
                const Eigen::Map<const Eigen::MatrixXd>& bias, Eigen::MatrixXd& xhat,
                Eigen::VectorXd& rstd, Eigen::MatrixXd& y);

// Gradient w.r.t. the LN input given the gradient w.r.t. its output.
// dgain/dbias (1 x d) are accumulated when non-null.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& xhat,
                                    const Eigen::VectorXd& rstd,
                                    const Eigen::Map<const Eigen::MatrixXd>& gain,
                                    Eigen::Map<Eigen::MatrixXd>* dgain,
                                    Eigen::Map<Eigen::MatrixXd>* dbias);

// Output tangent for an input tangent.
Eigen::MatrixXd layer_norm_jvp(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& xhat,
                               const Eigen::VectorXd& rstd,
                               const Eigen::Map<const Eigen::MatrixXd>& gain);

void ensure_kv(KVCache& kv, int layers, int positions);

// x: block input (B x d) in, block output out. Writes k, v at position p.
void forward_block(const TinyLM& m, int l, int p, Eigen::MatrixXd& x, KVCache& kv, BlockCache& cache);

// Full position: embeddings + carry, all blocks, final LN and logits.
// carry_out receives the (noisy) mid-layer state fed to position p + 1.
void forward_position(const TinyLM& m, int p, const std::vector<TokenId>& tokens,
                      const Eigen::MatrixXd& carry_in, KVCache& kv, const Eigen::MatrixXd* noise,
                      PositionCache& out, Eigen::MatrixXd& carry_out);

struct KVGrad {
  std::vector<std::vector<Eigen::MatrixXd>> dk, dv;  // [layer][position], B x d
  void reset(int layers, int positions, int batch, int d);
};

// dx: gradient w.r.t. the block output in, w.r.t. the block input out.
// Key/value gradients for positions <= p are accumulated into dkv; the
// entries for position p must already hold every later contribution.
void backward_block(const TinyLM& m, int l, int p, const BlockCache& cache, const KVCache& kv,
                    Eigen::MatrixXd& dx, KVGrad& dkv, std::vector<double>* grads);

// Tangent of the block output for a tangent of the block input at position
// p, with keys and values of earlier positions held fixed.
Eigen::MatrixXd jvp_block(const TinyLM& m, int l, int p, const BlockCache& cache, const KVCache& kv,
                          const Eigen::MatrixXd& dx_in);

}  // namespace halluguard::tinylm::detail
