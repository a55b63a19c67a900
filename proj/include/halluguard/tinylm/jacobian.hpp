#pragma once

#include <vector>

#include <Eigen/Dense>

#include "halluguard/amplification.hpp"
#include "halluguard/bundle.hpp"
#include "halluguard/score.hpp"
#include "halluguard/tinylm/model.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

// Step maps h_{p-1} -> h_p of a fixed token sequence (no state noise). The
// keys and values of positions before p are held at their replayed values,
// so F_p depends on the carry alone.
class StepJacobian {
 public:
  StepJacobian(const TinyLM& model, const std::vector<TokenId>& tokens);

  int positions() const { return static_cast<int>(caches_.size()); }
  int dim() const { return model_->config().d_model; }

  // Mid-layer state at position p.
  Eigen::VectorXd state(int p) const;
  // F_p evaluated at an arbitrary carry; p >= 1.
  Eigen::VectorXd step_map(int p, const Eigen::VectorXd& carry) const;
  // dh_p/dh_{p-1} applied to v, and its transpose applied to u; p >= 1.
  Eigen::VectorXd jvp(int p, const Eigen::VectorXd& v) const;
  Eigen::VectorXd vjp(int p, const Eigen::VectorXd& u) const;
  // The full d x d Jacobian, column by column through jvp.
  Eigen::MatrixXd dense(int p) const;

 private:
  void check(int p) const;

  const TinyLM* model_;
  std::vector<TokenId> tokens_;
  KVCache kv_;
  std::vector<PositionCache> caches_;
};

// Exact amplification of a continuation: step t is the map into the state
// that predicted generated[t], so there are generated.size() steps. The
// context must hold at least two tokens.
AmplificationEstimate exact_amplification(const TinyLM& model, const std::vector<TokenId>& context,
                                          const std::vector<TokenId>& generated,
                                          const PowerIterationOptions& options = {});

// Amplifier for the generations of a bundle sampled from `model`; the prompt
// is re-encoded with `vocab`. Noise injected while sampling is not replayed.
ExactAmplifier make_exact_amplifier(const TinyLM& model, const Vocabulary& vocab,
                                    const TrajectoryBundle& bundle,
                                    const PowerIterationOptions& options = {});

}  // namespace halluguard::tinylm
