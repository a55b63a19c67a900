#include "halluguard/tinylm/jacobian.hpp"

#include "blocks.hpp"
#include "halluguard/error.hpp"
#include "halluguard/tinylm/sample.hpp"

namespace halluguard::tinylm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

StepJacobian::StepJacobian(const TinyLM& model, const std::vector<TokenId>& tokens)
    : model_(&model), tokens_(tokens) {
  if (tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "empty token sequence");
  const int d = model.config().d_model;
  caches_.resize(tokens.size());
  MatrixXd carry = MatrixXd::Zero(1, d), carry_out;
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    detail::forward_position(model, static_cast<int>(p), {tokens[p]}, carry, kv_, nullptr, caches_[p], carry_out);
    carry = carry_out;
  }
}

void StepJacobian::check(int p) const {
  if (p < 1 || p >= positions()) {
    throw Error(ErrorCode::kOutOfRange, "step position " + std::to_string(p) + " outside [1, " +
                                            std::to_string(positions()) + ")");
  }
}

VectorXd StepJacobian::state(int p) const {
  if (p < 0 || p >= positions()) throw Error(ErrorCode::kOutOfRange, "state position out of range");
  return caches_[p].h.row(0).transpose();
}

VectorXd StepJacobian::step_map(int p, const VectorXd& carry) const {
  check(p);
  const auto& cfg = model_->config();
  KVCache kv = kv_;
  const MatrixXd c = carry.transpose();
  MatrixXd x = model_->tensor(TinyLM::kTokEmb).row(tokens_[p]) + model_->tensor(TinyLM::kPosEmb).row(p);
  x += c * model_->tensor(TinyLM::kCarry);
  BlockCache scratch;
  for (int l = 0; l < cfg.mid_layer(); ++l) detail::forward_block(*model_, l, p, x, kv, scratch);
  return x.row(0).transpose();
}

VectorXd StepJacobian::jvp(int p, const VectorXd& v) const {
  check(p);
  MatrixXd dx = v.transpose() * model_->tensor(TinyLM::kCarry);
  for (int l = 0; l < model_->config().mid_layer(); ++l) {
    dx = detail::jvp_block(*model_, l, p, caches_[p].blocks[l], kv_, dx);
  }
  return dx.row(0).transpose();
}

VectorXd StepJacobian::vjp(int p, const VectorXd& u) const {
  check(p);
  const auto& cfg = model_->config();
  detail::KVGrad dkv;
  dkv.reset(cfg.n_layers, p + 1, 1, cfg.d_model);
  MatrixXd dx = u.transpose();
  for (int l = cfg.mid_layer() - 1; l >= 0; --l) {
    detail::backward_block(*model_, l, p, caches_[p].blocks[l], kv_, dx, dkv, nullptr);
  }
  return (dx * model_->tensor(TinyLM::kCarry).transpose()).row(0).transpose();
}

MatrixXd StepJacobian::dense(int p) const {
  const int d = dim();
  MatrixXd j(d, d);
  for (int i = 0; i < d; ++i) j.col(i) = jvp(p, VectorXd::Unit(d, i));
  return j;
}

AmplificationEstimate exact_amplification(const TinyLM& model, const std::vector<TokenId>& context,
                                          const std::vector<TokenId>& generated,
                                          const PowerIterationOptions& options) {
  if (context.size() < 2) throw Error(ErrorCode::kInvalidArgument, "context needs at least two tokens");
  if (generated.empty()) throw Error(ErrorCode::kInsufficientSteps, "empty continuation");
  std::vector<TokenId> tokens = context;
  tokens.insert(tokens.end(), generated.begin(), generated.end() - 1);
  const StepJacobian jac(model, tokens);
  const int p0 = static_cast<int>(context.size()) - 1;
  const StepOperator jvp = [&](int t, const VectorXd& v) { return jac.jvp(p0 + t, v); };
  const StepOperator vjp = [&](int t, const VectorXd& u) { return jac.vjp(p0 + t, u); };
  return amplification_exact(jvp, vjp, static_cast<int>(generated.size()), jac.dim(), options);
}

ExactAmplifier make_exact_amplifier(const TinyLM& model, const Vocabulary& vocab,
                                    const TrajectoryBundle& bundle, const PowerIterationOptions& options) {
  const auto context = prompt_context(vocab, bundle.prompt_text);
  return [&model, &bundle, context, options](std::size_t g) {
    if (g >= bundle.generations.size()) throw Error(ErrorCode::kOutOfRange, "generation index out of range");
    return exact_amplification(model, context, bundle.generations[g].tokens, options);
  };
}

}  // namespace halluguard::tinylm
