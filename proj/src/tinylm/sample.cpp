#include "halluguard/tinylm/sample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "halluguard/error.hpp"

namespace halluguard::tinylm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void DecodeConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "top_p must lie in (0, 1]");
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
  if (!(state_noise >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "state_noise must be >= 0");
}

StepDistribution truncate_distribution(const VectorXd& logits, const DecodeConfig& decode) {
  const auto v = static_cast<int>(logits.size());
  std::vector<int> allowed;
  for (int i = 0; i < v; ++i) {
    if (i != static_cast<int>(Vocabulary::kPad) && i != static_cast<int>(Vocabulary::kBos)) allowed.push_back(i);
  }
  if (allowed.empty()) throw Error(ErrorCode::kInvalidArgument, "no sampleable tokens");

  StepDistribution out;
  if (decode.greedy) {
    int best = allowed.front();
    for (int i : allowed) {
      if (logits(i) > logits(best)) best = i;
    }
    out.support = {static_cast<TokenId>(best)};
    out.probs = {1.0};
    return out;
  }

  double mx = -std::numeric_limits<double>::infinity();
  for (int i : allowed) mx = std::max(mx, logits(i) / decode.temperature);
  std::vector<double> p(static_cast<std::size_t>(v), 0.0);
  double total = 0.0;
  for (int i : allowed) {
    p[i] = std::exp(logits(i) / decode.temperature - mx);
    total += p[i];
  }
  std::stable_sort(allowed.begin(), allowed.end(), [&](int a, int b) { return p[a] > p[b]; });
  const std::size_t keep_k = std::min<std::size_t>(static_cast<std::size_t>(decode.top_k), allowed.size());
  double kept = 0.0;
  for (std::size_t i = 0; i < keep_k; ++i) kept += p[allowed[i]];
  double cumulative = 0.0;
  for (std::size_t i = 0; i < keep_k; ++i) {
    const double q = p[allowed[i]] / kept;
    out.support.push_back(static_cast<TokenId>(allowed[i]));
    out.probs.push_back(q);
    cumulative += q;
    if (cumulative >= decode.top_p) break;
  }
  const double z = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  for (double& q : out.probs) q /= z;
  (void)total;
  return out;
}

namespace {

double entropy_of(const VectorXd& logits) {
  const VectorXd lp = log_softmax(logits);
  double h = 0.0;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    const double q = std::exp(lp(i));
    if (q > 0.0) h -= q * lp(i);
  }
  return std::max(h, 0.0);
}

}  // namespace

std::vector<TokenId> prompt_context(const Vocabulary& vocab, const std::string& prompt) {
  std::vector<TokenId> ctx{Vocabulary::kBos};
  const auto p = vocab.encode(prompt);
  ctx.insert(ctx.end(), p.begin(), p.end());
  return ctx;
}

std::vector<Rollout> sample_rollouts(const TinyLM& model, const std::vector<TokenId>& context,
                                     const DecodeConfig& decode, int k, std::uint64_t seed) {
  decode.validate();
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one rollout");
  if (context.empty()) throw Error(ErrorCode::kInvalidArgument, "empty context");
  const auto& cfg = model.config();
  if (static_cast<int>(context.size()) + decode.max_steps > cfg.context_len) {
    throw Error(ErrorCode::kContextOverflow,
                "context of " + std::to_string(context.size()) + " tokens plus " +
                    std::to_string(decode.max_steps) + " steps exceeds context length " +
                    std::to_string(cfg.context_len));
  }
  const int d = cfg.d_model;
  std::vector<std::mt19937_64> rng;
  for (int i = 0; i < k; ++i) rng.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Runner runner(model, k);
  MatrixXd noise;
  auto feed = [&](const std::vector<TokenId>& tokens) {
    if (decode.state_noise > 0.0) {
      noise.resize(k, d);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < d; ++j) noise(i, j) = decode.state_noise * normal(rng[i]);
      }
      runner.feed(tokens, &noise);
    } else {
      runner.feed(tokens);
    }
  };
  for (TokenId t : context) feed(std::vector<TokenId>(static_cast<std::size_t>(k), t));

  std::vector<Rollout> out(static_cast<std::size_t>(k));
  std::vector<std::vector<VectorXd>> states(static_cast<std::size_t>(k));
  std::vector<bool> sampling(static_cast<std::size_t>(k), true), finished(static_cast<std::size_t>(k), false);
  while (true) {
    for (int i = 0; i < k; ++i) {
      if (!sampling[i]) continue;
      const VectorXd logits = runner.logits().row(i).transpose();
      const StepDistribution dist = truncate_distribution(logits, decode);
      const double u = uniform(rng[i]);
      std::size_t pick = 0;
      double acc = dist.probs[0];
      while (pick + 1 < dist.probs.size() && u >= acc) acc += dist.probs[++pick];
      Rollout& r = out[i];
      r.tokens.push_back(dist.support[pick]);
      r.logprob.push_back(static_cast<float>(std::log(dist.probs[pick])));
      r.step_entropy.push_back(static_cast<float>(entropy_of(logits)));
      r.step_lse.push_back(static_cast<float>(log_sum_exp(logits)));
      states[i].push_back(runner.mid_state().row(i).transpose());
      if (r.tokens.back() == Vocabulary::kEos) {
        // The last content token was fed at this position already.
        sampling[i] = false;
        finished[i] = true;
        r.final_state = states[i].back();
      } else if (static_cast<int>(r.tokens.size()) == decode.max_steps) {
        sampling[i] = false;
      }
    }
    if (std::all_of(finished.begin(), finished.end(), [](bool f) { return f; })) break;
    std::vector<TokenId> next(static_cast<std::size_t>(k), Vocabulary::kPad);
    for (int i = 0; i < k; ++i) {
      if (!finished[i]) next[i] = out[i].tokens.back();
    }
    feed(next);
    bool all = true;
    for (int i = 0; i < k; ++i) {
      if (!sampling[i] && !finished[i]) {
        out[i].final_state = runner.mid_state().row(i).transpose();
        finished[i] = true;
      }
      all = all && finished[i];
    }
    if (all) break;
  }
  for (int i = 0; i < k; ++i) {
    out[i].states.resize(static_cast<Eigen::Index>(states[i].size()), d);
    for (std::size_t t = 0; t < states[i].size(); ++t) out[i].states.row(static_cast<Eigen::Index>(t)) = states[i][t].transpose();
  }
  return out;
}

Generation to_generation(const Vocabulary& vocab, const Rollout& rollout) {
  Generation g;
  g.tokens = rollout.tokens;
  g.logprob = rollout.logprob;
  g.step_entropy = rollout.step_entropy;
  g.step_lse = rollout.step_lse;
  g.text = vocab.decode(rollout.tokens);
  g.sent_embed.resize(static_cast<std::size_t>(rollout.final_state.size()));
  for (Eigen::Index j = 0; j < rollout.final_state.size(); ++j) {
    g.sent_embed[static_cast<std::size_t>(j)] = static_cast<float>(rollout.final_state(j));
  }
  std::vector<float> states;
  states.reserve(static_cast<std::size_t>(rollout.states.size()));
  for (Eigen::Index t = 0; t < rollout.states.rows(); ++t) {
    for (Eigen::Index j = 0; j < rollout.states.cols(); ++j) states.push_back(static_cast<float>(rollout.states(t, j)));
  }
  g.step_states = std::move(states);
  return g;
}

TrajectoryBundle sample_k(const TinyLM& model, const Vocabulary& vocab, const std::string& prompt_id,
                          const std::string& prompt, const DecodeConfig& decode,
                          const std::vector<std::string>& references) {
  decode.validate();
  if (decode.k < 2) throw Error(ErrorCode::kInvalidArgument, "a bundle needs K >= 2");
  const auto context = prompt_context(vocab, prompt);
  const auto rollouts = sample_rollouts(model, context, decode, decode.k, derive_seed(decode.seed, prompt_id));
  TrajectoryBundle b;
  b.prompt_id = prompt_id;
  b.prompt_text = prompt;
  b.references = references;
  b.embed_dim = static_cast<std::uint32_t>(model.config().d_model);
  for (const auto& r : rollouts) b.generations.push_back(to_generation(vocab, r));
  b.meta["backbone"] = "tinylm";
  b.meta["layer"] = std::to_string(model.config().mid_layer());
  b.meta["representation"] = "residual stream after block " + std::to_string(model.config().mid_layer()) + ", pre-LN";
  b.meta["temperature"] = std::to_string(decode.temperature);
  b.meta["top_p"] = std::to_string(decode.top_p);
  b.meta["top_k"] = std::to_string(decode.top_k);
  b.meta["greedy"] = decode.greedy ? "1" : "0";
  b.meta["state_noise"] = std::to_string(decode.state_noise);
  b.meta["seed"] = std::to_string(decode.seed);
  return b;
}

}  // namespace halluguard::tinylm
