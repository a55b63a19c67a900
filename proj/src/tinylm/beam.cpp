#include "halluguard/tinylm/beam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "halluguard/error.hpp"
#include "halluguard/seed.hpp"

namespace halluguard::tinylm {

using Eigen::VectorXd;

void BeamConfig::validate() const {
  if (beam < 1) throw Error(ErrorCode::kInvalidArgument, "beam must be >= 1");
  if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
  if (!(weight >= 0.0 && weight <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "weight must lie in [0, 1]");
  if (rerank_every < 1) throw Error(ErrorCode::kInvalidArgument, "rerank_every must be >= 1");
  if (rerank_pool < 0) throw Error(ErrorCode::kInvalidArgument, "rerank_pool must be >= 0");
  if (weight > 0.0) {
    probe.validate();
    if (probe.k < 2) throw Error(ErrorCode::kInvalidArgument, "probe K must be >= 2");
  }
}

namespace {

struct Candidate {
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  bool done() const { return !tokens.empty() && tokens.back() == Vocabulary::kEos; }
  double normalized() const { return logprob / static_cast<double>(tokens.size()); }
};

// Population z-scores; a constant vector maps to zeros.
std::vector<double> zscores(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> z(x.size(), 0.0);
  if (sd > 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;
  }
  return z;
}

std::uint64_t prefix_seed(std::uint64_t root, const std::vector<TokenId>& prefix) {
  std::uint64_t s = derive_seed(root, "beam.probe");
  for (TokenId t : prefix) s = derive_seed(s, static_cast<std::uint64_t>(t));
  return s;
}

}  // namespace

BeamResult beam_search(const TinyLM& model, const Vocabulary& vocab, const std::string& prompt,
                       const BeamConfig& config, const CandidateScorer& scorer) {
  config.validate();
  const bool rerank = config.weight > 0.0;
  if (rerank && !scorer) throw Error(ErrorCode::kInvalidArgument, "reranking needs a scorer");
  const auto context = prompt_context(vocab, prompt);
  const int ctx_len = model.config().context_len;
  if (static_cast<int>(context.size()) + config.max_steps > ctx_len) {
    throw Error(ErrorCode::kContextOverflow, "prompt plus max_steps exceeds context length");
  }
  const int pool_size = config.rerank_pool > 0 ? config.rerank_pool : 2 * config.beam;

  BeamResult result;
  std::map<std::vector<TokenId>, double> reliability_cache;
  auto reliability = [&](const Candidate& c) -> std::optional<double> {
    std::vector<TokenId> prefix = c.tokens;
    if (c.done()) prefix.pop_back();
    if (auto it = reliability_cache.find(prefix); it != reliability_cache.end()) return it->second;
    std::vector<TokenId> ctx = context;
    ctx.insert(ctx.end(), prefix.begin(), prefix.end());
    DecodeConfig probe = config.probe;
    probe.max_steps = std::min(probe.max_steps, ctx_len - static_cast<int>(ctx.size()));
    ++result.scorer_calls;
    try {
      if (probe.max_steps < 1) throw Error(ErrorCode::kContextOverflow, "no room left to probe");
      const auto rollouts = sample_rollouts(model, ctx, probe, probe.k, prefix_seed(config.seed, ctx));
      TrajectoryBundle b;
      b.prompt_id = "beam";
      b.prompt_text = prompt + vocab.decode(prefix);
      b.embed_dim = static_cast<std::uint32_t>(model.config().d_model);
      for (const auto& r : rollouts) b.generations.push_back(to_generation(vocab, r));
      const double r = scorer(b);
      if (!std::isfinite(r)) throw Error(ErrorCode::kNonFinite, "non-finite reliability");
      reliability_cache[prefix] = r;
      return r;
    } catch (const Error&) {
      ++result.scorer_failures;
      return std::nullopt;
    }
  };

  std::vector<Candidate> beams(1);
  for (int step = 0; step < config.max_steps; ++step) {
    std::vector<Candidate> pool;
    std::vector<int> active;
    for (int i = 0; i < static_cast<int>(beams.size()); ++i) {
      if (beams[i].done()) {
        pool.push_back(beams[i]);
      } else {
        active.push_back(i);
      }
    }
    if (!active.empty()) {
      Runner runner(model, static_cast<int>(active.size()));
      const std::size_t len = context.size() + beams[active[0]].tokens.size();
      for (std::size_t p = 0; p < len; ++p) {
        std::vector<TokenId> col;
        for (int i : active) {
          const auto& t = beams[i].tokens;
          col.push_back(p < context.size() ? context[p] : t[p - context.size()]);
        }
        runner.feed(col);
      }
      for (std::size_t a = 0; a < active.size(); ++a) {
        const VectorXd lp = log_softmax(runner.logits().row(static_cast<Eigen::Index>(a)).transpose());
        for (int tok = 0; tok < lp.size(); ++tok) {
          if (tok == static_cast<int>(Vocabulary::kPad) || tok == static_cast<int>(Vocabulary::kBos)) continue;
          Candidate c = beams[active[a]];
          c.tokens.push_back(static_cast<TokenId>(tok));
          c.logprob += lp(tok);
          pool.push_back(std::move(c));
        }
      }
    }
    // Stable sort keeps the expansion order (beam rank, then token id) on ties.
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) { return a.normalized() > b.normalized(); });

    if (rerank && step % config.rerank_every == 0) {
      pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(pool_size)));
      std::vector<double> lp;
      std::vector<std::optional<double>> rel;
      for (const auto& c : pool) {
        lp.push_back(c.normalized());
        rel.push_back(reliability(c));
      }
      const auto zlp = zscores(lp);
      std::vector<double> ok;
      for (const auto& r : rel) {
        if (r) ok.push_back(*r);
      }
      std::vector<double> zrel(pool.size(), 0.0);
      if (!ok.empty()) {
        const auto zok = zscores(ok);
        for (std::size_t i = 0, j = 0; i < pool.size(); ++i) {
          if (rel[i]) zrel[i] = zok[j++];
        }
      }
      std::vector<double> combined(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        combined[i] = rel[i] ? (1.0 - config.weight) * zlp[i] + config.weight * zrel[i] : zlp[i];
      }
      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return combined[a] > combined[b]; });
      std::vector<Candidate> reranked;
      for (std::size_t i : order) reranked.push_back(std::move(pool[i]));
      pool = std::move(reranked);
    }
    pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(config.beam)));
    beams = std::move(pool);
    if (beams.front().done()) break;
  }

  const Candidate& best = beams.front();
  result.tokens = best.tokens;
  result.text = vocab.decode(best.tokens);
  result.logprob = best.logprob;
  result.score = best.normalized();
  return result;
}

}  // namespace halluguard::tinylm
