#include "halluguard/bundle.hpp"

#include <cmath>
#include <sstream>

namespace halluguard {

Eigen::MatrixXd Generation::states_matrix(std::size_t embed_dim) const {
  const auto& states = step_states.value();
  const auto rows = static_cast<Eigen::Index>(steps());
  const auto cols = static_cast<Eigen::Index>(embed_dim);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = states[static_cast<std::size_t>(i * cols + j)];
    }
  }
  return out;
}

Eigen::MatrixXd TrajectoryBundle::embedding_matrix() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(k()),
                      static_cast<Eigen::Index>(embed_dim));
  for (std::size_t g = 0; g < k(); ++g) {
    const auto& e = generations[g].sent_embed;
    for (std::size_t j = 0; j < embed_dim && j < e.size(); ++j) {
      out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = e[j];
    }
  }
  return out;
}

namespace {

class Reporter {
 public:
  explicit Reporter(ValidationReport& report) : report_(report) {}

  template <typename... Args>
  void add(const Args&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    report_.ok = false;
    report_.violations.push_back(os.str());
  }

 private:
  ValidationReport& report_;
};

void check_series(Reporter& rep, const std::vector<float>& v,
                  std::size_t expected, std::size_t gen, const char* name) {
  if (v.size() != expected) {
    rep.add(name, " length ", v.size(), " != T ", expected, " (gen ", gen,
            ")");
  }
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (!std::isfinite(v[t])) {
      rep.add(name, " non-finite at (gen ", gen, ", t ", t, ")");
    }
  }
}

}  // namespace

ValidationReport validate_bundle(const TrajectoryBundle& bundle) {
  ValidationReport report;
  Reporter rep(report);

  if (bundle.k() < 2) rep.add("K < 2");
  if (bundle.embed_dim == 0) rep.add("embed_dim must be positive");
  if (bundle.label && *bundle.label > 1) {
    rep.add("label ", static_cast<int>(*bundle.label), " is not 0 or 1");
  }
  if (bundle.rouge_to_ref) {
    const float r = *bundle.rouge_to_ref;
    if (!std::isfinite(r) || r < 0.0f || r > 1.0f) {
      rep.add("rouge_to_ref ", r, " outside [0,1]");
    }
  }

  for (std::size_t g = 0; g < bundle.k(); ++g) {
    const Generation& gen = bundle.generations[g];
    const std::size_t steps = gen.steps();
    if (steps == 0) rep.add("T < 1 (gen ", g, ")");
    check_series(rep, gen.logprob, steps, g, "logprob");
    check_series(rep, gen.step_entropy, steps, g, "step_entropy");
    check_series(rep, gen.step_lse, steps, g, "step_lse");
    for (std::size_t t = 0; t < gen.logprob.size(); ++t) {
      if (gen.logprob[t] > 0.0f) {
        rep.add("logprob > 0 at (gen ", g, ", t ", t, ")");
      }
    }
    for (std::size_t t = 0; t < gen.step_entropy.size(); ++t) {
      if (gen.step_entropy[t] < 0.0f) {
        rep.add("step_entropy < 0 at (gen ", g, ", t ", t, ")");
      }
    }
    if (gen.sent_embed.size() != bundle.embed_dim) {
      rep.add("sent_embed length ", gen.sent_embed.size(), " != d ",
              bundle.embed_dim, " (gen ", g, ")");
    }
    for (std::size_t j = 0; j < gen.sent_embed.size(); ++j) {
      if (!std::isfinite(gen.sent_embed[j])) {
        rep.add("sent_embed non-finite at (gen ", g, ", j ", j, ")");
      }
    }
    if (gen.step_states) {
      const auto& states = *gen.step_states;
      if (states.size() != steps * bundle.embed_dim) {
        rep.add("step_states has ", states.size(), " values, expected T*d = ",
                steps * bundle.embed_dim, " (gen ", g, ")");
      }
      for (std::size_t i = 0; i < states.size(); ++i) {
        if (!std::isfinite(states[i])) {
          rep.add("step_states non-finite at (gen ", g, ", index ", i, ")");
          break;
        }
      }
    }
  }
  return report;
}

}  // namespace halluguard
