#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "halluguard/bundle.hpp"

namespace hgtest {

// Seeded random bundle that passes validate_bundle.
inline halluguard::TrajectoryBundle random_bundle(std::uint64_t seed, int k = 4, int d = 6, int steps = 5,
                                                  bool states = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  halluguard::TrajectoryBundle b;
  b.prompt_id = "p" + std::to_string(seed);
  b.prompt_text = "12+34=";
  b.references = {"046"};
  b.embed_dim = static_cast<std::uint32_t>(d);
  for (int i = 0; i < k; ++i) {
    halluguard::Generation g;
    for (int t = 0; t < steps; ++t) {
      g.tokens.push_back(static_cast<halluguard::TokenId>(3 + rng() % 10));
      g.logprob.push_back(-unit(rng));
      g.step_entropy.push_back(unit(rng));
      g.step_lse.push_back(2.0f + unit(rng));
    }
    g.text = "0" + std::to_string(40 + i);
    for (int j = 0; j < d; ++j) g.sent_embed.push_back(normal(rng));
    if (states) {
      std::vector<float> s;
      for (int j = 0; j < steps * d; ++j) s.push_back(normal(rng));
      g.step_states = s;
    }
    b.generations.push_back(std::move(g));
  }
  return b;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double ridge = 1e-2) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return a * a.transpose() + ridge * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = normal(rng);
  return a;
}

}  // namespace hgtest
