#pragma once

#include <cstdint>
#include <random>

#include "cernet/model.hpp"

namespace cernet::testing {

// Layers [6, 3], K = 2, D = 2: the tiny gradient-check model.
inline ModelConfig tiny_config(TopdownSource topdown = TopdownSource::PriorT) {
  ModelConfig cfg = make_config({6, 3}, {2.0, 4.0}, {0.3, 0.2}, 2, 2);
  cfg.loss_layer_weights = {1.0, 0.5};
  cfg.topdown = topdown;
  return cfg;
}

// Random parameters with biases filled in too, so every group is exercised.
inline NetworkParams random_params(const ModelConfig& cfg, std::uint64_t seed, double scale = 1.0) {
  NetworkParams p = NetworkParams::random_init(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Eigen::Index i = 0; i < p.b_o.size(); ++i) p.b_o[i] = u(rng);
  for (auto& b : p.b_r)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
  if (scale != 1.0) p.unflatten(p.flatten() * scale);
  return p;
}

inline Matrix random_observations(int steps, int dim, std::uint64_t seed, double amp = 0.8) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Matrix obs(steps, dim);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = u(rng);
  return obs;
}

}  // namespace cernet::testing
