#pragma once

// Seeded synthetic trajectories for tests and demos. Label 1 ("correct")
// trajectories drift smoothly; label 0 trajectories take occasional large
// jumps, so the structural descriptors separate the classes.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "strconf/trajectory_io.hpp"

namespace strconf::synthetic {

struct Options {
  std::size_t count = 100;
  std::size_t min_tokens = 8;
  std::size_t max_tokens = 64;
  std::size_t hidden_dim = 16;
  std::size_t semantic_dim = 0;  // 0 = no semantic vectors
  double jump_probability = 0.15;
  double jump_scale = 3.0;
  std::uint64_t seed = 7;
};

inline Trajectory random_walk(std::mt19937_64& rng, const std::string& id, Label label, std::size_t rows,
                              std::size_t dim, double jump_probability, double jump_scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Trajectory t;
  t.id = id;
  t.label = label;
  t.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::vector<double> h(dim);
  for (auto& v : h) v = normal(rng);
  for (std::size_t r = 0; r < rows; ++r) {
    const bool jump = label == Label::incorrect && uniform(rng) < jump_probability;
    const double step = jump ? jump_scale : 0.25;
    for (std::size_t d = 0; d < dim; ++d) {
      if (r > 0) h[d] += step * normal(rng);
      t.states(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = static_cast<float>(h[d]);
    }
  }
  return t;
}

inline std::vector<Trajectory> generate(const Options& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> length(opt.min_tokens, opt.max_tokens);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Trajectory> out;
  out.reserve(opt.count);
  for (std::size_t i = 0; i < opt.count; ++i) {
    const Label label = i % 2 == 0 ? Label::correct : Label::incorrect;
    auto t = random_walk(rng, "inst-" + std::to_string(i), label, length(rng), opt.hidden_dim,
                         opt.jump_probability, opt.jump_scale);
    if (opt.semantic_dim > 0) {
      std::vector<float> s(opt.semantic_dim);
      for (auto& v : s) v = static_cast<float>(normal(rng) + (label == Label::correct ? 0.5 : -0.5));
      t.semantic = std::move(s);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace strconf::synthetic
