#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "grouse/linalg.hpp"

namespace grouse {

/// Mixes a base seed with a list of keys (trial index, cell coordinates, ...)
/// through splitmix64, so independent streams can be derived without sharing
/// generator state between workers.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  Vec gaussian_vec(Eigen::Index size, double stddev = 1.0);
  Mat gaussian_mat(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);

  /// `count` distinct indices from [0, n), ascending.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);
  /// `count` i.i.d. uniform indices from [0, n), in draw order.
  std::vector<std::size_t> sample_with_replacement(std::size_t n, std::size_t count);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace grouse
