#include "grouse/random.hpp"

#include <algorithm>
#include <numeric>

#include "grouse/error.hpp"

namespace grouse {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

Vec Rng::gaussian_vec(Eigen::Index size, double stddev) {
  Vec out(size);
  for (Eigen::Index i = 0; i < size; ++i) out(i) = stddev * normal_(engine_);
  return out;
}

Mat Rng::gaussian_mat(Eigen::Index rows, Eigen::Index cols, double stddev) {
  Mat out(rows, cols);
  // Fill column by column so the draw order is fixed by (rows, cols) alone.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = stddev * normal_(engine_);
  }
  return out;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t count) {
  if (count > n) {
    throw Error(ErrorKind::invalid_argument, "sample_without_replacement: count exceeds n");
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  // Selection sampling keeps the population order, so the output is sorted.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n && out.size() < count; ++i) {
    const double need = static_cast<double>(count - out.size());
    const double left = static_cast<double>(n - i);
    if (left * unit(engine_) < need) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Rng::sample_with_replacement(std::size_t n, std::size_t count) {
  if (n == 0) throw Error(ErrorKind::invalid_argument, "sample_with_replacement: n must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(count);
  for (auto& idx : out) idx = pick(engine_);
  return out;
}

}  // namespace grouse
