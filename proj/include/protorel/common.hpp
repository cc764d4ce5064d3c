#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace protorel {

using TokenId = std::size_t;
using RelationId = std::size_t;

/// Raised for malformed input files (JSONL, CSV, checkpoints).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a precondition on arguments or configuration is violated.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Rng = std::mt19937_64;

/// Seeds an independent generator for (seed, stream). Distinct streams give
/// decorrelated sequences, so per-episode or per-cell randomness does not
/// depend on evaluation order.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x70726f74u};
  return Rng(seq);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// First k entries of a partial Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) {
    throw InvalidArgument("cannot sample " + std::to_string(k) + " of " + std::to_string(n) +
                          " items without replacement");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  }
  idx.resize(k);
  return idx;
}

inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  return sample_without_replacement(n, n, rng);
}

/// Round half away from zero, as used for "exactly round(rate * n)" counts.
inline std::size_t round_count(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

/// Flat, column-major view of a parameter block for optimizers and gradient checks.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;

  Eigen::Map<Eigen::VectorXd> values() const {
    return {data, static_cast<Eigen::Index>(size)};
  }
};

template <class Derived>
ParamRef param_ref(std::string name, Eigen::PlainObjectBase<Derived>& m) {
  return {std::move(name), m.data(), static_cast<std::size_t>(m.size())};
}

template <class Derived>
Eigen::VectorXd flatten(const Eigen::MatrixBase<Derived>& m) {
  Eigen::MatrixXd plain = m;
  return Eigen::Map<const Eigen::VectorXd>(plain.data(), plain.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2;
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace protorel
