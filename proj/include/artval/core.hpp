#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace artval {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Category of failure. The CLI maps these to distinct exit codes.
enum class ErrorKind {
  invalid_argument,
  data,
  schema,
  missing_artifact,
  numeric,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) with 53 bits, independent of libstdc++ distribution
// internals so generated data is stable across standard library versions.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

// Box-Muller, one draw per call (the second variate is discarded).
inline double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

inline int poisson(Rng& rng, double mean) {
  const double limit = std::exp(-mean);
  double prod = uniform01(rng);
  int k = 0;
  while (prod > limit) {
    prod *= uniform01(rng);
    ++k;
  }
  return k;
}

// Fisher-Yates with our own index draw (std::shuffle is implementation-defined).
template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

inline double mean(const Vector& v) { return v.size() ? v.mean() : 0.0; }

inline double sample_variance(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

inline double skewness(const Vector& v) {
  const auto n = static_cast<double>(v.size());
  if (n < 3) return 0.0;
  const double m = v.mean();
  const double m2 = (v.array() - m).square().sum() / n;
  const double m3 = (v.array() - m).cube().sum() / n;
  return m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

inline Vector gather(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace artval
