#ifndef LPEKI_RANDOM_H_
#define LPEKI_RANDOM_H_

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace lpeki {

/// Mixes a master seed and a stream index into an independent 64-bit seed
/// (splitmix64 finalizer applied twice). Trial i of a campaign always gets
/// derive_seed(master, i), whatever the execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded random source used throughout the solver. Not thread-safe; every
/// trial owns one.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Vector of n independent standard normal draws, in index order.
  Eigen::VectorXd normal_vector(Eigen::Index n);

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace lpeki

#endif  // LPEKI_RANDOM_H_
