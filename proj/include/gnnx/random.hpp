#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gnnx {

// Seeded generator threaded explicitly through every stochastic operation.
// Output is defined bit-for-bit by the seed (no std::distribution objects),
// so generated datasets and trained weights are reproducible across
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform in the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi);
  double normal();
  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  // Index drawn proportionally to the non-negative weights.
  std::size_t categorical(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent child generator for the index-th sub-task.
  Rng derive(std::uint64_t index) const;
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace gnnx
