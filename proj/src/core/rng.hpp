#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lrao {

uint64_t mix_seed(uint64_t a, uint64_t b = 0, uint64_t c = 0);

// Seeded random stream. Distributions are implemented directly (not via
// std::*_distribution) so that generated values are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(mix_seed(seed)) {}

  uint64_t seed() const { return seed_; }

  // Independent stream keyed by (this seed, a, b).
  Rng derive(uint64_t a, uint64_t b = 0) const { return Rng(mix_seed(seed_, a + 1, b)); }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double cauchy();  // standard C(0,1) via tan(pi*(u - 1/2))

  std::vector<double> normal_vec(size_t n);
  std::vector<double> cauchy_vec(size_t n);

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lrao
