#pragma once

#include <cstdint>
#include <string_view>

#include "dtsc/matrix.hpp"

namespace dtsc {

// Deterministic counter-based generator (splitmix64 core). Streams derived
// via stream(tag) are independent of each other and of the parent's draw
// position, so adding a consumer never shifts the draws seen by another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard Gaussian (Box-Muller)
  double normal(double mean, double std);

  // Derived stream keyed on the construction seed and a purpose tag.
  Rng stream(std::string_view tag) const;
  Rng stream(std::string_view tag, std::uint64_t index) const;

  void fill_normal(Matrix& m, double std);
  void fill_uniform(Matrix& m, double lo, double hi);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dtsc
