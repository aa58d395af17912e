#include "dtsc/rng.hpp"

#include <cmath>
#include <numbers>

namespace dtsc {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // u1 in (0, 1] so the log never sees zero.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal(double mean, double std) { return mean + std * normal(); }

Rng Rng::stream(std::string_view tag) const {
  std::uint64_t mix = seed_ ^ (fnv1a64(tag) * 0x9e3779b97f4a7c15ULL);
  return Rng(splitmix64(mix));
}

Rng Rng::stream(std::string_view tag, std::uint64_t index) const {
  std::uint64_t mix = seed_ ^ (fnv1a64(tag) * 0x9e3779b97f4a7c15ULL) ^
                      (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return Rng(splitmix64(mix));
}

void Rng::fill_normal(Matrix& m, double std) {
  for (double& v : m.flat()) v = std * normal();
}

void Rng::fill_uniform(Matrix& m, double lo, double hi) {
  for (double& v : m.flat()) v = uniform(lo, hi);
}

}  // namespace dtsc
