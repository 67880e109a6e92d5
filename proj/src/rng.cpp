#include "ccboot/rng.hpp"

#include <cmath>
#include <numbers>

namespace ccboot {
namespace {

__extension__ typedef unsigned __int128 uint128;

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::array<std::uint64_t, 4> expand(std::uint64_t key) {
  std::array<std::uint64_t, 4> s{};
  std::uint64_t sm = key;
  for (auto& word : s) {
    sm += kGolden;
    word = mix64(sm);
  }
  if ((s[0] | s[1] | s[2] | s[3]) == 0) s[0] = kGolden;
  return s;
}

}  // namespace

RandomStream RandomStream::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed + kGolden);
  std::uint64_t depth = 1;
  for (std::uint64_t index : path) {
    key = mix64(key ^ mix64(index + depth * kGolden));
    ++depth;
  }
  return RandomStream(RawState{}, expand(key));
}

RandomStream RandomStream::split(std::uint64_t index) const {
  std::uint64_t key = mix64(state_[0] ^ rotl(state_[1], 17) ^ rotl(state_[2], 31) ^ state_[3]);
  key = mix64(key ^ mix64(index + kGolden));
  return RandomStream(RawState{}, expand(key));
}

RandomStream::result_type RandomStream::operator()() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t RandomStream::below(std::uint64_t bound) {
  // Lemire's multiply-shift with rejection.
  uint128 m = static_cast<uint128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<uint128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace ccboot
