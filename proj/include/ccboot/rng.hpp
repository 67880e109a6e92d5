#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ccboot {

// xoshiro256** generator whose state is derived by hashing a key path
// (master seed, then any number of indices). Streams for distinct key paths
// are statistically independent, so work item k can build its own stream
// from (seed, k) and results do not depend on scheduling.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0) : RandomStream(derive(seed, {})) {}

  static RandomStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  // Child stream keyed on this stream's current state plus `index`; does not
  // advance the parent.
  [[nodiscard]] RandomStream split(std::uint64_t index) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Unbiased integer on [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  double normal();

 private:
  struct RawState {};
  RandomStream(RawState, const std::array<std::uint64_t, 4>& s) : state_(s) {}

  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Stream-purpose tags used when deriving child streams, so that e.g. the
// cohort generator and the bootstrap never share a key path.
namespace stream_tag {
inline constexpr std::uint64_t kCohort = 0x636f686f7274ULL;
inline constexpr std::uint64_t kSubcohort = 0x7375626368ULL;
inline constexpr std::uint64_t kBootNaive = 0x626e6169ULL;
inline constexpr std::uint64_t kBootProposed = 0x6270726fULL;
}  // namespace stream_tag

}  // namespace ccboot
