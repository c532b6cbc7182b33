#ifndef PAIRSMC_RANDOM_HPP
#define PAIRSMC_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace pairsmc {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Reproducible random stream identified by (seed, stream_id).
///
/// The generator is xoshiro256++ whose 256-bit state is filled by SplitMix64
/// from a key mixing seed and stream id. Construction is O(1) and depends on
/// nothing but the two identifiers, so replicate j can be created on any
/// worker in any order. Satisfies std::uniform_random_bit_generator.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  RandomSource(std::uint64_t seed, std::uint64_t stream_id) noexcept : seed_(seed), stream_(stream_id) {
    std::uint64_t key = seed;
    const std::uint64_t seed_hash = detail::splitmix64(key);
    // Distinct stream ids map to distinct keys (odd multiplier is a bijection mod 2^64).
    std::uint64_t sm = seed_hash ^ (stream_id * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL);
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal draw (ziggurat).
  double normal() { return boost::random::normal_distribution<double>{}(*this); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> state_{};
};

/// Stream for replicate `replicate_index` under `root_seed`.
inline RandomSource derive_stream(std::uint64_t root_seed, std::uint64_t replicate_index) noexcept {
  return RandomSource(root_seed, replicate_index);
}

}  // namespace pairsmc

#endif  // PAIRSMC_RANDOM_HPP
