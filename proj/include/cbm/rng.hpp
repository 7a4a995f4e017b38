#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace cbm {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept
{
  std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Key of an independent sub-stream: hash(master, purpose, index).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                    std::uint64_t index = 0) noexcept
{
  return mix64(mix64(master ^ hash_tag(purpose)) + mix64(index));
}

/// Counter-based generator: the k-th output is a pure function of (key, k),
/// so a stream can be read sequentially or at random positions.
/// Satisfies UniformRandomBitGenerator.
class CounterRng
{
public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
    : key_(mix64(key)), counter_(counter)
  {
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return at(counter_++); }

  constexpr result_type at(std::uint64_t k) const noexcept
  {
    return mix64(key_ ^ mix64(k + 0x632be59bd9b4e019ULL));
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return to_unit(operator()()); }
  double uniform_at(std::uint64_t k) const noexcept { return to_unit(at(k)); }

  /// Uniform in the open interval (0, 1); safe for log().
  double uniform_open() noexcept
  {
    return (static_cast<double>(operator()() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const noexcept { return counter_; }

private:
  static constexpr double to_unit(std::uint64_t x) noexcept
  {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace cbm
