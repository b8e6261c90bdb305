#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace sigaudit {

/// SplitMix64 finalizer: a bijective 64-bit mixer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a key from a parent key and a sequence of coordinates.
[[nodiscard]] constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t a) noexcept {
  return mix64(key ^ mix64(a + 0x9e3779b97f4a7c15ULL));
}

[[nodiscard]] constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t a,
                                                 std::uint64_t b) noexcept {
  return derive_key(derive_key(key, a), b);
}

/// FNV-1a of a label, for naming derived streams ("tukey", "sample", ...).
[[nodiscard]] constexpr std::uint64_t label_hash(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based stream: the i-th output is a pure function of (key, i). Cheap to
/// construct, so every (permutation, topic) cell can own an independent stream.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  /// Unbiased integer in [0, bound) by Lemire's multiply-and-reject method.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    __extension__ typedef unsigned __int128 u128;
    u128 product = static_cast<u128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<u128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle; uniform over all orderings of `items`.
template <typename T>
constexpr void shuffle(std::span<T> items, CounterRng& rng) noexcept {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace sigaudit
