#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace qsdlab {

// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;

// Counter-based stream: key fixed per (seed, component), counter words 2..3 hold
// the stream index and words 0..1 the block position. Streams never overlap.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t key, std::uint64_t index) noexcept;

  std::uint32_t next_u32() noexcept;
  // Uniform on [0,1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on (0,1).
  double uniform_open() noexcept;
  double normal() noexcept;
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t index() const noexcept { return index_; }

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t index_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Master seed -> per-component streams. The component key is
// splitmix64(seed ^ fnv1a64(component)); stream i of a component uses counter high words = i.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t master_seed) noexcept : seed_(master_seed) {}
  RngStream stream(std::string_view component, std::uint64_t index) const noexcept;
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace qsdlab
