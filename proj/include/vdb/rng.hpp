// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace vdb {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// The 64-bit seed is the key; each call consumes words from consecutive
/// 128-bit counter blocks, so streams are identical on every platform.
/// Normal variates use Box-Muller on top of the uniform stream.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "philox4x32-10";

  struct State {
    std::uint64_t seed = 0;
    std::uint64_t block = 0;  // next counter block to generate
    std::uint32_t pos = 4;    // words already consumed from the last block
    bool has_spare = false;
    double spare = 0.0;

    friend bool operator==(const State&, const State&) = default;
  };

  explicit Rng(std::uint64_t seed = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  State state() const { return state_; }
  void restore(const State& s);

  /// One-line text form, stable across versions; used in checkpoint headers.
  std::string serialize() const;
  static Rng deserialize(std::string_view text);

  /// The raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  State state_;
  std::array<std::uint32_t, 4> buf_{};
};

}  // namespace vdb
