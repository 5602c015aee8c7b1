// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vdb/errors.hpp"

namespace vdb {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

}  // namespace

std::array<std::uint32_t, 4> Rng::philox(std::array<std::uint32_t, 4> ctr,
                                         std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Rng::Rng(std::uint64_t seed) { state_.seed = seed; }

void Rng::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(state_.block),
      static_cast<std::uint32_t>(state_.block >> 32), 0u, 0u};
  const std::array<std::uint32_t, 2> key{
      static_cast<std::uint32_t>(state_.seed),
      static_cast<std::uint32_t>(state_.seed >> 32)};
  buf_ = philox(ctr, key);
  ++state_.block;
  state_.pos = 0;
}

std::uint32_t Rng::next_u32() {
  if (state_.pos >= 4) refill();
  return buf_[state_.pos++];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw UsageError("Rng::below: empty range");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

double Rng::normal() {
  if (state_.has_spare) {
    state_.has_spare = false;
    return state_.spare;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  state_.spare = r * std::sin(theta);
  state_.has_spare = true;
  return r * std::cos(theta);
}

void Rng::restore(const State& s) {
  state_ = s;
  if (state_.pos < 4) {
    // Regenerate the partially consumed block.
    const std::uint32_t pos = state_.pos;
    --state_.block;
    refill();
    state_.pos = pos;
  }
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << kAlgorithm << ' ' << state_.seed << ' ' << state_.block << ' '
     << state_.pos << ' ' << (state_.has_spare ? 1 : 0) << ' ' << std::hex
     << std::bit_cast<std::uint64_t>(state_.spare);
  return os.str();
}

Rng Rng::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string algo;
  State s;
  int spare_flag = 0;
  std::uint64_t spare_bits = 0;
  is >> algo >> s.seed >> s.block >> s.pos >> spare_flag >> std::hex >>
      spare_bits;
  if (!is || algo != kAlgorithm || s.pos > 4)
    throw UsageError("malformed rng state: '" + std::string(text) + "'");
  s.has_spare = spare_flag != 0;
  s.spare = std::bit_cast<double>(spare_bits);
  Rng rng(s.seed);
  rng.restore(s);
  return rng;
}

}  // namespace vdb
