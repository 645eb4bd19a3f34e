#pragma once

// Exact configurations as integer lattices: every position times a common
// denominator D. Shared by the engine and the oracle.

#include "balab/kernel.hpp"
#include "balab/model.hpp"

#include <limits>
#include <vector>

namespace balab::detail {

template <class I>
constexpr I lattice_limit() {
  // Kernel keys are doubled sums of two positions; keep 4|x| representable.
  if constexpr (std::is_same_v<I, Int128>) return (static_cast<Int128>(1) << 124);
  else return std::numeric_limits<I>::max() / 4;
}

inline Int128 to_int128(const BigInt& v) {
  const bool neg = v < 0;
  BigInt a = neg ? BigInt(-v) : v;
  const BigInt mask = (BigInt(1) << 64) - 1;
  auto lo = static_cast<unsigned __int128>(BigInt(a & mask).convert_to<std::uint64_t>());
  auto hi = static_cast<unsigned __int128>(BigInt(a >> 64).convert_to<std::uint64_t>());
  auto u = static_cast<Int128>((hi << 64) | lo);
  return neg ? -u : u;
}

inline BigInt from_int128(Int128 v) {
  const bool neg = v < 0;
  auto u = static_cast<unsigned __int128>(neg ? -v : v);
  BigInt r = BigInt(static_cast<std::uint64_t>(u >> 64));
  r <<= 64;
  r += BigInt(static_cast<std::uint64_t>(u));
  return neg ? BigInt(-r) : r;
}

template <class I>
I to_lattice_int(const BigInt& v) {
  if constexpr (std::is_same_v<I, Int128>) return to_int128(v);
  else return v.convert_to<I>();
}

template <class I>
BigInt from_lattice_int(I v) {
  if constexpr (std::is_same_v<I, Int128>) return from_int128(v);
  else return BigInt(v);
}

/// Scales exact positions to integers. Returns false if they do not fit I.
template <class I>
bool scale_positions(const Configuration& c, BigInt& denom, std::vector<I>& out) {
  denom = 1;
  for (const auto& p : c.particles) denom = boost::multiprecision::lcm(denom, BigInt(denominator(p.position.rational())));
  const BigInt limit = from_lattice_int<I>(lattice_limit<I>());
  out.clear();
  out.reserve(c.size());
  for (const auto& p : c.particles) {
    const Rational& r = p.position.rational();
    BigInt s = numerator(r) * (denom / denominator(r));
    if (boost::multiprecision::abs(s) > limit) return false;
    out.push_back(to_lattice_int<I>(s));
  }
  return true;
}

}  // namespace balab::detail
