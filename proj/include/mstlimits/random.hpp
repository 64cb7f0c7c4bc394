#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mst {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used only to derive seeds, never as a sample source.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed splitting rule: a substream is identified by (master seed, task label,
// index...). Each component is folded in through mix64, so adding a new task
// label never perturbs the streams of existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t i = 0, std::uint64_t j = 0) {
  std::uint64_t s = mix64(master ^ mix64(hash_label(label)));
  s = mix64(s ^ mix64(i + 0x632be59bd9b4e019ULL));
  s = mix64(s ^ mix64(j + 0x8cb92ba72f3d8dd7ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t i = 0,
                    std::uint64_t j = 0) {
  return Rng(derive_seed(master, label, i, j));
}

// Uniform on the open interval (0,1); 53 random bits, never returns 0.
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double rate) { return -std::log(uniform01(rng)) / rate; }

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace mst
