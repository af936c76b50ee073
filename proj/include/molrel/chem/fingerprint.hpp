#pragma once

#include <array>
#include <cstdint>

#include "molrel/chem/molecule.hpp"

namespace molrel::chem {

// ECFP-style circular fingerprint: radius 2, 2048 bits, FNV-1a 64-bit
// hashing of canonical atom environments. A deterministic function of the
// molecular graph, invariant under atom reordering.
struct Fingerprint {
  static constexpr int kBits = 2048;
  static constexpr int kRadius = 2;
  std::array<uint64_t, kBits / 64> words{};

  void set(uint64_t bit) { words[(bit % kBits) / 64] |= 1ULL << (bit % 64); }
  bool test(int bit) const {
    return (words[static_cast<size_t>(bit / 64)] >> (bit % 64)) & 1ULL;
  }
  int popcount() const;
  bool operator==(const Fingerprint& other) const { return words == other.words; }
};

Fingerprint fingerprint(const Molecule& mol);

// |a AND b| / |a OR b|; 1.0 when both are all-zero.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace molrel::chem
