#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "molrel/core/error.hpp"

namespace molrel::lm {

// Byte-level vocabulary (0..255) plus specials. No learned merges, so
// template round-trips are byte-exact by construction.
inline constexpr int kByteVocab = 256;
inline constexpr int kPadId = 256;
inline constexpr int kBosId = 257;
inline constexpr int kEosId = 258;
inline constexpr int kMol0Id = 259;  // mol_0 .. mol_7
inline constexpr int kNumMolSlots = 8;
inline constexpr int kVocabSize = kMol0Id + kNumMolSlots;  // 267

inline bool is_mol_placeholder(int id) { return id >= kMol0Id && id < kMol0Id + kNumMolSlots; }

inline std::vector<int> tokenize(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(static_cast<int>(c));
  return ids;
}

// Inverse of tokenize on special-free text; specials produce no bytes.
inline std::string detokenize(const std::vector<int>& ids) {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= kVocabSize) fail_validation("detokenize: id ", id, " out of vocabulary");
    if (id < kByteVocab) out.push_back(static_cast<char>(id));
  }
  return out;
}

inline std::string token_name(int id) {
  if (id < kByteVocab) return std::string(1, static_cast<char>(id));
  if (id == kPadId) return "<pad>";
  if (id == kBosId) return "<bos>";
  if (id == kEosId) return "<eos>";
  if (is_mol_placeholder(id)) return "<mol_" + std::to_string(id - kMol0Id) + ">";
  return "<invalid>";
}

}  // namespace molrel::lm
