#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "molrel/core/error.hpp"

namespace molrel::chem {

enum class ReprKind { smiles, selfies, smarts };

inline const char* repr_kind_name(ReprKind k) {
  switch (k) {
    case ReprKind::smiles: return "smiles";
    case ReprKind::selfies: return "selfies";
    case ReprKind::smarts: return "smarts";
  }
  return "?";
}

struct Atom {
  std::string element;
  int charge = 0;
  bool aromatic = false;
  int h_count = 0;     // resolved hydrogen count (implicit hydrogens folded in)
  bool bracket = false;  // written as a bracket expression; no implicit H fill
};

enum class BondOrder : int { single = 1, double_ = 2, triple = 3, aromatic = 4 };

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::single;
  bool in_ring = false;
};

// Parsed chemical entity. Hydrogens live as counts on their heavy atom.
struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string source_text;
  ReprKind source_kind = ReprKind::smiles;

  int num_atoms() const { return static_cast<int>(atoms.size()); }
  int num_bonds() const { return static_cast<int>(bonds.size()); }

  // Heavy-atom degree.
  int degree(int atom) const {
    int d = 0;
    for (const Bond& b : bonds)
      if (b.a == atom || b.b == atom) ++d;
    return d;
  }

  std::vector<int> neighbors(int atom) const {
    std::vector<int> out;
    for (const Bond& b : bonds) {
      if (b.a == atom) out.push_back(b.b);
      if (b.b == atom) out.push_back(b.a);
    }
    return out;
  }

  const Bond* find_bond(int a, int b) const {
    for (const Bond& bd : bonds)
      if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) return &bd;
    return nullptr;
  }
};

// Parse a 1D molecular string. SMILES covers the organic subset, bracket
// atoms with charge and hydrogen counts, branches, ring closures including
// %nn, bond symbols - = # :, and aromatic lowercase atoms. Stereo markers
// and isotopes are rejected with a clear message. SELFIES strings are
// decoded by the standard derivation rules. Syntax errors carry the byte
// offset of the offending character.
Molecule parse(std::string_view text, ReprKind kind);

namespace detail {
// Shared by the SMILES parser and the featurizer / SELFIES decoder.
bool known_element(const std::string& el);
int max_valence(const std::string& el);
int implicit_h_fill(const std::string& el, bool aromatic, int bond_order_sum, int charge);
// Marks in-ring bonds (non-bridge edges) and validates aromatic consistency.
void finalize_molecule(Molecule& mol);
Molecule parse_smiles(std::string_view text, bool smarts_mode);
Molecule parse_selfies(std::string_view text);
Molecule smarts_skeleton(std::string_view text);
}  // namespace detail

}  // namespace molrel::chem
