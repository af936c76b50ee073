#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "molrel/chem/molecule.hpp"

namespace molrel::chem {

// One pattern atom: a conjunction of primitives. Element lists come from
// comma alternatives like [F,Cl,Br,I].
struct SmartsAtom {
  std::vector<std::string> elements;   // empty = any element
  std::optional<bool> aromatic;
  std::optional<int> connectivity;     // X: heavy degree + hydrogen count
  std::optional<int> h_count;          // H: exact hydrogen count
  std::optional<int> charge;
};

enum class SmartsBond { single_or_aromatic, single, double_, triple, aromatic };

struct SmartsPattern {
  std::vector<SmartsAtom> atoms;
  std::vector<std::tuple<int, int, SmartsBond>> bonds;
  std::string source;
};

// Restricted SMARTS: the SMILES atom/bond vocabulary plus X / H / charge
// primitives, comma alternatives, and ';'/'&' conjunction inside brackets.
SmartsPattern parse_smarts(std::string_view text);

// Subgraph-isomorphism test (VF2-style backtracking).
bool matches_pattern(const Molecule& mol, const SmartsPattern& pattern);

struct NamedPattern {
  std::string name;
  std::string smarts;
  SmartsPattern pattern;
};

// The built-in 10-entry table, loaded from the versioned text asset.
// Table order is the reporting order.
const std::vector<NamedPattern>& builtin_patterns();

std::vector<std::string> match_substructures(const Molecule& mol);
std::vector<std::string> match_substructures(const Molecule& mol,
                                             const std::vector<NamedPattern>& table);

}  // namespace molrel::chem
